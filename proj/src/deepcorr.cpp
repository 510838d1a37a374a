#include "flowcorr/deepcorr.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_set>

#include "flowcorr/error.hpp"
#include "flowcorr/nn/adam.hpp"
#include "flowcorr/nn/loss.hpp"
#include "flowcorr/random.hpp"

namespace flowcorr::deepcorr {

namespace {

// Sub-seed streams.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kNegativeStream = 2;
constexpr std::uint64_t kShuffleStream = 3;

}  // namespace

PairLayout PresetConfig::layout() const {
  return {preset == Preset::tor ? PairMode::tor : PairMode::stepping, stepping_direction};
}

std::size_t PresetConfig::scaled(std::size_t width) const {
  const auto w = static_cast<std::size_t>(std::floor(static_cast<double>(width) * scale));
  return std::max<std::size_t>(w, 1);
}

PresetConfig tor_preset() { return PresetConfig{}; }

PresetConfig stepping_preset() {
  PresetConfig c;
  c.preset = Preset::stepping;
  c.k1 = 200;
  c.w1 = 10;
  c.fc_sizes = {500, 100};
  return c;
}

std::vector<nn::LayerSpec> preset_layers(const PresetConfig& c) {
  using nn::LayerSpec;
  if (!(c.scale > 0.0) || !std::isfinite(c.scale))
    throw ConfigError("scale factor must be positive");
  std::vector<LayerSpec> layers;
  if (c.preset == Preset::tor) {
    layers.push_back(LayerSpec::conv2d(c.scaled(c.k1), {2, c.w1}, {2, 1}));
    layers.push_back(LayerSpec::relu());
    layers.push_back(LayerSpec::maxpool(c.pool, c.pool_stride));
    layers.push_back(LayerSpec::conv2d(c.scaled(c.k2), {c.conv2_height, c.w2}, {4, 1}));
    layers.push_back(LayerSpec::relu());
    layers.push_back(LayerSpec::maxpool(c.pool, c.pool_stride));
  } else {
    layers.push_back(LayerSpec::conv2d(c.scaled(c.k1), {2, c.w1}, {1, 1}));
    layers.push_back(LayerSpec::relu());
    layers.push_back(LayerSpec::maxpool(c.pool, c.pool_stride));
  }
  layers.push_back(LayerSpec::flatten());
  for (const auto width : c.fc_sizes) {
    layers.push_back(LayerSpec::dense(c.scaled(width)));
    layers.push_back(LayerSpec::relu());
  }
  layers.push_back(LayerSpec::dense(1));
  layers.push_back(LayerSpec::sigmoid());
  return layers;
}

nn::Shape preset_input_shape(const PresetConfig& c) {
  return {1, c.layout().rows(), c.flow_len};
}

std::vector<nn::Shape> preset_shape_trace(const PresetConfig& c) {
  if (c.flow_len < c.w1)
    throw ConfigError("flow length " + std::to_string(c.flow_len) + " is shorter than w1 = " +
                      std::to_string(c.w1));
  const auto layers = preset_layers(c);
  try {
    return nn::shape_trace(preset_input_shape(c), layers);
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("preset does not fit flow length: ") + e.what());
  }
}

nn::Network build_network(const PresetConfig& c) {
  preset_shape_trace(c);
  nn::NetworkInfo info{to_string(c.preset), c.flow_len, c.scaling, c.layout()};
  nn::Network net(preset_input_shape(c), preset_layers(c), std::move(info));
  net.init_weights(derive_seed(c.seed, kInitStream));
  return net;
}

DetectionThreshold::DetectionThreshold(double value) : eta(value) {
  if (!(value >= 0.0 && value <= 1.0))
    throw ParameterError("detection threshold must lie in [0, 1]");
}

namespace {

void check_pair(const nn::Network& net, const PairLayout& layout, std::size_t flow_len) {
  const auto& info = net.info();
  if (layout.mode != info.layout.mode)
    throw ShapeError(std::string("pair mode '") + to_string(layout.mode) +
                     "' does not match network mode '" + to_string(info.layout.mode) + "'");
  if (flow_len != info.flow_len)
    throw ShapeError("pair flow length " + std::to_string(flow_len) +
                     " does not match network flow length " + std::to_string(info.flow_len));
}

bool is_ipd_row(PairMode mode, std::size_t row) { return mode == PairMode::stepping || row < 4; }

}  // namespace

double score_pair(const nn::Network& net, const PairMatrix& pair) {
  check_pair(net, pair.layout, pair.flow_len);
  nn::Tensor input(net.input_shape(), pair.values);
  const auto& target = net.info().scaling;
  if (!(pair.scaling == target)) {
    if (pair.scaling.ipd_scale == 0.0 || pair.scaling.size_scale == 0.0)
      throw ParameterError("pair was built with a zero scaling factor");
    const double ipd_ratio = target.ipd_scale / pair.scaling.ipd_scale;
    const double size_ratio = target.size_scale / pair.scaling.size_scale;
    for (std::size_t r = 0; r < pair.rows(); ++r) {
      const double k = is_ipd_row(pair.layout.mode, r) ? ipd_ratio : size_ratio;
      for (std::size_t t = 0; t < pair.flow_len; ++t) input.data[r * pair.flow_len + t] *= k;
    }
  }
  return nn::network_forward(net, input);
}

FlowFeatures network_features(const nn::Network& net, const Flow& flow) {
  return compute_features(flow, net.info().flow_len, net.info().scaling);
}

namespace {

void fill_batch(const PairLayout& layout, std::span<const FlowFeatures> entries,
                std::span<const FlowFeatures> exits, std::span<const PairIndex> pairs,
                nn::Batch& batch) {
  for (std::size_t b = 0; b < pairs.size(); ++b)
    fill_pair_rows(entries[pairs[b].entry], exits[pairs[b].exit], layout,
                   batch.col(static_cast<Eigen::Index>(b)).data());
}

}  // namespace

std::vector<double> score_pairs(const nn::Network& net, std::span<const FlowFeatures> entries,
                                std::span<const FlowFeatures> exits,
                                std::span<const PairIndex> pairs, std::size_t batch) {
  const auto& info = net.info();
  for (const auto* side : {&entries, &exits})
    for (const auto& f : *side) {
      check_pair(net, info.layout, f.flow_len);
      if (!(f.scaling == info.scaling))
        throw ParameterError("features were computed with a scaling other than the network's");
    }
  std::vector<double> out(pairs.size());
  const auto rows = static_cast<Eigen::Index>(net.input_shape().size());
  nn::Batch in;
  batch = std::max<std::size_t>(batch, 1);
  for (std::size_t b0 = 0; b0 < pairs.size(); b0 += batch) {
    const auto chunk = pairs.subspan(b0, std::min(batch, pairs.size() - b0));
    in.resize(rows, static_cast<Eigen::Index>(chunk.size()));
    fill_batch(info.layout, entries, exits, chunk, in);
    const auto p = nn::forward_batch(net, in);
    std::copy(p.data(), p.data() + p.size(), out.begin() + static_cast<std::ptrdiff_t>(b0));
  }
  return out;
}

std::vector<PairIndex> sample_negative_indices(std::size_t associations, std::size_t neg,
                                               std::uint64_t seed) {
  if (associations == 0) throw ParameterError("negative sampling needs at least one association");
  const std::size_t others = associations - 1;
  if (neg > others)
    throw ParameterError("cannot draw " + std::to_string(neg) + " negatives per entry from " +
                         std::to_string(others) + " other exits");
  std::vector<PairIndex> out;
  out.reserve(associations * neg);
  std::unordered_set<std::size_t> chosen;
  std::vector<std::size_t> picks;
  for (std::size_t a = 0; a < associations; ++a) {
    Rng rng(derive_seed(seed, a));
    chosen.clear();
    // Floyd's algorithm over [0, others); index >= a maps to index + 1.
    for (std::size_t j = others - neg; j < others; ++j) {
      const auto t = static_cast<std::size_t>(uniform_index(rng, j + 1));
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    picks.assign(chosen.begin(), chosen.end());
    std::sort(picks.begin(), picks.end());
    for (const auto t : picks) out.push_back({a, t >= a ? t + 1 : t, 0});
  }
  return out;
}

std::pair<std::vector<FlowFeatures>, std::vector<FlowFeatures>> dataset_features(
    const Dataset& dataset, std::size_t flow_len, const ScalingConfig& scaling) {
  std::vector<FlowFeatures> entries, exits;
  entries.reserve(dataset.size());
  exits.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    entries.push_back(compute_features(dataset.entry(i), flow_len, scaling));
    exits.push_back(compute_features(dataset.exit(i), flow_len, scaling));
  }
  return {std::move(entries), std::move(exits)};
}

std::vector<LabeledPair> sample_negatives(const Dataset& dataset, std::size_t neg,
                                          std::uint64_t seed, std::size_t flow_len,
                                          const ScalingConfig& scaling, const PairLayout& layout) {
  const auto idx = sample_negative_indices(dataset.size(), neg, seed);
  const auto [entries, exits] = dataset_features(dataset, flow_len, scaling);
  std::vector<LabeledPair> out;
  out.reserve(idx.size());
  for (const auto& p : idx) {
    const auto& a = dataset.manifest.entries;
    out.push_back({make_pair_matrix(entries[p.entry], exits[p.exit], layout), 0,
                   a[p.entry].entry_id, a[p.exit].exit_id});
  }
  return out;
}

double mean_loss(const nn::Network& net, std::span<const FlowFeatures> entries,
                 std::span<const FlowFeatures> exits, std::span<const PairIndex> pairs) {
  if (pairs.empty()) throw ParameterError("mean_loss: no pairs");
  const auto p = score_pairs(net, entries, exits, pairs);
  double total = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    total += nn::cross_entropy_loss(p[i], pairs[i].label);
  return total / static_cast<double>(pairs.size());
}

TrainReport train(const Dataset& dataset, const PresetConfig& config,
                  const EpochCallback& on_epoch) {
  return train(dataset, config, build_network(config), on_epoch);
}

TrainReport train(const Dataset& dataset, const PresetConfig& config, nn::Network initial,
                  const EpochCallback& on_epoch) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  if (dataset.size() == 0) throw ParameterError("training dataset is empty");
  if (config.batch == 0) throw ConfigError("batch size must be positive");
  if (!(config.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");

  TrainReport report;
  report.network = std::move(initial);
  auto& net = report.network;
  check_pair(net, config.layout(), config.flow_len);
  if (!(net.info().scaling == config.scaling))
    throw ConfigError("network scaling differs from the training configuration");

  const std::size_t n = dataset.size();
  report.positives = n;
  report.negatives = n * config.neg;
  if (config.epochs == 0) return report;
  if (config.neg > n - 1)
    throw ParameterError("cannot draw " + std::to_string(config.neg) + " negatives per entry from " +
                         std::to_string(n - 1) + " other exits");

  const auto [entries, exits] = dataset_features(dataset, config.flow_len, config.scaling);
  const auto layout = config.layout();
  const auto rows = static_cast<Eigen::Index>(net.input_shape().size());

  nn::AdamState adam;
  adam.config.learning_rate = config.learning_rate;
  auto grads = net.zero_gradients();
  nn::Workspace ws;
  nn::Batch input;
  std::vector<double> labels;

  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  bool capped = false;
  for (std::size_t epoch = 0; epoch < config.epochs && !capped; ++epoch) {
    const auto epoch_start = clock::now();
    auto samples = sample_negative_indices(
        n, config.neg,
        derive_seed(config.seed, kNegativeStream, config.resample_negatives ? epoch : 0));
    for (std::size_t a = 0; a < n; ++a) samples.push_back({a, a, 1});
    Rng rng(derive_seed(config.seed, kShuffleStream, epoch));
    for (std::size_t i = samples.size(); i > 1; --i)
      std::swap(samples[i - 1], samples[uniform_index(rng, i)]);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t b0 = 0, batch_no = 0; b0 < samples.size(); b0 += config.batch, ++batch_no) {
      const auto chunk = std::span<const PairIndex>(samples).subspan(
          b0, std::min(config.batch, samples.size() - b0));
      input.resize(rows, static_cast<Eigen::Index>(chunk.size()));
      fill_batch(layout, entries, exits, chunk, input);
      labels.resize(chunk.size());
      for (std::size_t i = 0; i < chunk.size(); ++i) labels[i] = chunk[i].label;

      nn::forward_batch(net, input, &ws);
      grads.set_zero();
      const double loss = nn::backward_batch(net, ws, labels, grads);
      if (!std::isfinite(loss))
        throw NumericError("non-finite loss " + std::to_string(loss) + " at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(batch_no));
      const double inv = 1.0 / static_cast<double>(chunk.size());
      for (auto& w : grads.weights)
        for (auto& g : w) g *= inv;
      for (auto& b : grads.bias)
        for (auto& g : b) g *= inv;
      nn::adam_step(adam, net, grads);

      epoch_loss += loss;
      seen += chunk.size();
      ++report.steps;
      if (config.max_steps != 0 && report.steps >= config.max_steps) {
        capped = true;
        break;
      }
    }
    const double mean = epoch_loss / static_cast<double>(seen);
    report.loss_history.push_back(mean);
    if (on_epoch)
      on_epoch({epoch, mean, report.steps,
                std::chrono::duration<double>(clock::now() - epoch_start).count()});

    if (mean < config.target_loss) break;
    if (config.patience != 0) {
      if (best - mean < config.min_improvement) {
        if (++stale >= config.patience) {
          report.stopped_early = true;
          break;
        }
      } else {
        stale = 0;
      }
      best = std::min(best, mean);
    }
  }
  report.seconds = std::chrono::duration<double>(clock::now() - started).count();
  return report;
}

const char* to_string(Preset preset) { return preset == Preset::tor ? "tor" : "stepping"; }

Preset parse_preset(const std::string& text) {
  if (text == "tor") return Preset::tor;
  if (text == "stepping") return Preset::stepping;
  throw ParseError("unknown preset '" + text + "'");
}

}  // namespace flowcorr::deepcorr

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flowcorr/flowdata.hpp"
#include "flowcorr/ingest.hpp"
#include "flowcorr/nn/network.hpp"

namespace flowcorr::deepcorr {

enum class Preset { tor, stepping };

/// Architecture and training hyperparameters. Kernel counts and FC widths
/// are multiplied by `scale` (floored, minimum 1) when the network is built.
struct PresetConfig {
  Preset preset = Preset::tor;
  std::size_t flow_len = 300;

  std::size_t k1 = 2000;  // tor conv 1 kernels; stepping conv kernels
  std::size_t k2 = 1000;  // tor conv 2 kernels
  std::size_t w1 = 30;
  std::size_t w2 = 10;
  std::size_t conv2_height = 4;
  std::vector<std::size_t> fc_sizes{3000, 800, 100};
  nn::Window pool{1, 5};
  nn::Window pool_stride{1, 1};
  double scale = 1.0;

  std::size_t neg = 199;
  double learning_rate = 1e-4;
  std::size_t epochs = 200;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
  bool resample_negatives = true;
  std::size_t patience = 10;  // early stop; 0 disables
  double min_improvement = 1e-5;
  std::size_t max_steps = 0;  // 0 = no cap
  double target_loss = 0.0;   // stop once an epoch's mean loss is below; 0 disables

  ScalingConfig scaling;
  Direction stepping_direction = Direction::upstream;

  PairLayout layout() const;
  std::size_t scaled(std::size_t width) const;
};

/// 2000/1000 kernels, (2,30) and (4,10) kernels, FC 3000/800/100.
PresetConfig tor_preset();
/// 200 kernels of (2,10), FC 500/100.
PresetConfig stepping_preset();

std::vector<nn::LayerSpec> preset_layers(const PresetConfig& config);
nn::Shape preset_input_shape(const PresetConfig& config);
/// Shape chain of the preset without allocating any weights.
std::vector<nn::Shape> preset_shape_trace(const PresetConfig& config);

/// Network with seeded initial weights; ConfigError when the preset does
/// not fit the flow length.
nn::Network build_network(const PresetConfig& config);

struct DetectionThreshold {
  double eta = 0.5;

  explicit DetectionThreshold(double value);
};

/// Correlated iff p > eta.
inline bool decide(double p, DetectionThreshold eta) { return p > eta.eta; }

/// Network output for one pair. Rows are rescaled to the network's
/// training-time scaling if the pair was built with another one.
double score_pair(const nn::Network& net, const PairMatrix& pair);

/// Features of `flow` as the network expects them.
FlowFeatures network_features(const nn::Network& net, const Flow& flow);

struct PairIndex {
  std::size_t entry = 0;
  std::size_t exit = 0;
  int label = 0;

  bool operator==(const PairIndex&) const = default;
};

/// Scores (entries[p.entry], exits[p.exit]) for every p, in batches.
std::vector<double> score_pairs(const nn::Network& net, std::span<const FlowFeatures> entries,
                                std::span<const FlowFeatures> exits,
                                std::span<const PairIndex> pairs, std::size_t batch = 256);

/// For every association a, `neg` distinct exits of other associations,
/// uniformly without replacement. Sorted by (entry, exit).
std::vector<PairIndex> sample_negative_indices(std::size_t associations, std::size_t neg,
                                               std::uint64_t seed);

std::vector<LabeledPair> sample_negatives(const Dataset& dataset, std::size_t neg,
                                          std::uint64_t seed, std::size_t flow_len = 300,
                                          const ScalingConfig& scaling = {},
                                          const PairLayout& layout = {});

/// Mean cross-entropy of the network over the given pairs.
double mean_loss(const nn::Network& net, std::span<const FlowFeatures> entries,
                 std::span<const FlowFeatures> exits, std::span<const PairIndex> pairs);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::size_t steps = 0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<double> loss_history;  // one mean loss per epoch run
  nn::Network network;
  double seconds = 0.0;
  std::size_t positives = 0;  // per epoch
  std::size_t negatives = 0;  // per epoch
  std::size_t steps = 0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Adam on the mean cross-entropy over all associated pairs plus `neg`
/// sampled negatives per entry, in shuffled mini-batches.
TrainReport train(const Dataset& dataset, const PresetConfig& config,
                  const EpochCallback& on_epoch = {});

/// Same, continuing from an existing network.
TrainReport train(const Dataset& dataset, const PresetConfig& config, nn::Network initial,
                  const EpochCallback& on_epoch = {});

/// All-features helper: compute_features for every entry / exit of the dataset.
std::pair<std::vector<FlowFeatures>, std::vector<FlowFeatures>> dataset_features(
    const Dataset& dataset, std::size_t flow_len, const ScalingConfig& scaling);

const char* to_string(Preset preset);
Preset parse_preset(const std::string& text);

}  // namespace flowcorr::deepcorr

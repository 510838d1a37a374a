#include "flowcorr/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "flowcorr/error.hpp"
#include "flowcorr/parallel.hpp"
#include "flowcorr/random.hpp"

namespace flowcorr::simnet {

void ChannelModel::validate() const {
  if (!(jitter_std >= 0.0) || !std::isfinite(jitter_std))
    throw ParameterError("jitter standard deviation must be >= 0");
  if (!(drop_rate >= 0.0 && drop_rate <= 1.0))
    throw ParameterError("drop rate must lie in [0, 1]");
}

void BaseFlowModel::validate() const {
  if (packet_count == 0) throw ParameterError("packet count must be >= 1");
  if (!(mean_ipd > 0.0)) throw ParameterError("mean IPD must be positive");
  if (!(size_sigma >= 0.0)) throw ParameterError("size sigma must be >= 0");
  if (min_size <= 0 || max_size < min_size) throw ParameterError("invalid size bounds");
  const double lo = std::log(static_cast<double>(min_size) - 0.5);
  const double hi = std::log(static_cast<double>(max_size) + 0.5);
  if (size_sigma == 0.0 && (size_mu < lo || size_mu > hi))
    throw ParameterError("degenerate size distribution lies outside the size bounds");
}

namespace {

double standard_normal(Rng& rng) {
  double u1;
  do {
    u1 = uniform01(rng);
  } while (u1 == 0.0);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t sample_size(Rng& rng, const BaseFlowModel& m) {
  while (true) {
    const auto s = std::llround(std::exp(m.size_mu + m.size_sigma * standard_normal(rng)));
    if (s >= m.min_size && s <= m.max_size) return s;
  }
}

}  // namespace

Flow generate_base_flow(const BaseFlowModel& model, const std::string& id) {
  model.validate();
  Rng rng(model.seed);
  std::vector<PacketRecord> packets;
  packets.reserve(model.packet_count);
  double t = 0.0;
  for (std::size_t k = 0; k < model.packet_count; ++k) {
    if (k > 0) t += -model.mean_ipd * std::log1p(-uniform01(rng));
    packets.push_back({t, sample_size(rng, model), Direction::upstream});
  }
  return Flow(id, std::move(packets));
}

Flow apply_channel(const Flow& flow, const ChannelModel& channel, const std::string& id) {
  channel.validate();
  if (flow.empty()) throw EmptyFlowError("flow '" + flow.id() + "' has no packets");
  Rng rng(channel.seed);
  const double scale = channel.jitter_std / std::numbers::sqrt2;
  std::vector<PacketRecord> out;
  out.reserve(flow.packets().size());
  for (const auto& p : flow.packets()) {
    // Both draws happen for every packet so the jitter stream does not
    // depend on which packets were dropped.
    const bool dropped = uniform01(rng) < channel.drop_rate;
    const double noise = scale > 0.0 ? sample_laplace(rng, scale) : 0.0;
    if (dropped) continue;
    out.push_back({p.timestamp + noise, p.size, p.direction});
  }
  const auto& name = id.empty() ? flow.id() : id;
  if (out.empty()) throw EmptyFlowError("channel dropped every packet of flow '" + name + "'");

  std::stable_sort(out.begin(), out.end(), [](const PacketRecord& a, const PacketRecord& b) {
    return a.timestamp < b.timestamp;
  });
  // Timestamps are relative to an arbitrary epoch; shift so none is negative.
  const double earliest = out.front().timestamp;
  if (earliest < 0.0)
    for (auto& p : out) p.timestamp = std::max(0.0, p.timestamp - earliest);
  return Flow(name, std::move(out));
}

std::string ingress_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%06zu_in", index);
  return buf;
}

std::string egress_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%06zu_out", index);
  return buf;
}

Dataset generate_paired_dataset(std::size_t n_pairs, const BaseFlowModel& base,
                                const ChannelModel& channel, std::uint64_t seed,
                                std::size_t jobs) {
  if (n_pairs == 0) throw ParameterError("need at least one pair");
  base.validate();
  channel.validate();

  std::vector<std::pair<Flow, Flow>> pairs(n_pairs);
  parallel_for(n_pairs, jobs, [&](std::size_t i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      BaseFlowModel b = base;
      ChannelModel c = channel;
      b.seed = derive_seed(seed, 10 + 2 * attempt, i);
      c.seed = derive_seed(seed, 11 + 2 * attempt, i);
      try {
        Flow in = generate_base_flow(b, ingress_id(i));
        Flow out = apply_channel(in, c, egress_id(i));
        pairs[i] = {std::move(in), std::move(out)};
        return;
      } catch (const EmptyFlowError&) {
        if (attempt == 1)
          throw EmptyFlowError("pair " + std::to_string(i) +
                               ": channel dropped every packet twice");
      }
    }
  });

  Dataset d;
  d.split = Split::train;
  for (auto& [in, out] : pairs) {
    d.manifest.entries.push_back({in.id(), out.id()});
    d.flows.emplace(in.id(), std::move(in));
    d.flows.emplace(out.id(), std::move(out));
  }
  return d;
}

}  // namespace flowcorr::simnet

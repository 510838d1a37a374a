#pragma once

#include <cstdint>
#include <string>

#include "flowcorr/flowdata.hpp"
#include "flowcorr/ingest.hpp"

namespace flowcorr::simnet {

/// Relay channel: Laplace timing jitter (given as a standard deviation) and
/// independent per-packet drops.
struct ChannelModel {
  double jitter_std = 0.005;
  double drop_rate = 0.01;
  std::uint64_t seed = 0;

  static ChannelModel identity() { return {0.0, 0.0, 0}; }
  void validate() const;
};

/// One-directional source flow: exponential IPDs and log-normal sizes
/// truncated to [min_size, max_size].
struct BaseFlowModel {
  std::size_t packet_count = 300;
  double mean_ipd = 0.05;
  double size_mu = 6.0;
  double size_sigma = 0.6;
  std::int64_t min_size = 40;
  std::int64_t max_size = 1500;
  std::uint64_t seed = 0;

  void validate() const;
};

Flow generate_base_flow(const BaseFlowModel& model, const std::string& id = "base");

/// Drops, jitters and re-sorts the packets of `flow`; sizes are untouched.
/// Throws EmptyFlowError if every packet is dropped.
Flow apply_channel(const Flow& flow, const ChannelModel& channel, const std::string& id = {});

/// `n_pairs` connections (ingress, apply_channel(ingress)) with per-pair
/// seeds derived from `seed`. `jobs` workers; output does not depend on it.
Dataset generate_paired_dataset(std::size_t n_pairs, const BaseFlowModel& base,
                                const ChannelModel& channel, std::uint64_t seed,
                                std::size_t jobs = 1);

std::string ingress_id(std::size_t index);
std::string egress_id(std::size_t index);

}  // namespace flowcorr::simnet

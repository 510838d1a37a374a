#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "flowcorr/flowdata.hpp"

namespace flowcorr::statcorr {

enum class MetricKind { pearson, cosine, spearman, mutual_information };

inline constexpr MetricKind kAllMetrics[] = {MetricKind::pearson, MetricKind::cosine,
                                             MetricKind::spearman,
                                             MetricKind::mutual_information};

enum class Channel { ipd_up, ipd_down, size_up, size_down };

inline constexpr Channel kAllChannels[] = {Channel::ipd_up, Channel::ipd_down, Channel::size_up,
                                           Channel::size_down};

inline constexpr std::size_t kDefaultBins = 8;

/// Sample Pearson coefficient. Zero variance in either input yields 0.
double pearson(std::span<const double> x, std::span<const double> y);

struct CosineResult {
  double value = 0.0;
  bool degenerate = false;  // one of the inputs was all zeros
};

CosineResult cosine(std::span<const double> x, std::span<const double> y);

/// Pearson over average ranks (ties share the mean of their positions).
double spearman(std::span<const double> x, std::span<const double> y);

/// 1-based average ranks.
std::vector<double> average_ranks(std::span<const double> v);

/// Plug-in mutual information in bits over an equal-width bins×bins
/// histogram spanning each vector's own [min, max].
double mutual_information(std::span<const double> x, std::span<const double> y,
                          std::size_t bins = kDefaultBins);

/// Channel-wise metric between corresponding vectors of fi and fj,
/// averaged over `channels`.
double baseline_score(const FlowFeatures& fi, const FlowFeatures& fj, MetricKind metric,
                      std::span<const Channel> channels = kAllChannels,
                      std::size_t bins = kDefaultBins);

const std::vector<double>& channel_vector(const FlowFeatures& f, Channel c);

const char* to_string(MetricKind metric);
MetricKind parse_metric(const std::string& text);
const char* to_string(Channel channel);
Channel parse_channel(const std::string& text);

}  // namespace flowcorr::statcorr

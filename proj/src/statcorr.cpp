#include "flowcorr/statcorr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowcorr/error.hpp"

namespace flowcorr::statcorr {

namespace {

void require_same_length(std::span<const double> x, std::span<const double> y,
                         std::size_t min_len, const char* what) {
  if (x.size() != y.size())
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
  if (x.size() < min_len)
    throw DimensionError(std::string(what) + ": need at least " + std::to_string(min_len) +
                         " samples, got " + std::to_string(x.size()));
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pearson_unchecked(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<std::size_t> bin_indices(std::span<const double> v, std::size_t bins) {
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double width = *hi_it - lo;
  std::vector<std::size_t> out(v.size(), 0);
  if (width <= 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto b = static_cast<std::size_t>((v[i] - lo) / width * static_cast<double>(bins));
    out[i] = std::min(b, bins - 1);
  }
  return out;
}

// Entropy in bits of a count histogram. Counts are summed in sorted order so
// the result only depends on the multiset of counts.
double entropy_bits(std::vector<std::size_t> counts, std::size_t total) {
  std::sort(counts.begin(), counts.end());
  double acc = 0.0;
  for (const auto c : counts)
    if (c > 0) acc += static_cast<double>(c) * std::log2(static_cast<double>(c));
  return std::log2(static_cast<double>(total)) - acc / static_cast<double>(total);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y, 2, "pearson");
  return pearson_unchecked(x, y);
}

CosineResult cosine(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y, 1, "cosine");
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0.0 || ny == 0.0) return {0.0, true};
  return {std::clamp(dot / std::sqrt(nx * ny), -1.0, 1.0), false};
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean(i+1..j)
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y, 2, "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_unchecked(rx, ry);
}

double mutual_information(std::span<const double> x, std::span<const double> y,
                          std::size_t bins) {
  if (bins < 2) throw ParameterError("mutual_information: bins must be >= 2");
  if (x.size() != y.size())
    throw DimensionError("mutual_information: length mismatch (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
  if (x.size() < bins)
    throw ParameterError("mutual_information: need at least as many samples as bins");

  const auto bx = bin_indices(x, bins);
  const auto by = bin_indices(y, bins);
  std::vector<std::size_t> cx(bins, 0), cy(bins, 0), cxy(bins * bins, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++cx[bx[i]];
    ++cy[by[i]];
    ++cxy[bx[i] * bins + by[i]];
  }
  const std::size_t n = x.size();
  const double mi = entropy_bits(std::move(cx), n) + entropy_bits(std::move(cy), n) -
                    entropy_bits(std::move(cxy), n);
  return mi < 0.0 ? 0.0 : mi;
}

const std::vector<double>& channel_vector(const FlowFeatures& f, Channel c) {
  switch (c) {
    case Channel::ipd_up: return f.ipd_up;
    case Channel::ipd_down: return f.ipd_down;
    case Channel::size_up: return f.size_up;
    case Channel::size_down: return f.size_down;
  }
  throw ParameterError("unknown channel");
}

double baseline_score(const FlowFeatures& fi, const FlowFeatures& fj, MetricKind metric,
                      std::span<const Channel> channels, std::size_t bins) {
  if (channels.empty()) throw ParameterError("baseline_score: channel set is empty");
  if (fi.flow_len != fj.flow_len)
    throw DimensionError("baseline_score: flow lengths differ");
  double total = 0.0;
  for (const auto c : channels) {
    const auto& x = channel_vector(fi, c);
    const auto& y = channel_vector(fj, c);
    switch (metric) {
      case MetricKind::pearson: total += pearson(x, y); break;
      case MetricKind::cosine: total += cosine(x, y).value; break;
      case MetricKind::spearman: total += spearman(x, y); break;
      case MetricKind::mutual_information: total += mutual_information(x, y, bins); break;
    }
  }
  return total / static_cast<double>(channels.size());
}

const char* to_string(MetricKind metric) {
  switch (metric) {
    case MetricKind::pearson: return "pearson";
    case MetricKind::cosine: return "cosine";
    case MetricKind::spearman: return "spearman";
    case MetricKind::mutual_information: return "mi";
  }
  return "?";
}

MetricKind parse_metric(const std::string& text) {
  if (text == "pearson") return MetricKind::pearson;
  if (text == "cosine") return MetricKind::cosine;
  if (text == "spearman") return MetricKind::spearman;
  if (text == "mi" || text == "mutual_information") return MetricKind::mutual_information;
  throw ParseError("unknown metric '" + text + "'");
}

const char* to_string(Channel channel) {
  switch (channel) {
    case Channel::ipd_up: return "ipd_up";
    case Channel::ipd_down: return "ipd_down";
    case Channel::size_up: return "size_up";
    case Channel::size_down: return "size_down";
  }
  return "?";
}

Channel parse_channel(const std::string& text) {
  for (const auto c : kAllChannels)
    if (text == to_string(c)) return c;
  throw ParseError("unknown channel '" + text + "'");
}

}  // namespace flowcorr::statcorr

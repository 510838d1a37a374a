#include "flowcorr/harness.hpp"

#include "flowcorr/deepcorr.hpp"
#include "flowcorr/parallel.hpp"

namespace flowcorr::harness {

eval::ScoreMatrix blank_matrix(const Dataset& dataset) {
  eval::ScoreMatrix m;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    m.entry_ids.push_back(dataset.manifest.entries[i].entry_id);
    m.exit_ids.push_back(dataset.manifest.entries[i].exit_id);
    m.truth.push_back(i);
  }
  m.scores.assign(dataset.size() * dataset.size(), 0.0);
  return m;
}

namespace {

std::vector<FlowFeatures> features_of(const Dataset& dataset, bool entries, std::size_t flow_len,
                                      const ScalingConfig& scaling, std::size_t jobs) {
  std::vector<FlowFeatures> out(dataset.size());
  parallel_for(dataset.size(), jobs, [&](std::size_t i) {
    out[i] = compute_features(entries ? dataset.entry(i) : dataset.exit(i), flow_len, scaling);
  });
  return out;
}

}  // namespace

eval::ScoreMatrix deepcorr_matrix(const nn::Network& net, const Dataset& dataset,
                                  std::size_t jobs) {
  const auto& info = net.info();
  const auto entries = features_of(dataset, true, info.flow_len, info.scaling, jobs);
  const auto exits = features_of(dataset, false, info.flow_len, info.scaling, jobs);
  auto m = blank_matrix(dataset);
  eval::fill_scores(m, [&](std::size_t i, std::span<double> row) {
    std::vector<deepcorr::PairIndex> pairs(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) pairs[j] = {i, j, i == j};
    const auto p = deepcorr::score_pairs(net, entries, exits, pairs);
    std::copy(p.begin(), p.end(), row.begin());
  }, jobs);
  return m;
}

eval::ScoreMatrix baseline_matrix(const Dataset& dataset, statcorr::MetricKind metric,
                                  std::span<const statcorr::Channel> channels,
                                  std::size_t flow_len, std::size_t bins, std::size_t jobs) {
  const auto scaling = ScalingConfig::unit();
  const auto entries = features_of(dataset, true, flow_len, scaling, jobs);
  const auto exits = features_of(dataset, false, flow_len, scaling, jobs);
  auto m = blank_matrix(dataset);
  eval::fill_scores(m, [&](std::size_t i, std::span<double> row) {
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = statcorr::baseline_score(entries[i], exits[j], metric, channels, bins);
  }, jobs);
  return m;
}

Summary summarize(const eval::ScoreMatrix& m, double eta, std::span<const double> thresholds) {
  const auto sets = eval::split_scores(m);
  Summary s;
  s.entries = m.rows();
  s.exits = m.cols();
  s.positives = sets.pos.size();
  s.negatives = sets.neg.size();
  s.auc = eval::auc(sets.pos, sets.neg);
  s.raptor_accuracy = eval::raptor_accuracy(m);
  const auto full = eval::roc_sweep(sets.pos, sets.neg);
  for (const double fp : kReportedFpRates) s.tp_at_fp.emplace_back(fp, eval::tp_at_fp(full, fp));
  const double one[] = {eta};
  s.at_eta = eval::roc_sweep(sets.pos, sets.neg, one).points.front();
  s.roc = thresholds.empty() ? full : eval::roc_sweep(sets.pos, sets.neg, thresholds);
  return s;
}

}  // namespace flowcorr::harness

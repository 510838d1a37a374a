#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowcorr/eval.hpp"
#include "flowcorr/ingest.hpp"
#include "flowcorr/nn/network.hpp"
#include "flowcorr/statcorr.hpp"

namespace flowcorr::harness {

/// Ids and diagonal ground truth of `dataset`; scores zero.
eval::ScoreMatrix blank_matrix(const Dataset& dataset);

/// Network output for every (entry i, exit j) of the dataset.
eval::ScoreMatrix deepcorr_matrix(const nn::Network& net, const Dataset& dataset,
                                  std::size_t jobs = 1);

/// Baseline metric for every (entry i, exit j), on unit-scaled features.
eval::ScoreMatrix baseline_matrix(const Dataset& dataset, statcorr::MetricKind metric,
                                  std::span<const statcorr::Channel> channels,
                                  std::size_t flow_len = 300,
                                  std::size_t bins = statcorr::kDefaultBins, std::size_t jobs = 1);

inline constexpr double kReportedFpRates[] = {1e-3, 1e-2, 1e-1};

struct Summary {
  std::size_t entries = 0;
  std::size_t exits = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;  // every off-partner cell
  double auc = 0.0;
  double raptor_accuracy = 0.0;
  std::vector<std::pair<double, double>> tp_at_fp;  // (fp rate, tp)
  eval::RocPoint at_eta;
  eval::RocCurve roc;
};

/// ROC over `thresholds` (all distinct scores when empty) plus AUC,
/// argmax accuracy and TP at the reported FP rates.
Summary summarize(const eval::ScoreMatrix& m, double eta = 0.5,
                  std::span<const double> thresholds = {});

}  // namespace flowcorr::harness

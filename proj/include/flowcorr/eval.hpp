#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace flowcorr::eval {

/// All-pairs scores: rows are entry flows, columns exit flows, row-major.
/// truth[i] is the column of row i's true partner.
struct ScoreMatrix {
  std::vector<std::string> entry_ids;
  std::vector<std::string> exit_ids;
  std::vector<std::size_t> truth;
  std::vector<double> scores;

  std::size_t rows() const { return entry_ids.size(); }
  std::size_t cols() const { return exit_ids.size(); }
  double at(std::size_t i, std::size_t j) const { return scores[i * cols() + j]; }
  double& at(std::size_t i, std::size_t j) { return scores[i * cols() + j]; }

  /// Square matrix with identity ground truth and zero scores.
  static ScoreMatrix identity(std::size_t n);
};

/// Fills row i of a scores buffer of length cols.
using RowScorer = std::function<void(std::size_t row, std::span<double> out)>;

/// Rows are scored in parallel on `jobs` workers; results do not depend on jobs.
void fill_scores(ScoreMatrix& m, const RowScorer& scorer, std::size_t jobs = 1);

struct RocPoint {
  double eta = 0.0;
  double tp = 0.0;
  double fp = 0.0;

  bool operator==(const RocPoint&) const = default;
};

/// Points in the order of the thresholds given (ascending by default).
struct RocCurve {
  std::vector<RocPoint> points;
};

inline constexpr double kBelowAll = -std::numeric_limits<double>::infinity();

/// -inf sentinel, 0, 1 and every distinct observed score, ascending.
std::vector<double> default_thresholds(std::span<const double> pos, std::span<const double> neg);

/// TP = |{p in pos : p > eta}| / |pos|, FP likewise over neg.
RocCurve roc_sweep(std::span<const double> pos, std::span<const double> neg,
                   std::span<const double> thresholds);
RocCurve roc_sweep(std::span<const double> pos, std::span<const double> neg);

/// Mann-Whitney: fraction of (pos, neg) pairs ordered correctly, ties 1/2.
double auc(std::span<const double> pos, std::span<const double> neg);

/// Best TP over curve points whose FP does not exceed max_fp.
double tp_at_fp(const RocCurve& curve, double max_fp);

/// Each row's argmax column (lowest index on ties) is its declared match;
/// returns the fraction of rows matched to their true partner.
double raptor_accuracy(const ScoreMatrix& m);

/// Scores of true-partner cells and of all other cells.
struct ScoreSets {
  std::vector<double> pos;
  std::vector<double> neg;
};
ScoreSets split_scores(const ScoreMatrix& m);

struct LatencyStats {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  std::size_t samples = 0;
};

/// Times correlator(i) for every pair index once per repetition, after an
/// untimed warm-up pass. Needs pairs * repetitions >= 100.
LatencyStats benchmark_correlation_time(const std::function<double(std::size_t)>& correlator,
                                        std::size_t pairs, std::size_t repetitions);

void write_roc_csv(std::ostream& out, const RocCurve& curve);
void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);
void write_score_matrix_csv(std::ostream& out, const ScoreMatrix& m);
void write_score_matrix_csv(const std::filesystem::path& path, const ScoreMatrix& m);

std::string format_double(double v);

}  // namespace flowcorr::eval

#include "flowcorr/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "flowcorr/error.hpp"
#include "flowcorr/parallel.hpp"

namespace flowcorr::eval {

ScoreMatrix ScoreMatrix::identity(std::size_t n) {
  ScoreMatrix m;
  for (std::size_t i = 0; i < n; ++i) {
    m.entry_ids.push_back("e" + std::to_string(i));
    m.exit_ids.push_back("x" + std::to_string(i));
    m.truth.push_back(i);
  }
  m.scores.assign(n * n, 0.0);
  return m;
}

void fill_scores(ScoreMatrix& m, const RowScorer& scorer, std::size_t jobs) {
  m.scores.assign(m.rows() * m.cols(), 0.0);
  parallel_for(m.rows(), jobs, [&](std::size_t i) {
    scorer(i, std::span<double>(m.scores).subspan(i * m.cols(), m.cols()));
  });
  for (const double s : m.scores)
    if (!std::isfinite(s)) throw NumericError("score matrix contains a non-finite score");
}

namespace {

void require_scores(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty())
    throw ParameterError("positive and negative score sets must both be non-empty");
}

std::vector<double> sorted(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

double fraction_above(const std::vector<double>& sorted_scores, double eta) {
  const auto it = std::upper_bound(sorted_scores.begin(), sorted_scores.end(), eta);
  return static_cast<double>(sorted_scores.end() - it) / static_cast<double>(sorted_scores.size());
}

}  // namespace

std::vector<double> default_thresholds(std::span<const double> pos,
                                       std::span<const double> neg) {
  std::vector<double> t{kBelowAll, 0.0, 1.0};
  t.insert(t.end(), pos.begin(), pos.end());
  t.insert(t.end(), neg.begin(), neg.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

RocCurve roc_sweep(std::span<const double> pos, std::span<const double> neg,
                   std::span<const double> thresholds) {
  require_scores(pos, neg);
  const auto sp = sorted(pos);
  const auto sn = sorted(neg);
  RocCurve curve;
  curve.points.reserve(thresholds.size());
  for (const double eta : thresholds)
    curve.points.push_back({eta, fraction_above(sp, eta), fraction_above(sn, eta)});
  return curve;
}

RocCurve roc_sweep(std::span<const double> pos, std::span<const double> neg) {
  const auto t = default_thresholds(pos, neg);
  return roc_sweep(pos, neg, t);
}

double auc(std::span<const double> pos, std::span<const double> neg) {
  require_scores(pos, neg);
  const auto sn = sorted(neg);
  // Twice the Mann-Whitney U, kept integral.
  unsigned long long twice_u = 0;
  for (const double p : pos) {
    const auto [lo, hi] = std::equal_range(sn.begin(), sn.end(), p);
    twice_u += 2ULL * static_cast<unsigned long long>(lo - sn.begin()) +
               static_cast<unsigned long long>(hi - lo);
  }
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double tp_at_fp(const RocCurve& curve, double max_fp) {
  double best = 0.0;
  for (const auto& p : curve.points)
    if (p.fp <= max_fp) best = std::max(best, p.tp);
  return best;
}

double raptor_accuracy(const ScoreMatrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw ParameterError("raptor accuracy needs a non-empty square score matrix (got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")");
  if (m.truth.size() != m.rows() || m.scores.size() != m.rows() * m.cols())
    throw ParameterError("score matrix is inconsistent with its ground truth");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.cols(); ++j)
      if (m.at(i, j) > m.at(i, best)) best = j;
    if (best == m.truth[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(m.rows());
}

ScoreSets split_scores(const ScoreMatrix& m) {
  ScoreSets s;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      (j == m.truth[i] ? s.pos : s.neg).push_back(m.at(i, j));
  return s;
}

LatencyStats benchmark_correlation_time(const std::function<double(std::size_t)>& correlator,
                                        std::size_t pairs, std::size_t repetitions) {
  if (pairs * repetitions < 100)
    throw ParameterError("benchmark needs at least 100 pair evaluations");
  using clock = std::chrono::steady_clock;
  volatile double sink = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) sink = sink + correlator(i);

  std::vector<double> samples;
  samples.reserve(pairs * repetitions);
  for (std::size_t r = 0; r < repetitions; ++r)
    for (std::size_t i = 0; i < pairs; ++i) {
      const auto t0 = clock::now();
      sink = sink + correlator(i);
      const auto t1 = clock::now();
      samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  LatencyStats stats;
  stats.samples = samples.size();
  double total = 0.0;
  for (const double s : samples) total += s;
  stats.mean_ms = total / static_cast<double>(samples.size());
  const auto k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size()))) - 1;
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(k), samples.end());
  stats.p95_ms = samples[k];
  return stats;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "eta,tp,fp\n";
  for (const auto& p : curve.points)
    out << format_double(p.eta) << ',' << format_double(p.tp) << ',' << format_double(p.fp) << '\n';
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
  auto out = open_output(path);
  write_roc_csv(out, curve);
}

void write_score_matrix_csv(std::ostream& out, const ScoreMatrix& m) {
  out << "entry_id";
  for (const auto& id : m.exit_ids) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << m.entry_ids[i];
    for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << format_double(m.at(i, j));
    out << '\n';
  }
}

void write_score_matrix_csv(const std::filesystem::path& path, const ScoreMatrix& m) {
  auto out = open_output(path);
  write_score_matrix_csv(out, m);
}

}  // namespace flowcorr::eval

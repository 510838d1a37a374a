#include <gtest/gtest.h>

#include <random>

#include "flowcorr/error.hpp"
#include "flowcorr/flowdata.hpp"

using namespace flowcorr;

namespace {

Flow upstream_flow(const std::vector<double>& ts, const std::vector<std::int64_t>& sizes,
                   const std::string& id = "f") {
  std::vector<PacketRecord> p;
  for (std::size_t i = 0; i < ts.size(); ++i) p.push_back({ts[i], sizes[i], Direction::upstream});
  return Flow(id, p);
}

Flow random_flow(std::mt19937_64& rng, std::size_t up, std::size_t down) {
  std::exponential_distribution<double> ipd(20.0);
  std::uniform_int_distribution<std::int64_t> size(40, 1500);
  std::vector<PacketRecord> p;
  double t = 0.3;
  for (std::size_t i = 0; i < up; ++i) p.push_back({t += ipd(rng), size(rng), Direction::upstream});
  t = 0.1;
  for (std::size_t i = 0; i < down; ++i)
    p.push_back({t += ipd(rng), size(rng), Direction::downstream});
  return Flow("r", p);
}

}  // namespace

TEST(FlowTest, RejectsInvalidRecords) {
  EXPECT_THROW(Flow("", {}), ParameterError);
  EXPECT_THROW(upstream_flow({0.0}, {0}), ParameterError);
  EXPECT_THROW(upstream_flow({-1.0}, {10}), ParameterError);
  EXPECT_THROW(upstream_flow({0.2, 0.1}, {10, 10}), ParameterError);
  // Directions are ordered independently of each other.
  EXPECT_NO_THROW(Flow("ok", {{0.5, 10, Direction::upstream}, {0.1, 10, Direction::downstream}}));
}

TEST(ComputeFeaturesTest, WorkedExample) {
  const auto f = compute_features(upstream_flow({0.0, 0.1, 0.3}, {100, 200, 50}), 5,
                                  ScalingConfig::unit());
  const std::vector<double> ipd{0.0, 0.1, 0.3 - 0.1, 0.0, 0.0};
  ASSERT_EQ(f.ipd_up.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(f.ipd_up[i], ipd[i], 1e-15);
  EXPECT_EQ(f.size_up, (std::vector<double>{100, 200, 50, 0, 0}));
  EXPECT_EQ(f.ipd_down, std::vector<double>(5, 0.0));
  EXPECT_EQ(f.size_down, std::vector<double>(5, 0.0));
}

TEST(ComputeFeaturesTest, ExactLengthIsNeitherPaddedNorTruncated) {
  const auto f = compute_features(upstream_flow({0, 1, 2, 3}, {1, 2, 3, 4}), 4,
                                  ScalingConfig::unit());
  EXPECT_EQ(f.size_up, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(f.ipd_up, (std::vector<double>{0, 1, 1, 1}));
}

TEST(ComputeFeaturesTest, KeepsOnlyFirstEntries) {
  std::vector<double> ts;
  std::vector<std::int64_t> sizes;
  for (int i = 0; i < 20; ++i) {
    ts.push_back(i * 0.5);
    sizes.push_back(100 + i);
  }
  const auto f = compute_features(upstream_flow(ts, sizes), 10, ScalingConfig::unit());
  ASSERT_EQ(f.size_up.size(), 10u);
  EXPECT_EQ(f.size_up.back(), 109.0);
}

TEST(ComputeFeaturesTest, AppliesScaling) {
  const auto f = compute_features(upstream_flow({0.0, 0.002}, {1500, 40}), 3);
  EXPECT_NEAR(f.ipd_up[1], 2.0, 1e-12);  // ms
  EXPECT_NEAR(f.size_up[0], 1.5, 1e-15);  // KB
  EXPECT_EQ(f.scaling, ScalingConfig{});
}

TEST(ComputeFeaturesTest, EmptyFlowIsRejected) {
  EXPECT_THROW(compute_features(Flow("e", {}), 10), EmptyFlowError);
}

TEST(ComputeFeaturesTest, DeterministicAndTelescoping) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t up = 1 + rng() % 40, down = rng() % 40, len = 1 + rng() % 30;
    const auto flow = random_flow(rng, up, down);
    const auto f = compute_features(flow, len, ScalingConfig::unit());
    EXPECT_EQ(f, compute_features(flow, len, ScalingConfig::unit()));

    for (auto dir : {Direction::upstream, Direction::downstream}) {
      const auto ts = flow.timestamps(dir);
      const auto& ipd = dir == Direction::upstream ? f.ipd_up : f.ipd_down;
      const auto& sz = dir == Direction::upstream ? f.size_up : f.size_down;
      const std::size_t kept = std::min(ts.size(), len);
      double sum = 0.0;
      for (double v : ipd) sum += v;
      if (kept > 0) EXPECT_NEAR(sum, ts[kept - 1] - ts[0], 1e-12);
      for (std::size_t k = kept; k < len; ++k) {
        EXPECT_EQ(ipd[k], 0.0);
        EXPECT_EQ(sz[k], 0.0);
      }
      // Padding never changes the retained prefix.
      const auto longer = compute_features(flow, len + 7, ScalingConfig::unit());
      const auto& ipd_long = dir == Direction::upstream ? longer.ipd_up : longer.ipd_down;
      for (std::size_t k = 0; k < kept; ++k) EXPECT_EQ(ipd_long[k], ipd[k]);
    }
  }
}

TEST(PairMatrixTest, TorRowOrder) {
  std::mt19937_64 rng(9);
  const auto fi = compute_features(random_flow(rng, 400, 350), 300);
  const auto fj = compute_features(random_flow(rng, 280, 310), 300);
  const auto m = make_pair_matrix(fi, fj, {PairMode::tor});
  ASSERT_EQ(m.rows(), 8u);
  ASSERT_EQ(m.values.size(), 8u * 300u);
  const std::vector<const std::vector<double>*> expected{&fi.ipd_up,  &fj.ipd_up,  &fi.ipd_down,
                                                         &fj.ipd_down, &fi.size_up, &fj.size_up,
                                                         &fi.size_down, &fj.size_down};
  for (std::size_t r = 0; r < 8; ++r)
    EXPECT_TRUE(std::equal(expected[r]->begin(), expected[r]->end(), m.row(r))) << "row " << r;
}

TEST(PairMatrixTest, SteppingUsesOneDirection) {
  std::mt19937_64 rng(10);
  const auto fi = compute_features(random_flow(rng, 50, 60), 40);
  const auto fj = compute_features(random_flow(rng, 70, 20), 40);
  const auto up = make_pair_matrix(fi, fj, {PairMode::stepping, Direction::upstream});
  ASSERT_EQ(up.rows(), 2u);
  EXPECT_TRUE(std::equal(fi.ipd_up.begin(), fi.ipd_up.end(), up.row(0)));
  EXPECT_TRUE(std::equal(fj.ipd_up.begin(), fj.ipd_up.end(), up.row(1)));
  const auto down = make_pair_matrix(fi, fj, {PairMode::stepping, Direction::downstream});
  EXPECT_TRUE(std::equal(fj.ipd_down.begin(), fj.ipd_down.end(), down.row(1)));
}

TEST(PairMatrixTest, SelfPairAndSwapSymmetry) {
  std::mt19937_64 rng(11);
  const auto fi = compute_features(random_flow(rng, 30, 30), 25);
  const auto fj = compute_features(random_flow(rng, 20, 35), 25);
  const auto self = make_pair_matrix(fi, fi);
  for (std::size_t r = 0; r < 8; r += 2)
    EXPECT_TRUE(std::equal(self.row(r), self.row(r) + 25, self.row(r + 1)));

  const auto ij = make_pair_matrix(fi, fj);
  const auto ji = make_pair_matrix(fj, fi);
  for (std::size_t r = 0; r < 8; ++r)
    EXPECT_TRUE(std::equal(ij.row(r), ij.row(r) + 25, ji.row(r ^ 1u))) << "row " << r;
}

TEST(PairMatrixTest, MismatchedLengthIsDimensionError) {
  std::mt19937_64 rng(12);
  const auto flow = random_flow(rng, 10, 10);
  EXPECT_THROW(make_pair_matrix(compute_features(flow, 10), compute_features(flow, 11)),
               DimensionError);
}

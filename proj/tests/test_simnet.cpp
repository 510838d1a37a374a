#include <gtest/gtest.h>

#include <cmath>

#include "flowcorr/error.hpp"
#include "flowcorr/simnet.hpp"

using namespace flowcorr;
using namespace flowcorr::simnet;

namespace {

Flow evenly_spaced(std::size_t n) {
  std::vector<PacketRecord> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({1.0 + static_cast<double>(i), 500, Direction::upstream});
  return Flow("even", p);
}

}  // namespace

TEST(BaseFlowTest, DurationMatchesExponentialMean) {
  BaseFlowModel m;
  m.mean_ipd = 0.1;
  double total = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    m.seed = s;
    const auto f = generate_base_flow(m);
    ASSERT_EQ(f.packets().size(), 300u);
    EXPECT_EQ(f.packets().front().timestamp, 0.0);
    total += f.packets().back().timestamp;
  }
  EXPECT_NEAR(total / 1000.0, 29.9, 29.9 * 0.05);
}

TEST(BaseFlowTest, SizesStayInBounds) {
  BaseFlowModel m;
  m.size_sigma = 3.0;
  const auto f = generate_base_flow(m);
  for (const auto& p : f.packets()) {
    EXPECT_GE(p.size, 40);
    EXPECT_LE(p.size, 1500);
    EXPECT_EQ(p.direction, Direction::upstream);
  }
}

TEST(BaseFlowTest, InvalidModels) {
  BaseFlowModel m;
  m.packet_count = 0;
  EXPECT_THROW(generate_base_flow(m), ParameterError);
  m = {};
  m.mean_ipd = 0.0;
  EXPECT_THROW(generate_base_flow(m), ParameterError);
}

TEST(ChannelTest, IdentityChannelPreservesFlow) {
  BaseFlowModel m;
  m.seed = 3;
  const auto f = generate_base_flow(m);
  const auto g = apply_channel(f, ChannelModel::identity(), "copy");
  EXPECT_EQ(g.id(), "copy");
  EXPECT_EQ(g.packets(), f.packets());
}

TEST(ChannelTest, DropEverythingIsEmptyFlowError) {
  ChannelModel c;
  c.drop_rate = 1.0;
  EXPECT_THROW(apply_channel(evenly_spaced(10), c), EmptyFlowError);
  c.drop_rate = 1.5;
  EXPECT_THROW(apply_channel(evenly_spaced(10), c), ParameterError);
  c = {};
  c.jitter_std = -1.0;
  EXPECT_THROW(apply_channel(evenly_spaced(10), c), ParameterError);
}

TEST(ChannelTest, LaplaceJitterHasExpectedScale) {
  // Spacing of 1 s keeps the order intact, so packets pair up by index.
  const auto f = evenly_spaced(20000);
  ChannelModel c;
  c.jitter_std = 0.005;
  c.drop_rate = 0.0;
  c.seed = 17;
  const auto g = apply_channel(f, c);
  ASSERT_EQ(g.packets().size(), f.packets().size());
  double abs_sum = 0.0, sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < f.packets().size(); ++i) {
    const double d = g.packets()[i].timestamp - f.packets()[i].timestamp;
    abs_sum += std::abs(d);
    sum += d;
    sq += d * d;
  }
  const double n = static_cast<double>(f.packets().size());
  const double b = 0.005 / std::sqrt(2.0);
  EXPECT_NEAR(abs_sum / n, b, 0.05 * b);
  EXPECT_NEAR(std::sqrt(sq / n), 0.005, 0.05 * 0.005);
  EXPECT_NEAR(sum / n, 0.0, 5.0 * 0.005 / std::sqrt(n));
}

TEST(ChannelTest, DropCountIsBinomial) {
  ChannelModel c;
  c.jitter_std = 0.0;
  c.drop_rate = 0.1;
  c.seed = 5;
  const auto g = apply_channel(evenly_spaced(10000), c);
  // Binomial(10000, 0.9): mean 9000, sd 30.
  EXPECT_NEAR(static_cast<double>(g.packets().size()), 9000.0, 120.0);
  for (const auto& p : g.packets()) EXPECT_EQ(p.timestamp, std::round(p.timestamp));
}

TEST(ChannelTest, TimestampsStayNonNegative) {
  BaseFlowModel m;
  ChannelModel c;
  c.jitter_std = 0.5;
  for (std::uint64_t s = 0; s < 20; ++s) {
    m.seed = s;
    c.seed = s;
    const auto g = apply_channel(generate_base_flow(m), c);
    EXPECT_GE(g.packets().front().timestamp, 0.0);
  }
}

TEST(PairedDatasetTest, ShapeAndIds) {
  const auto d = generate_paired_dataset(12, {}, {}, 1);
  ASSERT_EQ(d.size(), 12u);
  EXPECT_EQ(d.flows.size(), 24u);
  EXPECT_EQ(d.manifest.entries[3].entry_id, ingress_id(3));
  EXPECT_EQ(d.manifest.entries[3].exit_id, egress_id(3));
  EXPECT_EQ(ingress_id(3), "c000003_in");
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_LE(d.exit(i).packets().size(), d.entry(i).packets().size());
    EXPECT_GT(d.exit(i).packets().size(), 250u);
  }
}

TEST(PairedDatasetTest, DeterministicAcrossJobCounts) {
  const auto a = generate_paired_dataset(16, {}, {}, 9, 1);
  const auto b = generate_paired_dataset(16, {}, {}, 9, 4);
  EXPECT_EQ(a.flows, b.flows);
  EXPECT_EQ(a.manifest, b.manifest);
  EXPECT_NE(generate_paired_dataset(16, {}, {}, 10).flows, a.flows);
}

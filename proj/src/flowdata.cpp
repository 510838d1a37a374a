#include "flowcorr/flowdata.hpp"

#include <algorithm>

#include "flowcorr/error.hpp"

namespace flowcorr {

Flow::Flow(std::string id, std::vector<PacketRecord> packets)
    : id_(std::move(id)), packets_(std::move(packets)) {
  if (id_.empty()) throw ParameterError("flow id must be non-empty");
  double last[2] = {-1.0, -1.0};
  for (const auto& p : packets_) {
    if (p.size <= 0)
      throw ParameterError("flow '" + id_ + "': packet size must be positive");
    if (!(p.timestamp >= 0.0))
      throw ParameterError("flow '" + id_ + "': packet timestamp must be non-negative");
    auto& prev = last[p.direction == Direction::upstream ? 0 : 1];
    if (p.timestamp < prev)
      throw ParameterError("flow '" + id_ + "': timestamps decrease within direction " +
                           to_string(p.direction));
    prev = p.timestamp;
  }
}

std::size_t Flow::count(Direction dir) const {
  return static_cast<std::size_t>(std::count_if(
      packets_.begin(), packets_.end(),
      [dir](const PacketRecord& p) { return p.direction == dir; }));
}

std::vector<double> Flow::timestamps(Direction dir) const {
  std::vector<double> out;
  for (const auto& p : packets_)
    if (p.direction == dir) out.push_back(p.timestamp);
  return out;
}

std::vector<double> Flow::sizes(Direction dir) const {
  std::vector<double> out;
  for (const auto& p : packets_)
    if (p.direction == dir) out.push_back(static_cast<double>(p.size));
  return out;
}

namespace {

void fill_direction(const Flow& flow, Direction dir, std::size_t flow_len,
                    const ScalingConfig& scaling, std::vector<double>& ipd,
                    std::vector<double>& size) {
  ipd.assign(flow_len, 0.0);
  size.assign(flow_len, 0.0);
  std::size_t k = 0;
  double prev = 0.0;
  for (const auto& p : flow.packets()) {
    if (p.direction != dir) continue;
    if (k == flow_len) break;
    ipd[k] = k == 0 ? 0.0 : (p.timestamp - prev) * scaling.ipd_scale;
    size[k] = static_cast<double>(p.size) * scaling.size_scale;
    prev = p.timestamp;
    ++k;
  }
}

}  // namespace

FlowFeatures compute_features(const Flow& flow, std::size_t flow_len,
                              const ScalingConfig& scaling) {
  if (flow_len == 0) throw ParameterError("flow length must be positive");
  if (flow.empty())
    throw EmptyFlowError("flow '" + flow.id() + "' has no packets in either direction");
  FlowFeatures f;
  f.flow_len = flow_len;
  f.scaling = scaling;
  fill_direction(flow, Direction::upstream, flow_len, scaling, f.ipd_up, f.size_up);
  fill_direction(flow, Direction::downstream, flow_len, scaling, f.ipd_down, f.size_down);
  return f;
}

void fill_pair_rows(const FlowFeatures& fi, const FlowFeatures& fj,
                    const PairLayout& layout, double* out) {
  const std::size_t n = fi.flow_len;
  auto put = [&](std::size_t row, const std::vector<double>& v) {
    std::copy(v.begin(), v.end(), out + row * n);
  };
  if (layout.mode == PairMode::tor) {
    put(0, fi.ipd_up);
    put(1, fj.ipd_up);
    put(2, fi.ipd_down);
    put(3, fj.ipd_down);
    put(4, fi.size_up);
    put(5, fj.size_up);
    put(6, fi.size_down);
    put(7, fj.size_down);
  } else {
    const bool up = layout.stepping_direction == Direction::upstream;
    put(0, up ? fi.ipd_up : fi.ipd_down);
    put(1, up ? fj.ipd_up : fj.ipd_down);
  }
}

PairMatrix make_pair_matrix(const FlowFeatures& fi, const FlowFeatures& fj,
                            const PairLayout& layout) {
  if (fi.flow_len != fj.flow_len)
    throw DimensionError("pair flow lengths differ: " + std::to_string(fi.flow_len) +
                         " vs " + std::to_string(fj.flow_len));
  if (!(fi.scaling == fj.scaling))
    throw DimensionError("pair features were computed with different scalings");
  PairMatrix m;
  m.layout = layout;
  m.flow_len = fi.flow_len;
  m.scaling = fi.scaling;
  m.values.resize(layout.rows() * fi.flow_len);
  fill_pair_rows(fi, fj, layout, m.values.data());
  return m;
}

const char* to_string(Direction dir) {
  return dir == Direction::upstream ? "u" : "d";
}

const char* to_string(PairMode mode) {
  return mode == PairMode::tor ? "tor" : "stepping";
}

PairMode parse_pair_mode(const std::string& text) {
  if (text == "tor") return PairMode::tor;
  if (text == "stepping") return PairMode::stepping;
  throw ParseError("unknown pair mode '" + text + "'");
}

Direction parse_direction(const std::string& text) {
  if (text == "u" || text == "up" || text == "upstream") return Direction::upstream;
  if (text == "d" || text == "down" || text == "downstream") return Direction::downstream;
  throw ParseError("unknown direction '" + text + "'");
}

}  // namespace flowcorr

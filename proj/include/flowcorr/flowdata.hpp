#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace flowcorr {

enum class Direction { upstream, downstream };

struct PacketRecord {
  double timestamp = 0.0;  // seconds, >= 0
  std::int64_t size = 0;   // bytes, > 0
  Direction direction = Direction::upstream;

  bool operator==(const PacketRecord&) const = default;
};

/// A bidirectional flow. Packets are kept sorted by timestamp within each
/// direction; the constructor validates this and the record invariants.
class Flow {
 public:
  Flow() = default;
  Flow(std::string id, std::vector<PacketRecord> packets);

  const std::string& id() const { return id_; }
  const std::vector<PacketRecord>& packets() const { return packets_; }
  bool empty() const { return packets_.empty(); }
  std::size_t count(Direction dir) const;

  // Timestamps / sizes of one direction, in arrival order.
  std::vector<double> timestamps(Direction dir) const;
  std::vector<double> sizes(Direction dir) const;

  bool operator==(const Flow&) const = default;

 private:
  std::string id_;
  std::vector<PacketRecord> packets_;
};

/// Multipliers applied to raw features. Defaults turn seconds into
/// milliseconds and bytes into kilobytes.
struct ScalingConfig {
  double ipd_scale = 1000.0;
  double size_scale = 1.0 / 1000.0;

  static ScalingConfig unit() { return {1.0, 1.0}; }
  bool operator==(const ScalingConfig&) const = default;
};

struct FlowFeatures {
  std::vector<double> ipd_up;
  std::vector<double> size_up;
  std::vector<double> ipd_down;
  std::vector<double> size_down;
  std::size_t flow_len = 0;
  ScalingConfig scaling;

  bool operator==(const FlowFeatures&) const = default;
};

enum class PairMode { tor, stepping };

/// Layout of the 2-D correlator input. Stepping mode carries one
/// direction's IPDs only.
struct PairLayout {
  PairMode mode = PairMode::tor;
  Direction stepping_direction = Direction::upstream;

  std::size_t rows() const { return mode == PairMode::tor ? 8 : 2; }
  bool operator==(const PairLayout&) const = default;
};

/// Row-major rows()×flow_len array.
/// tor:      [T^u_i; T^u_j; T^d_i; T^d_j; S^u_i; S^u_j; S^d_i; S^d_j]
/// stepping: [T_i; T_j]
struct PairMatrix {
  PairLayout layout;
  std::size_t flow_len = 0;
  ScalingConfig scaling;
  std::vector<double> values;

  std::size_t rows() const { return layout.rows(); }
  const double* row(std::size_t r) const { return values.data() + r * flow_len; }

  bool operator==(const PairMatrix&) const = default;
};

struct LabeledPair {
  PairMatrix pair;
  int label = 0;
  std::string entry_id;
  std::string exit_id;
};

/// IPD and size vectors of both directions, truncated or zero-padded to
/// flow_len. The first IPD of each direction is 0.
FlowFeatures compute_features(const Flow& flow, std::size_t flow_len,
                              const ScalingConfig& scaling = {});

PairMatrix make_pair_matrix(const FlowFeatures& fi, const FlowFeatures& fj,
                            const PairLayout& layout = {});

/// Writes the pair rows into a caller-owned buffer of rows()*flow_len values.
/// Used by the batched training and scoring paths to avoid allocation.
void fill_pair_rows(const FlowFeatures& fi, const FlowFeatures& fj,
                    const PairLayout& layout, double* out);

const char* to_string(Direction dir);
const char* to_string(PairMode mode);
PairMode parse_pair_mode(const std::string& text);
Direction parse_direction(const std::string& text);

}  // namespace flowcorr

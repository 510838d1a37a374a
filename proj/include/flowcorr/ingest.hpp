#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flowcorr/flowdata.hpp"

namespace flowcorr {

using FlowMap = std::map<std::string, Flow>;

struct Association {
  std::string entry_id;
  std::string exit_id;

  bool operator==(const Association&) const = default;
};

/// Ground-truth pairing of entry flows with exit flows.
struct PairManifest {
  std::vector<Association> entries;

  bool operator==(const PairManifest&) const = default;
};

enum class Split { train, test };

struct Dataset {
  FlowMap flows;
  PairManifest manifest;
  Split split = Split::train;

  std::size_t size() const { return manifest.entries.size(); }
  const Flow& entry(std::size_t i) const { return flows.at(manifest.entries[i].entry_id); }
  const Flow& exit(std::size_t i) const { return flows.at(manifest.entries[i].exit_id); }
};

// Packet-record CSV: header `flow_id,direction,ts,size`.
FlowMap parse_packet_stream(std::istream& in, const std::string& source = "<stream>");
FlowMap parse_packet_file(const std::filesystem::path& path);
void write_packet_stream(std::ostream& out, const FlowMap& flows);
void write_packet_file(const std::filesystem::path& path, const FlowMap& flows);

// Manifest CSV: header `entry_flow_id,exit_flow_id`.
PairManifest parse_manifest_stream(std::istream& in, const std::string& source = "<stream>");
PairManifest parse_manifest_file(const std::filesystem::path& path);
void write_manifest_stream(std::ostream& out, const PairManifest& manifest);
void write_manifest_file(const std::filesystem::path& path, const PairManifest& manifest);

/// Checks that every id resolves and that no id is used twice.
void validate_manifest(const FlowMap& flows, const PairManifest& manifest);

/// Shuffles associations with `seed` and puts floor(n * split_fraction) of
/// them in the train split. Each split only carries the flows it references.
std::pair<Dataset, Dataset> assemble_dataset(const FlowMap& flows, const PairManifest& manifest,
                                             double split_fraction, std::uint64_t seed);

/// Wraps a whole corpus as one dataset, no split.
Dataset whole_dataset(FlowMap flows, PairManifest manifest, Split split = Split::test);

// Directory layout used by the CLI and the simulator.
inline constexpr const char* kPacketFileName = "packets.csv";
inline constexpr const char* kManifestFileName = "manifest.csv";

void write_dataset_dir(const std::filesystem::path& dir, const Dataset& dataset);
Dataset read_dataset_dir(const std::filesystem::path& dir);

}  // namespace flowcorr

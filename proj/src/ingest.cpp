#include "flowcorr/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "flowcorr/error.hpp"
#include "flowcorr/random.hpp"

namespace flowcorr {

namespace {

constexpr const char* kPacketHeader = "flow_id,direction,ts,size";
constexpr const char* kManifestHeader = "entry_flow_id,exit_flow_id";

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// getline that drops a trailing CR so CRLF files still parse.
bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string where(const std::string& source, std::size_t line_no) {
  return source + ": line " + std::to_string(line_no);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

FlowMap parse_packet_stream(std::istream& in, const std::string& source) {
  std::string line;
  if (!next_line(in, line) || line != kPacketHeader)
    throw ParseError(source + ": expected header '" + kPacketHeader + "'");

  std::map<std::string, std::vector<PacketRecord>> grouped;
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 4)
      throw ParseError(where(source, line_no) + ": expected 4 fields, found " +
                       std::to_string(fields.size()));
    if (fields[0].empty()) throw ParseError(where(source, line_no) + ": empty flow_id");

    PacketRecord rec;
    if (fields[1] == "u") {
      rec.direction = Direction::upstream;
    } else if (fields[1] == "d") {
      rec.direction = Direction::downstream;
    } else {
      throw ParseError("unknown direction '" + std::string(fields[1]) + "' at line " +
                       std::to_string(line_no) + " (" + source + ")");
    }

    const auto ts = fields[2];
    auto r1 = std::from_chars(ts.data(), ts.data() + ts.size(), rec.timestamp);
    if (r1.ec != std::errc() || r1.ptr != ts.data() + ts.size() || !std::isfinite(rec.timestamp))
      throw ParseError(where(source, line_no) + ": field 'ts' is not a number: '" +
                       std::string(ts) + "'");
    if (rec.timestamp < 0)
      throw ParseError(where(source, line_no) + ": field 'ts' is negative");

    const auto sz = fields[3];
    auto r2 = std::from_chars(sz.data(), sz.data() + sz.size(), rec.size);
    if (r2.ec != std::errc() || r2.ptr != sz.data() + sz.size())
      throw ParseError(where(source, line_no) + ": field 'size' is not an integer: '" +
                       std::string(sz) + "'");
    if (rec.size <= 0) throw ParseError(where(source, line_no) + ": field 'size' must be positive");

    grouped[std::string(fields[0])].push_back(rec);
  }

  FlowMap flows;
  for (auto& [id, packets] : grouped) {
    std::stable_sort(packets.begin(), packets.end(),
                     [](const PacketRecord& a, const PacketRecord& b) {
                       return a.timestamp < b.timestamp;
                     });
    flows.emplace(id, Flow(id, std::move(packets)));
  }
  return flows;
}

FlowMap parse_packet_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_packet_stream(in, path.string());
}

void write_packet_stream(std::ostream& out, const FlowMap& flows) {
  out << kPacketHeader << '\n';
  for (const auto& [id, flow] : flows)
    for (const auto& p : flow.packets())
      out << id << ',' << to_string(p.direction) << ',' << format_double(p.timestamp) << ','
          << p.size << '\n';
}

void write_packet_file(const std::filesystem::path& path, const FlowMap& flows) {
  auto out = open_output(path);
  write_packet_stream(out, flows);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

PairManifest parse_manifest_stream(std::istream& in, const std::string& source) {
  std::string line;
  if (!next_line(in, line) || line != kManifestHeader)
    throw ParseError(source + ": expected header '" + kManifestHeader + "'");
  PairManifest manifest;
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw ParseError(where(source, line_no) + ": expected 'entry_flow_id,exit_flow_id'");
    manifest.entries.push_back({std::string(fields[0]), std::string(fields[1])});
  }
  return manifest;
}

PairManifest parse_manifest_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_manifest_stream(in, path.string());
}

void write_manifest_stream(std::ostream& out, const PairManifest& manifest) {
  out << kManifestHeader << '\n';
  for (const auto& a : manifest.entries) out << a.entry_id << ',' << a.exit_id << '\n';
}

void write_manifest_file(const std::filesystem::path& path, const PairManifest& manifest) {
  auto out = open_output(path);
  write_manifest_stream(out, manifest);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void validate_manifest(const FlowMap& flows, const PairManifest& manifest) {
  std::vector<std::string> missing;
  std::set<std::string> seen;
  for (const auto& a : manifest.entries) {
    for (const auto* id : {&a.entry_id, &a.exit_id}) {
      if (!flows.contains(*id)) missing.push_back(*id);
      if (!seen.insert(*id).second)
        throw DataError("flow id '" + *id + "' appears in more than one association");
    }
  }
  if (!missing.empty()) {
    std::string msg = "manifest references missing flow id(s):";
    for (const auto& id : missing) msg += " " + id;
    throw DataError(msg);
  }
}

namespace {

Dataset subset(const FlowMap& flows, std::vector<Association> assoc, Split split) {
  Dataset d;
  d.split = split;
  for (const auto& a : assoc) {
    d.flows.emplace(a.entry_id, flows.at(a.entry_id));
    d.flows.emplace(a.exit_id, flows.at(a.exit_id));
  }
  d.manifest.entries = std::move(assoc);
  return d;
}

}  // namespace

std::pair<Dataset, Dataset> assemble_dataset(const FlowMap& flows, const PairManifest& manifest,
                                             double split_fraction, std::uint64_t seed) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw ParameterError("split fraction must lie in (0, 1)");
  if (manifest.entries.empty()) throw ParameterError("manifest is empty");
  validate_manifest(flows, manifest);

  auto order = manifest.entries;
  Rng rng(derive_seed(seed, 0x5371u));
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[uniform_index(rng, i)]);

  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(order.size()) * split_fraction));
  std::vector<Association> train(order.begin(), order.begin() + n_train);
  std::vector<Association> test(order.begin() + n_train, order.end());
  return {subset(flows, std::move(train), Split::train),
          subset(flows, std::move(test), Split::test)};
}

Dataset whole_dataset(FlowMap flows, PairManifest manifest, Split split) {
  validate_manifest(flows, manifest);
  Dataset d;
  d.flows = std::move(flows);
  d.manifest = std::move(manifest);
  d.split = split;
  return d;
}

void write_dataset_dir(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  write_packet_file(dir / kPacketFileName, dataset.flows);
  write_manifest_file(dir / kManifestFileName, dataset.manifest);
}

Dataset read_dataset_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw DataError("dataset directory '" + dir.string() + "' does not exist");
  auto flows = parse_packet_file(dir / kPacketFileName);
  auto manifest = parse_manifest_file(dir / kManifestFileName);
  return whole_dataset(std::move(flows), std::move(manifest));
}

}  // namespace flowcorr

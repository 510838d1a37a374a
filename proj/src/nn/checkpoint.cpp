#include "flowcorr/nn/checkpoint.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace flowcorr::nn {

using nlohmann::json;

namespace {

json window_json(Window w) { return json::array({w.height, w.width}); }

Window window_from(const json& j) {
  return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()};
}

json params_json(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::conv2d:
      return {{"kernel_count", s.kernel_count},
              {"kernel", window_json(s.kernel)},
              {"stride", window_json(s.stride)}};
    case LayerKind::maxpool:
      return {{"window", window_json(s.pool)}, {"stride", window_json(s.stride)}};
    case LayerKind::dense:
      return {{"units", s.units}};
    default:
      return json::object();
  }
}

LayerSpec spec_from(const json& j) {
  const auto kind = parse_layer_kind(j.at("kind").get<std::string>());
  const auto& p = j.at("params");
  switch (kind) {
    case LayerKind::conv2d:
      return LayerSpec::conv2d(p.at("kernel_count").get<std::size_t>(), window_from(p.at("kernel")),
                               window_from(p.at("stride")));
    case LayerKind::maxpool:
      return LayerSpec::maxpool(window_from(p.at("window")), window_from(p.at("stride")));
    case LayerKind::dense:
      return LayerSpec::dense(p.at("units").get<std::size_t>());
    case LayerKind::relu: return LayerSpec::relu();
    case LayerKind::sigmoid: return LayerSpec::sigmoid();
    case LayerKind::flatten: return LayerSpec::flatten();
  }
  throw ParseError("unknown layer kind");
}

}  // namespace

std::string checkpoint_to_string(const Network& net) {
  const auto& info = net.info();
  json doc;
  doc["format_version"] = kCheckpointVersion;
  doc["preset"] = info.preset;
  doc["flow_len"] = info.flow_len;
  doc["scaling"] = {{"ipd_scale", info.scaling.ipd_scale}, {"size_scale", info.scaling.size_scale}};
  doc["layout"] = {{"mode", to_string(info.layout.mode)},
                   {"stepping_direction", to_string(info.layout.stepping_direction)}};
  const auto& in = net.input_shape();
  doc["input_shape"] = json::array({in.channels, in.height, in.width});
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    layers.push_back({{"kind", to_string(layer.spec.kind)},
                      {"params", params_json(layer.spec)},
                      {"weights", layer.weights},
                      {"bias", layer.bias}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump();
}

Network checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointVersion)
      throw VersionError("checkpoint format_version " + std::to_string(version) +
                         " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    NetworkInfo info;
    info.preset = doc.at("preset").get<std::string>();
    info.flow_len = doc.at("flow_len").get<std::size_t>();
    info.scaling.ipd_scale = doc.at("scaling").at("ipd_scale").get<double>();
    info.scaling.size_scale = doc.at("scaling").at("size_scale").get<double>();
    info.layout.mode = parse_pair_mode(doc.at("layout").at("mode").get<std::string>());
    info.layout.stepping_direction =
        parse_direction(doc.at("layout").at("stepping_direction").get<std::string>());
    const auto& is = doc.at("input_shape");
    const Shape input{is.at(0).get<std::size_t>(), is.at(1).get<std::size_t>(),
                      is.at(2).get<std::size_t>()};

    std::vector<LayerSpec> specs;
    for (const auto& lj : doc.at("layers")) specs.push_back(spec_from(lj));
    Network net(input, specs, info);
    auto& layers = net.layers();
    const auto& lj = doc.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      auto weights = lj.at(i).at("weights").get<std::vector<double>>();
      auto bias = lj.at(i).at("bias").get<std::vector<double>>();
      if (weights.size() != layers[i].weights.size() || bias.size() != layers[i].bias.size())
        throw ParseError("checkpoint layer " + std::to_string(i) +
                         ": parameter count does not match its shape");
      layers[i].weights.assign(weights.begin(), weights.end());
      layers[i].bias.assign(bias.begin(), bias.end());
    }
    return net;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint '" + path.string() + "' for writing");
  out << checkpoint_to_string(net) << '\n';
  if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

}  // namespace flowcorr::nn

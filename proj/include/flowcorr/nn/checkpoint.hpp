#pragma once

#include <filesystem>
#include <string>

#include "flowcorr/nn/network.hpp"

namespace flowcorr::nn {

inline constexpr int kCheckpointVersion = 1;

// JSON document: {format_version, preset, flow_len, scaling, layout,
// input_shape, layers: [{kind, params, weights, bias}]}. Doubles are written
// in shortest round-trip form, so save/load is lossless.
std::string checkpoint_to_string(const Network& net);
Network checkpoint_from_string(const std::string& text);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace flowcorr::nn

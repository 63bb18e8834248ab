#pragma once

#include <string>

#include "srlf/policy.hpp"

namespace srlf {

inline constexpr int kCheckpointVersion = 1;

/// JSON blob: {"format": "srlf-policy", "version": 1, "actor": {"sizes":
/// [...], "weights": [...]}, "critic": {...}} with weights flattened layer
/// by layer (column-major W, then b).
std::string checkpoint_to_json(const PolicyParams& params);
PolicyParams checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const PolicyParams& params);
PolicyParams load_checkpoint(const std::string& path);

}  // namespace srlf

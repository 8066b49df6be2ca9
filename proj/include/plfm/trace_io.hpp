#pragma once

#include <filesystem>
#include <string>

#include "plfm/evaluation.hpp"
#include "plfm/inference.hpp"

namespace plfm {

// Trace directory layout: one CSV per scalar series, one CSV per matrix
// snapshot, plus manifest.json listing the files, the config, its hash, and
// the seed. All numbers use the 17-significant-digit form, so identical
// config + seed gives byte-identical artifacts.
void write_trace(const std::filesystem::path& dir, const ChainTrace& trace,
                 const SamplerConfig& cfg, const std::string& data_path);

ChainTrace read_trace(const std::filesystem::path& dir);

// Stable FNV-1a hash of the canonical config rendering.
std::string config_hash(const SamplerConfig& cfg);

void write_report(const std::filesystem::path& path, const EvalReport& report);

}  // namespace plfm

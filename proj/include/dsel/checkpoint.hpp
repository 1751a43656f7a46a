#pragma once

#include <filesystem>

#include "dsel/numcore.hpp"

namespace dsel {

// Writes `<stem>.manifest` (segment name, shape, offset per line) and
// `<stem>.bin` (raw little-endian float64). Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& stem, const ParamVector& params);

ParamVector load_checkpoint(const std::filesystem::path& stem);

// Loads and checks the stored layout against `expected`; mismatch is a ConfigError.
ParamVector load_checkpoint(const std::filesystem::path& stem, const Layout& expected);

}  // namespace dsel

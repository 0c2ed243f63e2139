#pragma once

#include "lsm/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace lsm {

using Json = nlohmann::json;

std::uint64_t fnv1a64(std::string_view data);

// Structured results document shared by all subcommands: schema version,
// run metadata, the full effective config (replayable), and a payload.
Json results_document(const std::string& subcommand, std::uint64_t seed, const Json& config,
                      const Json& payload);

// Writes via a temp file + rename so failed runs leave no partial output.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace lsm

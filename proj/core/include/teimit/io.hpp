#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace teimit {

std::string read_text(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

/// Throws ParseError (line 0) on malformed JSON.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j, int indent = -1);

}  // namespace teimit

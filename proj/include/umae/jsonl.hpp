#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace umae {

using Json = nlohmann::json;

// Reads a line-delimited JSON file; blank lines are skipped.
// Throws ParseError with the 1-based line number on malformed input.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

// Streaming variant for large files.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(size_t line_no, const Json&)>& fn);

// Writes one compact JSON object per newline-terminated line.
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

} // namespace umae

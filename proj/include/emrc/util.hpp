#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace emrc {

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string now_iso8601();

std::uint64_t fnv1a64(std::string_view data);
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed);
std::string hex64(std::uint64_t value);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

/// Parses a JSON file, reporting open and syntax errors as ConfigError.
nlohmann::json read_json_file(const std::string& path);

}  // namespace emrc

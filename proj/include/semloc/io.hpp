#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semloc/errors.hpp"

namespace semloc {

using Json = nlohmann::json;

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// One JSON object per nonempty line. Parse failures report the line number.
std::vector<Json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<Json>& rows);

std::string base64_encode(const unsigned char* data, std::size_t len);
std::vector<unsigned char> base64_decode(const std::string& text);

// Little-endian fp64 blob <-> base64, used by checkpoints.
std::string encode_doubles(const std::vector<double>& values);
std::vector<double> decode_doubles(const std::string& text);

std::uint64_t fnv1a64(const std::string& text);
std::string to_hex(std::uint64_t value);

}  // namespace semloc

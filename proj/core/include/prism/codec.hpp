#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

namespace prism::codec {

std::string base64_encode(std::string_view bytes);
// Throws DataError on malformed input.
std::string base64_decode(std::string_view text);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

inline constexpr int kDeflateLevel = 6;

// Length in bytes of the raw DEFLATE (RFC 1951) stream for `bytes`.
std::size_t deflate_size(std::string_view bytes, int level = kDeflateLevel);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// printf("%.17g") for finite doubles.
std::string format_double(double v);
// Shortest text that reads back to the same double.
std::string format_shortest(double v);

}  // namespace prism::codec

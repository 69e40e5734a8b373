#ifndef CSKM_DIGEST_H_
#define CSKM_DIGEST_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace cskm {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Throws InputError if the file cannot be read.
std::string sha256_file(const std::filesystem::path &path);

// First eight digest bytes as an integer; used to derive sub-seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

}  // namespace cskm

#endif  // CSKM_DIGEST_H_

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace corpusdrift::hashing {

// SHA-256 (FIPS 180-4), dependency-free. Good enough for content
// addressing of configs, inputs and cache keys; not a secrecy boundary.
class Sha256 {
public:
    Sha256();
    void update(const void* data, std::size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }
    // Hex digest; the object must not be updated afterwards.
    std::string hex_digest();

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint64_t bit_count_ = 0;
    std::uint8_t buffer_[64];
    std::size_t buffer_len_ = 0;
    bool finalized_ = false;
};

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

// First n hex chars, handy for directory names.
std::string short_hash(std::string_view data, std::size_t n = 16);

}  // namespace corpusdrift::hashing

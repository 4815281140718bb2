#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace newsaudit {

// Incremental SHA-256. Used for cache keys and artifact provenance hashes,
// where collision resistance across distinct inputs is required.
class Sha256 {
public:
    Sha256();

    void update(const void* data, std::size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }

    std::array<std::uint8_t, 32> finish();

private:
    void process_block(const std::uint8_t* block);

    std::array<std::uint32_t, 8> state_;
    std::array<std::uint8_t, 64> buffer_;
    std::uint64_t total_len_ = 0;
    std::size_t buffer_len_ = 0;
};

std::string to_hex(const std::array<std::uint8_t, 32>& digest);

// Hex digest of a single buffer.
std::string sha256_hex(std::string_view data);

// First 8 digest bytes as a big-endian integer; convenient RNG seed material.
std::uint64_t sha256_seed(std::string_view data);

}  // namespace newsaudit

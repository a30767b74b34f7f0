#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace devchain {

using bytes = std::vector<uint8_t>;
using bytes_view = std::span<const uint8_t>;

inline bytes to_bytes(std::string_view s) {
    return bytes(s.begin(), s.end());
}

inline std::string to_string(bytes_view b) {
    return std::string(b.begin(), b.end());
}

std::string hex_encode(bytes_view data);

// Lowercase hex only; returns false on odd length or non-hex characters.
bool hex_decode(std::string_view hex, bytes& out);

// Standard base64 with padding, used to carry binary payloads inside
// canonical JSON documents (castore RPC).
std::string base64_encode(bytes_view data);
bool base64_decode(std::string_view text, bytes& out);

}  // namespace devchain

#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "devchain/bytes.hpp"

namespace devchain {

// 32-byte SHA-256 digest. All on-chain identifiers (tx ids, block hashes,
// member ids, content ids) are values of this type rendered as lowercase hex.
struct hash32 {
    std::array<uint8_t, 32> data{};

    auto operator<=>(const hash32&) const = default;

    bool is_zero() const {
        for (auto b : data)
            if (b != 0) return false;
        return true;
    }

    std::string hex() const;
    bytes as_bytes() const { return bytes(data.begin(), data.end()); }

    static hash32 from_hex(std::string_view hex);  // throws malformed_document
    static bool try_from_hex(std::string_view hex, hash32& out);
};

hash32 sha256(bytes_view data);

inline hash32 sha256(std::string_view s) {
    return sha256(bytes_view(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

}  // namespace devchain

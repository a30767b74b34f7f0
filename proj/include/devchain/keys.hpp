#pragma once

#include <array>
#include <string>

#include "devchain/bytes.hpp"
#include "devchain/digest.hpp"
#include "devchain/value.hpp"

namespace devchain {

enum class role { owner, manager, developer, tester, client };

std::string_view role_name(role r);
role role_from_name(std::string_view name);  // throws bad_args

struct public_key {
    std::array<uint8_t, 32> data{};

    auto operator<=>(const public_key&) const = default;

    std::string hex() const;
    static public_key from_hex(std::string_view hex);
};

struct secret_key {
    // Ed25519 secret keys carry the seed plus the public half.
    std::array<uint8_t, 64> data{};

    std::string hex() const;
    static secret_key from_hex(std::string_view hex);
};

struct signature {
    std::array<uint8_t, 64> data{};

    auto operator<=>(const signature&) const = default;

    std::string hex() const;
    static signature from_hex(std::string_view hex);
};

// member_id == sha256(public_key) always.
struct identity {
    hash32 member_id;
    public_key pub;
    role member_role = role::developer;
    std::string org;

    doc to_doc() const;
    static identity from_doc(const doc& d);
};

struct keypair {
    identity id;
    secret_key secret;
};

// Fresh Ed25519 keypair from the system CSPRNG.
keypair generate_identity(role r, const std::string& org);

signature sign_bytes(bytes_view message, const secret_key& sk);
bool verify_bytes(bytes_view message, const signature& sig, const public_key& pk);

}  // namespace devchain

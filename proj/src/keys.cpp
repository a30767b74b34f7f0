#include "devchain/keys.hpp"

#include <sodium.h>

namespace devchain {

void ensure_sodium();

namespace {

template <size_t N>
std::array<uint8_t, N> array_from_hex(std::string_view hex, const char* what) {
    bytes raw;
    if (!hex_decode(hex, raw) || raw.size() != N)
        raise(errc::malformed_document, std::string("bad ") + what);
    std::array<uint8_t, N> out{};
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

}  // namespace

std::string_view role_name(role r) {
    switch (r) {
        case role::owner: return "owner";
        case role::manager: return "manager";
        case role::developer: return "developer";
        case role::tester: return "tester";
        case role::client: return "client";
    }
    return "developer";
}

role role_from_name(std::string_view name) {
    if (name == "owner") return role::owner;
    if (name == "manager") return role::manager;
    if (name == "developer") return role::developer;
    if (name == "tester") return role::tester;
    if (name == "client") return role::client;
    raise(errc::bad_args, "unknown role: " + std::string(name));
}

std::string public_key::hex() const { return hex_encode(bytes_view(data.data(), data.size())); }

public_key public_key::from_hex(std::string_view hex) {
    return public_key{array_from_hex<32>(hex, "public key")};
}

std::string secret_key::hex() const { return hex_encode(bytes_view(data.data(), data.size())); }

secret_key secret_key::from_hex(std::string_view hex) {
    return secret_key{array_from_hex<64>(hex, "secret key")};
}

std::string signature::hex() const { return hex_encode(bytes_view(data.data(), data.size())); }

signature signature::from_hex(std::string_view hex) {
    return signature{array_from_hex<64>(hex, "signature")};
}

doc identity::to_doc() const {
    return doc{{"member_id", member_id.hex()},
               {"public_key", pub.hex()},
               {"role", std::string(role_name(member_role))},
               {"org", org}};
}

identity identity::from_doc(const doc& d) {
    identity id;
    id.member_id = hash32::from_hex(require_string(d, "member_id"));
    id.pub = public_key::from_hex(require_string(d, "public_key"));
    id.member_role = role_from_name(require_string(d, "role"));
    id.org = require_string(d, "org");
    if (id.member_id != sha256(bytes_view(id.pub.data.data(), id.pub.data.size())))
        raise(errc::malformed_document, "member_id does not match public key digest");
    return id;
}

keypair generate_identity(role r, const std::string& org) {
    ensure_sodium();
    keypair kp;
    unsigned char pk[crypto_sign_PUBLICKEYBYTES];
    unsigned char sk[crypto_sign_SECRETKEYBYTES];
    crypto_sign_keypair(pk, sk);
    static_assert(crypto_sign_PUBLICKEYBYTES == 32 && crypto_sign_SECRETKEYBYTES == 64);
    std::copy(pk, pk + 32, kp.id.pub.data.begin());
    std::copy(sk, sk + 64, kp.secret.data.begin());
    kp.id.member_id = sha256(bytes_view(kp.id.pub.data.data(), 32));
    kp.id.member_role = r;
    kp.id.org = org;
    return kp;
}

signature sign_bytes(bytes_view message, const secret_key& sk) {
    ensure_sodium();
    signature sig;
    crypto_sign_detached(sig.data.data(), nullptr, message.data(), message.size(),
                         sk.data.data());
    return sig;
}

bool verify_bytes(bytes_view message, const signature& sig, const public_key& pk) {
    ensure_sodium();
    return crypto_sign_verify_detached(sig.data.data(), message.data(), message.size(),
                                       pk.data.data()) == 0;
}

}  // namespace devchain

#include <sodium.h>

#include <mutex>

#include "devchain/bytes.hpp"
#include "devchain/digest.hpp"
#include "devchain/errors.hpp"

namespace devchain {

namespace {

const char* hex_digits = "0123456789abcdef";

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}

std::once_flag sodium_once;

}  // namespace

void ensure_sodium() {
    std::call_once(sodium_once, [] {
        if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
    });
}

std::string hex_encode(bytes_view data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(hex_digits[b >> 4]);
        out.push_back(hex_digits[b & 0x0f]);
    }
    return out;
}

bool hex_decode(std::string_view hex, bytes& out) {
    if (hex.size() % 2 != 0) return false;
    out.clear();
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_nibble(hex[i]);
        int lo = hex_nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) return false;
        out.push_back(static_cast<uint8_t>((hi << 4) | lo));
    }
    return true;
}

std::string hash32::hex() const {
    return hex_encode(bytes_view(data.data(), data.size()));
}

hash32 hash32::from_hex(std::string_view hex) {
    hash32 h;
    if (!try_from_hex(hex, h))
        raise(errc::malformed_document, "bad 32-byte digest: " + std::string(hex));
    return h;
}

bool hash32::try_from_hex(std::string_view hex, hash32& out) {
    bytes raw;
    if (!hex_decode(hex, raw) || raw.size() != 32) return false;
    std::copy(raw.begin(), raw.end(), out.data.begin());
    return true;
}

hash32 sha256(bytes_view data) {
    ensure_sodium();
    hash32 out;
    crypto_hash_sha256(out.data.data(), data.data(), data.size());
    return out;
}

std::string_view errc_name(errc code) {
    switch (code) {
        case errc::ok: return "ok";
        case errc::unsupported_value: return "unsupported_value";
        case errc::malformed_document: return "malformed_document";
        case errc::unknown_submitter: return "unknown_submitter";
        case errc::bad_signature: return "bad_signature";
        case errc::replayed_nonce: return "replayed_nonce";
        case errc::bad_tx_digest: return "bad_tx_digest";
        case errc::bad_linkage: return "bad_linkage";
        case errc::bad_height: return "bad_height";
        case errc::non_monotonic_timestamp: return "non_monotonic_timestamp";
        case errc::bad_merkle_root: return "bad_merkle_root";
        case errc::bad_orderer_signature: return "bad_orderer_signature";
        case errc::queue_full: return "queue_full";
        case errc::unknown_contract: return "unknown_contract";
        case errc::unknown_operation: return "unknown_operation";
        case errc::bad_args: return "bad_args";
        case errc::duplicate_project_id: return "duplicate_project_id";
        case errc::invalid_agreement: return "invalid_agreement";
        case errc::duplicate_key: return "duplicate_key";
        case errc::unauthorized: return "unauthorized";
        case errc::wrong_side: return "wrong_side";
        case errc::already_active: return "already_active";
        case errc::project_not_found: return "project_not_found";
        case errc::project_not_active: return "project_not_active";
        case errc::malformed_cid: return "malformed_cid";
        case errc::duplicate_name_version: return "duplicate_name_version";
        case errc::build_not_found: return "build_not_found";
        case errc::build_not_built: return "build_not_built";
        case errc::gate_not_passed: return "gate_not_passed";
        case errc::insufficient_balance: return "insufficient_balance";
        case errc::nothing_due: return "nothing_due";
        case errc::not_found: return "not_found";
        case errc::integrity_failure: return "integrity_failure";
        case errc::dangling_reference: return "dangling_reference";
        case errc::path_not_found: return "path_not_found";
        case errc::storage_full: return "storage_full";
        case errc::dangling_repo_head: return "dangling_repo_head";
        case errc::submit_failure: return "submit_failure";
        case errc::target_unwritable: return "target_unwritable";
        case errc::method_not_found: return "method_not_found";
        case errc::bad_request: return "bad_request";
        case errc::timeout: return "timeout";
        case errc::connection_failed: return "connection_failed";
        case errc::port_in_use: return "port_in_use";
        case errc::corrupt_chain: return "corrupt_chain";
        case errc::adapter_unavailable: return "adapter_unavailable";
    }
    return "unknown";
}

errc errc_from_name(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(errc::adapter_unavailable); ++i) {
        errc c = static_cast<errc>(i);
        if (errc_name(c) == name) return c;
    }
    return errc::bad_request;
}

static constexpr char b64_alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(bytes_view data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        uint32_t v = (uint32_t(data[i]) << 16) | (uint32_t(data[i + 1]) << 8) |
                     uint32_t(data[i + 2]);
        out.push_back(b64_alphabet[(v >> 18) & 63]);
        out.push_back(b64_alphabet[(v >> 12) & 63]);
        out.push_back(b64_alphabet[(v >> 6) & 63]);
        out.push_back(b64_alphabet[v & 63]);
    }
    size_t rest = data.size() - i;
    if (rest == 1) {
        uint32_t v = uint32_t(data[i]) << 16;
        out.push_back(b64_alphabet[(v >> 18) & 63]);
        out.push_back(b64_alphabet[(v >> 12) & 63]);
        out.append("==");
    } else if (rest == 2) {
        uint32_t v = (uint32_t(data[i]) << 16) | (uint32_t(data[i + 1]) << 8);
        out.push_back(b64_alphabet[(v >> 18) & 63]);
        out.push_back(b64_alphabet[(v >> 12) & 63]);
        out.push_back(b64_alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

bool base64_decode(std::string_view text, bytes& out) {
    out.clear();
    if (text.size() % 4 != 0) return false;
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    out.reserve(text.size() / 4 * 3);
    for (size_t i = 0; i < text.size(); i += 4) {
        int pad = 0;
        uint32_t v = 0;
        for (size_t j = 0; j < 4; ++j) {
            char c = text[i + j];
            if (c == '=') {
                // padding is only legal in the last one or two positions
                if (i + 4 != text.size() || j < 2) return false;
                ++pad;
                v <<= 6;
                continue;
            }
            if (pad > 0) return false;  // data after padding
            int d = value_of(c);
            if (d < 0) return false;
            v = (v << 6) | uint32_t(d);
        }
        out.push_back(static_cast<uint8_t>(v >> 16));
        if (pad < 2) out.push_back(static_cast<uint8_t>(v >> 8));
        if (pad < 1) out.push_back(static_cast<uint8_t>(v));
    }
    return true;
}

}  // namespace devchain

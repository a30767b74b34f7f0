#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "devchain/keys.hpp"
#include "devchain/value.hpp"

namespace devchain {

// Signed contract invocation; the unit of ordering and audit.
struct transaction {
    hash32 tx_id;  // digest of the canonical body
    std::string project_id;
    std::string contract;
    std::string operation;
    doc args = doc::object();
    hash32 submitter;             // member_id
    uint64_t client_timestamp = 0;  // ms since epoch, informational
    uint64_t nonce = 0;
    signature sig;

    // Body document: every field except tx_id and signature.
    doc body_doc() const;
    hash32 body_digest() const;

    doc to_doc() const;
    static transaction from_doc(const doc& d);
};

struct tx_body {
    std::string project_id;
    std::string contract;
    std::string operation;
    doc args = doc::object();
    uint64_t client_timestamp = 0;
    uint64_t nonce = 0;
};

// Fills tx_id and signature; the resulting transaction verifies under the
// signer's public key.
transaction sign_transaction(const tx_body& body, const keypair& signer);

// Maps a member_id to its registered public key; empty optional when the
// member is unknown.
using key_lookup = std::function<std::optional<public_key>(const hash32&)>;

// Checks digest and signature against the registry. Nonce replay is the
// caller's concern (the orderer and the committer track seen nonces).
// Throws chain_error(unknown_submitter | bad_signature | malformed_document).
void verify_transaction(const transaction& tx, const key_lookup& registry);

}  // namespace devchain

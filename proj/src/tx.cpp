#include "devchain/tx.hpp"

namespace devchain {

doc transaction::body_doc() const {
    return doc{{"project_id", project_id},
               {"contract", contract},
               {"operation", operation},
               {"args", args},
               {"submitter", submitter.hex()},
               {"client_timestamp", client_timestamp},
               {"nonce", nonce}};
}

hash32 transaction::body_digest() const { return digest_of(body_doc()); }

doc transaction::to_doc() const {
    doc d = body_doc();
    d["tx_id"] = tx_id.hex();
    d["signature"] = sig.hex();
    return d;
}

transaction transaction::from_doc(const doc& d) {
    transaction tx;
    tx.project_id = require_string(d, "project_id");
    tx.contract = require_string(d, "contract");
    tx.operation = require_string(d, "operation");
    tx.args = require_field(d, "args");
    if (!tx.args.is_object()) raise(errc::bad_args, "args must be a map");
    tx.submitter = hash32::from_hex(require_string(d, "submitter"));
    tx.client_timestamp = require_uint(d, "client_timestamp");
    tx.nonce = require_uint(d, "nonce");
    tx.tx_id = hash32::from_hex(require_string(d, "tx_id"));
    tx.sig = signature::from_hex(require_string(d, "signature"));
    return tx;
}

transaction sign_transaction(const tx_body& body, const keypair& signer) {
    transaction tx;
    tx.project_id = body.project_id;
    tx.contract = body.contract;
    tx.operation = body.operation;
    tx.args = body.args;
    tx.client_timestamp = body.client_timestamp;
    tx.nonce = body.nonce;
    tx.submitter = signer.id.member_id;
    auto encoded = canonical_encode(tx.body_doc());
    tx.tx_id = sha256(bytes_view(encoded.data(), encoded.size()));
    tx.sig = sign_bytes(bytes_view(encoded.data(), encoded.size()), signer.secret);
    return tx;
}

void verify_transaction(const transaction& tx, const key_lookup& registry) {
    auto encoded = canonical_encode(tx.body_doc());
    if (sha256(bytes_view(encoded.data(), encoded.size())) != tx.tx_id)
        raise(errc::malformed_document, "tx_id does not match body digest");
    auto pk = registry(tx.submitter);
    if (!pk)
        raise(errc::unknown_submitter, "unregistered member: " + tx.submitter.hex());
    if (sha256(bytes_view(pk->data.data(), pk->data.size())) != tx.submitter)
        raise(errc::unknown_submitter, "registry key does not match member id");
    if (!verify_bytes(bytes_view(encoded.data(), encoded.size()), tx.sig, *pk))
        raise(errc::bad_signature, "signature does not verify for " + tx.submitter.hex());
}

}  // namespace devchain

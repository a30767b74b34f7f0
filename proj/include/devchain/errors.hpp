#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace devchain {

enum class errc {
    ok = 0,

    // encoding
    unsupported_value,
    malformed_document,

    // transactions
    unknown_submitter,
    bad_signature,
    replayed_nonce,
    bad_tx_digest,

    // chain structure
    bad_linkage,
    bad_height,
    non_monotonic_timestamp,
    bad_merkle_root,
    bad_orderer_signature,

    // ordering
    queue_full,

    // contracts
    unknown_contract,
    unknown_operation,
    bad_args,
    duplicate_project_id,
    invalid_agreement,
    duplicate_key,
    unauthorized,
    wrong_side,
    already_active,
    project_not_found,
    project_not_active,
    malformed_cid,
    duplicate_name_version,
    build_not_found,
    build_not_built,
    gate_not_passed,
    insufficient_balance,
    nothing_due,

    // content store
    not_found,
    integrity_failure,
    dangling_reference,
    path_not_found,
    storage_full,

    // pipeline
    dangling_repo_head,
    submit_failure,
    target_unwritable,

    // node / rpc
    method_not_found,
    bad_request,
    timeout,
    connection_failed,
    port_in_use,
    corrupt_chain,
    adapter_unavailable,
};

std::string_view errc_name(errc code);

// Reverse lookup for wire decoding; returns bad_request for unknown names.
errc errc_from_name(std::string_view name);

class chain_error : public std::runtime_error {
  public:
    chain_error(errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    explicit chain_error(errc code)
        : std::runtime_error(std::string(errc_name(code))), code_(code) {}

    errc code() const { return code_; }

  private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) {
    throw chain_error(code, what);
}

}  // namespace devchain

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "devchain/state.hpp"
#include "devchain/tx.hpp"

namespace devchain::contracts {

enum class audience { all_members, developers, parties };

std::string_view audience_name(audience a);
audience audience_from_name(std::string_view name);

// Emitted by exactly one committed transaction (tx_id zero for engine
// hooks). Delivery to subscribers is asynchronous and at-least-once; the
// on-chain record always precedes the notification.
struct event {
    uint64_t block_height = 0;
    hash32 tx_id;
    std::string contract;
    std::string event_name;
    doc payload = doc::object();
    audience aud = audience::all_members;

    doc to_doc() const;
    static event from_doc(const doc& d);
};

struct tx_receipt {
    bool valid = false;
    errc code = errc::ok;
    std::string detail;
    doc result = doc::object();
};

// Execution context visible to contract code. Contract handlers are pure
// over (state, tx, block time): no clocks, randomness or I/O.
struct exec_context {
    state_txn& state;
    const transaction& tx;
    uint64_t height = 0;
    uint64_t block_timestamp = 0;
    uint32_t tx_index = 0;
    std::vector<event>& events;

    void emit(std::string event_name, doc payload, audience aud);

    // Shared helpers for the phase contracts.
    doc project_doc() const;  // throws project_not_found
    doc member_doc(const hash32& member_id) const;  // throws unauthorized
    void require_active(const doc& project) const;
    role submitter_role() const;
    std::string project_key() const;
};

using handler = std::function<doc(exec_context&)>;

// Deterministic contract engine hosting the six DevOps phase contracts
// plus the token ledger.
class engine {
  public:
    engine();

    // Verifies signature + nonce, then runs the handler atomically. Invalid
    // transactions mutate nothing and are reported in the receipt; they
    // never reject the enclosing block.
    tx_receipt execute(state_store& st, const transaction& tx, uint64_t height,
                       uint64_t block_timestamp, uint32_t tx_index,
                       std::vector<event>& events) const;

    // Deterministic post-block hook: payment deadline enforcement.
    void on_block(state_store& st, uint64_t height, uint64_t block_timestamp,
                  std::vector<event>& events) const;

    // Applies genesis identities and token allocations directly (config is
    // shared by all peers, so this stays deterministic).
    static void apply_genesis(state_store& st, const std::vector<identity>& members,
                              const std::vector<std::pair<hash32, int64_t>>& allocations);

    bool has_operation(const std::string& contract, const std::string& operation) const;

  private:
    std::map<std::pair<std::string, std::string>, handler> handlers_;
};

// Validates the well-formedness of a "sha256-<64 hex>" content id string.
bool well_formed_cid(const std::string& cid);

}  // namespace devchain::contracts

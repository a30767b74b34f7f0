#include "devchain/contracts/engine.hpp"

namespace devchain::contracts {

void register_phase_contracts(std::map<std::pair<std::string, std::string>, handler>& table);

std::string_view audience_name(audience a) {
    switch (a) {
        case audience::all_members: return "all_members";
        case audience::developers: return "developers";
        case audience::parties: return "parties";
    }
    return "all_members";
}

audience audience_from_name(std::string_view name) {
    if (name == "all_members") return audience::all_members;
    if (name == "developers") return audience::developers;
    if (name == "parties") return audience::parties;
    raise(errc::bad_args, "unknown audience: " + std::string(name));
}

doc event::to_doc() const {
    return doc{{"block_height", block_height}, {"tx_id", tx_id.hex()},
               {"contract", contract},         {"event_name", event_name},
               {"payload", payload},           {"audience", std::string(audience_name(aud))}};
}

event event::from_doc(const doc& d) {
    event e;
    e.block_height = require_uint(d, "block_height");
    e.tx_id = hash32::from_hex(require_string(d, "tx_id"));
    e.contract = require_string(d, "contract");
    e.event_name = require_string(d, "event_name");
    e.payload = require_field(d, "payload");
    e.aud = audience_from_name(require_string(d, "audience"));
    return e;
}

void exec_context::emit(std::string event_name, doc payload, audience aud) {
    events.push_back(event{height, tx.tx_id, tx.contract, std::move(event_name),
                           std::move(payload), aud});
}

std::string exec_context::project_key() const { return keys::project(tx.project_id); }

doc exec_context::project_doc() const {
    auto d = state.get(project_key());
    if (!d) raise(errc::project_not_found, "no such project: " + tx.project_id);
    return *d;
}

doc exec_context::member_doc(const hash32& member_id) const {
    auto d = state.get(keys::member(tx.project_id, member_id.hex()));
    if (!d)
        raise(errc::unauthorized,
              member_id.hex() + " is not a member of project " + tx.project_id);
    return *d;
}

void exec_context::require_active(const doc& project) const {
    if (require_string(project, "status") != "active")
        raise(errc::project_not_active,
              "project " + tx.project_id + " is " + require_string(project, "status"));
}

role exec_context::submitter_role() const {
    return role_from_name(require_string(member_doc(tx.submitter), "role"));
}

engine::engine() { register_phase_contracts(handlers_); }

bool engine::has_operation(const std::string& contract, const std::string& operation) const {
    return handlers_.count({contract, operation}) != 0;
}

tx_receipt engine::execute(state_store& st, const transaction& tx, uint64_t height,
                           uint64_t block_timestamp, uint32_t tx_index,
                           std::vector<event>& events) const {
    tx_receipt receipt;
    try {
        verify_transaction(tx, [&](const hash32& mid) { return registry_lookup(st, mid); });
    } catch (const chain_error& e) {
        receipt.code = e.code();
        receipt.detail = e.what();
        return receipt;
    }

    auto nonce_key = keys::nonce(tx.project_id, tx.submitter.hex(), tx.nonce);
    if (st.exists(nonce_key)) {
        receipt.code = errc::replayed_nonce;
        receipt.detail = "nonce already consumed";
        return receipt;
    }
    // The nonce is consumed by inclusion, whether or not contract logic
    // succeeds; a retry needs a fresh nonce.
    st.put(nonce_key, doc{{"height", height}});

    auto it = handlers_.find({tx.contract, tx.operation});
    if (it == handlers_.end()) {
        bool contract_known = false;
        for (const auto& [key, _] : handlers_)
            if (key.first == tx.contract) { contract_known = true; break; }
        receipt.code = contract_known ? errc::unknown_operation : errc::unknown_contract;
        receipt.detail = tx.contract + "." + tx.operation + " does not exist";
        return receipt;
    }

    state_txn txn(st);
    exec_context ctx{txn, tx, height, block_timestamp, tx_index, events};
    size_t events_before = events.size();
    try {
        receipt.result = it->second(ctx);
        txn.commit();
        receipt.valid = true;
    } catch (const chain_error& e) {
        events.resize(events_before);
        receipt.code = e.code();
        receipt.detail = e.what();
    }
    return receipt;
}

void engine::apply_genesis(state_store& st, const std::vector<identity>& members,
                           const std::vector<std::pair<hash32, int64_t>>& allocations) {
    for (const auto& id : members) st.put(keys::registry(id.member_id.hex()), id.to_doc());
    for (const auto& [mid, cents] : allocations) {
        if (cents < 0) raise(errc::bad_args, "negative genesis allocation");
        st.put(keys::token(mid.hex()), doc{{"balance_cents", cents}});
    }
}

}  // namespace devchain::contracts

#pragma once

#include "devchain/consensus/committer.hpp"

namespace devchain::node {

// One entry in a project's reconstructed history. Transaction rows carry the
// submitting member and transaction id; engine-emitted rows (deadline
// freezes) carry neither.
struct trail_row {
    uint64_t height = 0;
    std::string phase;  // contract name: initiation, development, cicd, ...
    std::string op;     // operation, or event name for engine-emitted rows
    std::string tx_id;  // empty for engine-emitted rows
    std::string actor;  // submitter member id, empty for engine-emitted rows
    doc detail = doc::object();

    doc to_doc() const;
};

// Replays the chain through a fresh replica and lists, in block order, every
// committed *valid* transaction belonging to the project plus every
// engine-emitted project event. A pure function of the chain: two peers with
// equal chains produce identical trails.
std::vector<trail_row> audit_trail(const std::vector<block>& blocks, const public_key& orderer_pk,
                                   const std::vector<identity>& genesis_members,
                                   const std::vector<std::pair<hash32, int64_t>>& genesis_allocations,
                                   const std::string& project_id);

}  // namespace devchain::node

#include "devchain/node/audit.hpp"

namespace devchain::node {

doc trail_row::to_doc() const {
    return doc{{"height", height}, {"phase", phase},   {"op", op},
               {"tx_id", tx_id},   {"actor", actor},   {"detail", detail}};
}

std::vector<trail_row> audit_trail(const std::vector<block>& blocks, const public_key& orderer_pk,
                                   const std::vector<identity>& genesis_members,
                                   const std::vector<std::pair<hash32, int64_t>>& genesis_allocations,
                                   const std::string& project_id) {
    consensus::replica rep(orderer_pk, genesis_members, genesis_allocations);
    std::vector<trail_row> rows;
    for (const block& b : blocks) {
        const consensus::commit_result res = rep.commit(b);
        for (size_t i = 0; i < b.txs.size(); ++i) {
            if (!res.validity[i]) continue;
            const transaction& tx = b.txs[i];
            // create_project carries no project id yet; its receipt does.
            const bool creates =
                tx.operation == "create_project" &&
                res.receipts[i].result.value("project_id", "") == project_id;
            if (tx.project_id != project_id && !creates) continue;
            rows.push_back({b.header.height, tx.contract, tx.operation, tx.tx_id.hex(),
                            tx.submitter.hex(), tx.args});
        }
        for (const contracts::event& ev : res.events) {
            if (ev.tx_id != hash32{}) continue;  // tx rows already cover these
            if (ev.payload.value("project_id", "") != project_id) continue;
            rows.push_back({b.header.height, ev.contract, ev.event_name, "", "", ev.payload});
        }
    }
    return rows;
}

}  // namespace devchain::node

#pragma once

#include <map>
#include <string>
#include <vector>

#include "devchain/block.hpp"

namespace devchain {

struct chain_violation {
    uint64_t height = 0;
    errc kind = errc::ok;
    std::string detail;
};

// Result of a full-chain audit; an empty violation list means the chain is
// intact.
struct audit_report {
    std::vector<chain_violation> violations;

    bool clean() const { return violations.empty(); }
    doc to_doc() const;
};

// In-memory hash-linked chain. Structural validation happens on append;
// state mutation is the consensus replayer's job, never this container's.
class block_chain {
  public:
    // Throws bad_linkage / bad_height / non_monotonic_timestamp /
    // bad_merkle_root / bad_orderer_signature.
    void append(const block& b, const public_key& orderer_pk);

    // Structural checks only, without appending.
    static void check_append(const block* tip, const block& b,
                             const public_key& orderer_pk);

    const block& at(uint64_t height) const;
    const block* tip() const;
    uint64_t height() const;  // tip height; throws if empty
    bool empty() const { return blocks_.empty(); }
    size_t size() const { return blocks_.size(); }
    const std::vector<block>& blocks() const { return blocks_; }

  private:
    std::vector<block> blocks_;
};

// Walks the whole chain and reports every linkage, merkle, digest and
// signature violation with the height it occurred at. Member keys are
// resolved from the genesis registry plus key material announced on chain
// (self-certifying: member_id == sha256(public_key)).
audit_report verify_chain(const std::vector<block>& blocks, const public_key& orderer_pk,
                          const std::map<hash32, public_key>& genesis_registry = {});

}  // namespace devchain

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "devchain/keys.hpp"
#include "devchain/value.hpp"

namespace devchain {

// Document-oriented world state, materialized only by deterministic replay
// of committed blocks. Identical block sequences yield byte-identical
// stores.
class state_store {
  public:
    std::optional<doc> get(const std::string& key) const;
    bool exists(const std::string& key) const;
    void put(const std::string& key, doc value);

    // Keys under `prefix`, in lexicographic order.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    uint64_t version() const { return version_; }
    void set_version(uint64_t v) { version_ = v; }

    size_t size() const { return documents_.size(); }
    const std::map<std::string, doc>& documents() const { return documents_; }

    // Digest of the canonical encoding of all documents in key order.
    hash32 digest() const;

  private:
    std::map<std::string, doc> documents_;
    uint64_t version_ = 0;
};

// Read/write view used by contract code. Writes stay in an overlay until
// commit(), so a failed transaction mutates nothing.
class state_txn {
  public:
    explicit state_txn(state_store& base) : base_(base) {}

    std::optional<doc> get(const std::string& key) const;
    bool exists(const std::string& key) const;
    void put(const std::string& key, doc value);

    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    void commit();
    void rollback() { writes_.clear(); }
    bool dirty() const { return !writes_.empty(); }

  private:
    state_store& base_;
    std::map<std::string, doc> writes_;
};

// Well-known state key builders (documented query namespace).
namespace keys {

std::string project(const std::string& project_id);
std::string agreement(const std::string& project_id);
std::string member(const std::string& project_id, const std::string& member_hex);
std::string build(const std::string& project_id, const std::string& name,
                  const std::string& version);
std::string token(const std::string& member_hex);
std::string registry(const std::string& member_hex);
std::string nonce(const std::string& project_id, const std::string& member_hex,
                  uint64_t nonce);
std::string plan(const std::string& project_id, uint64_t seq);
std::string repo_head(const std::string& project_id);
std::string repo_entry(const std::string& project_id, uint64_t seq);
std::string metric(const std::string& project_id, uint64_t height, uint32_t index);
std::string alert(const std::string& project_id, uint64_t height, uint32_t index);
std::string payment(const std::string& project_id, uint64_t seq);

// Fixed-width decimal rendering so lexicographic key order equals numeric
// order.
std::string seq(uint64_t n);

}  // namespace keys

// Public-key lookup backed by the registry/<member_id> namespace.
std::optional<public_key> registry_lookup(const state_store& st, const hash32& member_id);

}  // namespace devchain

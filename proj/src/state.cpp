#include "devchain/state.hpp"

#include <cinttypes>
#include <cstdio>

namespace devchain {

std::optional<doc> state_store::get(const std::string& key) const {
    auto it = documents_.find(key);
    if (it == documents_.end()) return std::nullopt;
    return std::optional<doc>(it->second);
}

bool state_store::exists(const std::string& key) const {
    return documents_.count(key) != 0;
}

void state_store::put(const std::string& key, doc value) {
    check_canonical(value);
    documents_[key] = std::move(value);
}

std::vector<std::string> state_store::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (auto it = documents_.lower_bound(prefix); it != documents_.end(); ++it) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        out.push_back(it->first);
    }
    return out;
}

hash32 state_store::digest() const {
    doc all = doc::object();
    for (const auto& [k, v] : documents_) all[k] = v;
    return digest_of(all);
}

std::optional<doc> state_txn::get(const std::string& key) const {
    auto it = writes_.find(key);
    if (it != writes_.end()) return std::optional<doc>(it->second);
    return base_.get(key);
}

bool state_txn::exists(const std::string& key) const {
    return writes_.count(key) != 0 || base_.exists(key);
}

void state_txn::put(const std::string& key, doc value) {
    check_canonical(value);
    writes_[key] = std::move(value);
}

std::vector<std::string> state_txn::keys_with_prefix(const std::string& prefix) const {
    auto merged = base_.keys_with_prefix(prefix);
    for (auto it = writes_.lower_bound(prefix); it != writes_.end(); ++it) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        merged.push_back(it->first);
    }
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    return merged;
}

void state_txn::commit() {
    for (auto& [k, v] : writes_) base_.put(k, std::move(v));
    writes_.clear();
}

namespace keys {

std::string seq(uint64_t n) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%012" PRIu64, n);
    return buf;
}

std::string project(const std::string& project_id) { return "project/" + project_id; }

std::string agreement(const std::string& project_id) {
    return "project/" + project_id + "/agreement";
}

std::string member(const std::string& project_id, const std::string& member_hex) {
    return "project/" + project_id + "/member/" + member_hex;
}

std::string build(const std::string& project_id, const std::string& name,
                  const std::string& version) {
    return "project/" + project_id + "/build/" + name + "@" + version;
}

std::string token(const std::string& member_hex) { return "token/" + member_hex; }

std::string registry(const std::string& member_hex) { return "registry/" + member_hex; }

std::string nonce(const std::string& project_id, const std::string& member_hex,
                  uint64_t value) {
    return "nonce/" + project_id + "/" + member_hex + "/" + std::to_string(value);
}

std::string plan(const std::string& project_id, uint64_t s) {
    return "project/" + project_id + "/plan/" + seq(s);
}

std::string repo_head(const std::string& project_id) {
    return "project/" + project_id + "/repo";
}

std::string repo_entry(const std::string& project_id, uint64_t s) {
    return "project/" + project_id + "/repo/" + seq(s);
}

std::string metric(const std::string& project_id, uint64_t height, uint32_t index) {
    return "project/" + project_id + "/metric/" + seq(height) + "-" + std::to_string(index);
}

std::string alert(const std::string& project_id, uint64_t height, uint32_t index) {
    return "project/" + project_id + "/alert/" + seq(height) + "-" + std::to_string(index);
}

std::string payment(const std::string& project_id, uint64_t s) {
    return "project/" + project_id + "/payment/" + seq(s);
}

}  // namespace keys

std::optional<public_key> registry_lookup(const state_store& st, const hash32& member_id) {
    auto d = st.get(keys::registry(member_id.hex()));
    if (!d) return std::nullopt;
    return public_key::from_hex(require_string(*d, "public_key"));
}

}  // namespace devchain

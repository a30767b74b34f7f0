#pragma once

#include <string>
#include <vector>

#include "devchain/consensus/orderer.hpp"
#include "devchain/keys.hpp"
#include "devchain/value.hpp"

namespace devchain::node {

struct org_config {
    std::string name;
    std::string peer_endpoint;
};

// Shared topology and genesis description every node loads at startup.
// Identical configs are a precondition for cross-peer determinism.
struct network_config {
    std::vector<org_config> orgs;
    std::string orderer_endpoint;
    identity orderer_identity;  // public half; the secret stays in a key file
    consensus::ordering_policy policy;
    uint64_t time_scale_divisor = 1;   // divides agreement durations in tooling
    uint64_t heartbeat_interval_ms = 500;  // empty blocks while idle
    std::vector<identity> genesis_members;
    std::vector<std::pair<hash32, int64_t>> genesis_allocations;
    std::string data_dir;

    doc to_doc() const;
    static network_config from_doc(const doc& d);  // throws bad_args

    // Reads a JSON config file; DEVCHAIN_DATA_DIR overrides data_dir.
    static network_config load(const std::string& path);

    std::map<hash32, public_key> genesis_registry() const;
    const org_config& org_at(size_t index) const;
};

// The RPC service rides one port above the peer protocol endpoint
// ("host:port" -> "host:port+1"); inproc endpoints get a ".rpc" suffix.
std::string rpc_endpoint_of(const std::string& endpoint);

}  // namespace devchain::node

#include "devchain/node/netconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace devchain::node {

doc network_config::to_doc() const {
    doc orgs_doc = doc::array();
    for (const auto& o : orgs)
        orgs_doc.push_back(doc{{"name", o.name}, {"peer_endpoint", o.peer_endpoint}});
    doc members = doc::array();
    for (const auto& m : genesis_members) members.push_back(m.to_doc());
    doc allocations = doc::object();
    for (const auto& [member, cents] : genesis_allocations)
        allocations[member.hex()] = cents;
    return doc{{"orgs", std::move(orgs_doc)},
               {"orderer_endpoint", orderer_endpoint},
               {"orderer_identity", orderer_identity.to_doc()},
               {"policy", doc{{"max_batch_size", policy.max_batch_size},
                              {"max_batch_wait_ms", policy.max_batch_wait_ms},
                              {"max_queue", policy.max_queue}}},
               {"time_scale_divisor", time_scale_divisor},
               {"heartbeat_interval_ms", heartbeat_interval_ms},
               {"genesis_members", std::move(members)},
               {"genesis_allocations", std::move(allocations)},
               {"data_dir", data_dir}};
}

network_config network_config::from_doc(const doc& d) {
    network_config cfg;
    const doc& orgs = require_field(d, "orgs");
    if (!orgs.is_array() || orgs.empty())
        raise(errc::bad_args, "config needs at least one org");
    std::set<std::string> names, endpoints;
    for (const auto& o : orgs) {
        org_config oc{require_string(o, "name"), require_string(o, "peer_endpoint")};
        if (!names.insert(oc.name).second)
            raise(errc::bad_args, "duplicate org name '" + oc.name + "'");
        if (!endpoints.insert(oc.peer_endpoint).second)
            raise(errc::bad_args, "duplicate endpoint '" + oc.peer_endpoint + "'");
        cfg.orgs.push_back(std::move(oc));
    }
    cfg.orderer_endpoint = require_string(d, "orderer_endpoint");
    if (!endpoints.insert(cfg.orderer_endpoint).second)
        raise(errc::bad_args, "orderer endpoint collides with a peer endpoint");
    cfg.orderer_identity = identity::from_doc(require_field(d, "orderer_identity"));

    if (d.contains("policy")) {
        const doc& p = d["policy"];
        cfg.policy.max_batch_size = require_uint(p, "max_batch_size");
        cfg.policy.max_batch_wait_ms = require_uint(p, "max_batch_wait_ms");
        if (p.contains("max_queue")) cfg.policy.max_queue = require_uint(p, "max_queue");
    }
    if (cfg.policy.max_batch_size < 1 || cfg.policy.max_batch_wait_ms < 1)
        raise(errc::bad_args, "batch policy must be at least 1 tx / 1 ms");

    if (d.contains("time_scale_divisor"))
        cfg.time_scale_divisor = require_uint(d, "time_scale_divisor");
    if (cfg.time_scale_divisor < 1)
        raise(errc::bad_args, "time_scale_divisor must be >= 1");
    if (d.contains("heartbeat_interval_ms"))
        cfg.heartbeat_interval_ms = require_uint(d, "heartbeat_interval_ms");
    if (cfg.heartbeat_interval_ms < 1)
        raise(errc::bad_args, "heartbeat_interval_ms must be >= 1");

    if (d.contains("genesis_members"))
        for (const auto& m : d["genesis_members"])
            cfg.genesis_members.push_back(identity::from_doc(m));
    if (d.contains("genesis_allocations")) {
        const doc& a = d["genesis_allocations"];
        if (!a.is_object()) raise(errc::bad_args, "genesis_allocations not a map");
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!it.value().is_number_integer() || it.value().get<int64_t>() < 0)
                raise(errc::bad_args, "negative allocation for " + it.key());
            cfg.genesis_allocations.emplace_back(hash32::from_hex(it.key()),
                                                 it.value().get<int64_t>());
        }
    }
    cfg.data_dir = require_string(d, "data_dir");
    return cfg;
}

network_config network_config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(errc::bad_args, "cannot read config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    network_config cfg = from_doc(parse_doc(text));
    if (const char* env = std::getenv("DEVCHAIN_DATA_DIR"); env && *env)
        cfg.data_dir = env;
    return cfg;
}

std::map<hash32, public_key> network_config::genesis_registry() const {
    std::map<hash32, public_key> out;
    for (const auto& m : genesis_members) out[m.member_id] = m.pub;
    return out;
}

const org_config& network_config::org_at(size_t index) const {
    if (index >= orgs.size()) raise(errc::bad_args, "org index out of range");
    return orgs[index];
}

std::string rpc_endpoint_of(const std::string& endpoint) {
    if (endpoint.rfind("inproc://", 0) == 0) return endpoint + ".rpc";
    size_t colon = endpoint.rfind(':');
    if (colon == std::string::npos)
        raise(errc::bad_args, "bad endpoint '" + endpoint + "'");
    int port = std::stoi(endpoint.substr(colon + 1));
    return endpoint.substr(0, colon + 1) + std::to_string(port + 1);
}

}  // namespace devchain::node

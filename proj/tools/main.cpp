// devchain: operator CLI covering the full project lifecycle — identity and
// node management, project initiation, plans and repo pushes, CI builds,
// gate attestation, deployment, monitoring, payments, audit and benchmarks.
#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>

#include "devchain/bench/bench.hpp"
#include "devchain/node/audit.hpp"
#include "devchain/node/client.hpp"
#include "devchain/node/node.hpp"
#include "devchain/pipeline/pipeline.hpp"
#include "devchain/state.hpp"

using namespace devchain;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted.store(true); }

uint64_t wall_ms() {
    return uint64_t(std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count());
}

int exit_code_for(errc c) {
    switch (c) {
        case errc::ok:
            return 0;
        case errc::bad_args:
        case errc::unsupported_value:
        case errc::malformed_document:
        case errc::malformed_cid:
        case errc::bad_request:
        case errc::method_not_found:
            return 2;  // usage / malformed input
        case errc::connection_failed:
        case errc::timeout:
        case errc::port_in_use:
        case errc::queue_full:
        case errc::submit_failure:
        case errc::adapter_unavailable:
            return 3;  // transport / availability
        case errc::not_found:
        case errc::project_not_found:
        case errc::build_not_found:
        case errc::path_not_found:
        case errc::dangling_reference:
        case errc::dangling_repo_head:
            return 5;  // missing target
        case errc::nothing_due:
            return 6;
        case errc::corrupt_chain:
        case errc::integrity_failure:
        case errc::bad_linkage:
        case errc::bad_height:
        case errc::non_monotonic_timestamp:
        case errc::bad_merkle_root:
        case errc::bad_orderer_signature:
        case errc::bad_tx_digest:
            return 7;  // integrity violation
        default:
            return 4;  // rejected by contract or policy
    }
}

bytes slurp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) raise(errc::bad_args, "cannot read file '" + path + "'");
    return bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spill_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out.good()) raise(errc::bad_args, "cannot write file '" + path + "'");
    out << content;
}

// Options shared across subcommands, resolved lazily so commands that need
// no network (keygen, repo snapshot) run without a config file.
struct cli_ctx {
    std::string config_path;
    std::string rpc_override;
    std::string identity_path;
    std::string castore_dir;
    size_t org = 0;
    bool json = false;

    node::network_config& config() {
        if (!cfg_) {
            if (config_path.empty())
                raise(errc::bad_args, "this command needs --config <network-config.json>");
            cfg_ = node::network_config::load(config_path);
        }
        return *cfg_;
    }

    std::string rpc_endpoint() {
        if (!rpc_override.empty()) return rpc_override;
        return node::rpc_endpoint_of(config().org_at(org).peer_endpoint);
    }

    node::node_client client() { return node::node_client(rpc_endpoint()); }

    keypair identity() {
        if (identity_path.empty())
            raise(errc::bad_args, "this command needs --identity <keyfile.json>");
        const bytes raw = slurp_file(identity_path);
        const doc d = parse_doc(
            std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()));
        keypair kp;
        kp.id = identity::from_doc(require_field(d, "identity"));
        kp.secret = secret_key::from_hex(require_string(d, "secret_hex"));
        return kp;
    }

    castore::store store() {
        std::string dir = castore_dir;
        if (dir.empty()) {
            if (config_path.empty())
                raise(errc::bad_args, "pass --castore <dir> or --config to place the object store");
            dir = (fs::path(config().data_dir) / "cli" / "castore").string();
        }
        return castore::store(dir);
    }

    void emit(const doc& result, const std::vector<std::string>& human) const {
        if (json) {
            std::cout << result.dump(2) << "\n";
        } else {
            for (const std::string& line : human) std::cout << line << "\n";
        }
    }

  private:
    std::optional<node::network_config> cfg_;
};

struct commit_info {
    std::string tx_id;
    uint64_t height = 0;
    bool valid = false;
};

// Submit and wait for inclusion; the validity bit is the chain's verdict.
commit_info submit_wait(node::node_client& c, const keypair& who, const std::string& project,
                        const std::string& contract, const std::string& op, doc args) {
    static std::atomic<uint64_t> bump{0};
    const int64_t head0 = c.head_height();
    const tx_body body{project, contract, op, std::move(args), wall_ms(),
                       wall_ms() * 1000 + bump.fetch_add(1)};
    const transaction tx = sign_transaction(body, who);
    c.submit(tx);
    uint64_t next = head0 < 0 ? 0 : uint64_t(head0);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(15);
    while (std::chrono::steady_clock::now() < deadline) {
        const int64_t head = c.head_height();
        while (int64_t(next) <= head) {
            auto [b, validity] = c.query_block(next);
            for (size_t i = 0; i < b.txs.size(); ++i)
                if (b.txs[i].tx_id == tx.tx_id)
                    return {tx.tx_id.hex(), next, i < validity.size() && validity[i]};
            ++next;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    raise(errc::timeout, "transaction was not committed within 15 s");
}

commit_info submit_checked(node::node_client& c, const keypair& who, const std::string& project,
                           const std::string& contract, const std::string& op, doc args) {
    commit_info info = submit_wait(c, who, project, contract, op, std::move(args));
    if (!info.valid)
        raise(errc::unauthorized, "transaction " + info.tx_id + " committed at height " +
                                      std::to_string(info.height) +
                                      " but was marked invalid; check role, membership and "
                                      "project status");
    return info;
}

// Ship an object plus everything it references to the node's store.
void upload_closure(castore::store& cs, node::node_client& c, const std::string& cid) {
    if (c.castore_has(cid)) return;
    if (cs.is_structured(cid)) {
        for (const std::string& ref : castore::store::references(cs.get_object(cid)))
            upload_closure(cs, c, ref);
        c.castore_put(cs.get_raw(cid), true);
    } else {
        c.castore_put(cs.get_raw(cid), false);
    }
}

std::vector<block> fetch_chain(node::node_client& c) {
    std::vector<block> blocks;
    const int64_t head = c.head_height();
    for (int64_t h = 0; h <= head; ++h) blocks.push_back(c.query_block(uint64_t(h)).first);
    return blocks;
}

doc commit_doc(const commit_info& info) {
    return doc{{"tx_id", info.tx_id}, {"height", info.height}, {"valid", info.valid}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"devchain — permissioned ledger toolkit for distributed DevOps"};
    app.require_subcommand(1);
    app.fallthrough();

    cli_ctx ctx;
    app.add_option("--config", ctx.config_path, "network config file");
    app.add_option("--org", ctx.org, "org index whose peer serves this command (default 0)");
    app.add_option("--rpc", ctx.rpc_override, "target RPC endpoint (overrides --config/--org)");
    app.add_option("--identity", ctx.identity_path, "key file that signs transactions");
    app.add_option("--castore", ctx.castore_dir, "local object store directory");
    app.add_flag("--json", ctx.json, "machine-readable output");

    // ---- keygen -------------------------------------------------------------
    auto* keygen = app.add_subcommand("keygen", "generate a member keypair");
    auto kg = std::make_shared<std::tuple<std::string, std::string, std::string>>();
    keygen->add_option("--role", std::get<0>(*kg), "owner|manager|developer|tester|client")
        ->required();
    keygen->add_option("--org", std::get<1>(*kg), "organization name")->required();
    keygen->add_option("--out", std::get<2>(*kg), "write the key file here");
    keygen->callback([&ctx, kg] {
        const keypair kp = generate_identity(role_from_name(std::get<0>(*kg)), std::get<1>(*kg));
        const doc key_file{{"identity", kp.id.to_doc()}, {"secret_hex", kp.secret.hex()}};
        if (!std::get<2>(*kg).empty()) spill_file(std::get<2>(*kg), key_file.dump(2) + "\n");
        doc result{{"member_id", kp.id.member_id.hex()},
                   {"public_key", kp.id.pub.hex()},
                   {"role", std::string(role_name(kp.id.member_role))},
                   {"org", kp.id.org}};
        if (ctx.json) result["key_file"] = key_file;
        ctx.emit(result, {"member_id:  " + kp.id.member_id.hex(),
                          "public_key: " + kp.id.pub.hex(),
                          std::get<2>(*kg).empty() ? "(no --out given; key not saved)"
                                                   : "saved:      " + std::get<2>(*kg)});
    });

    // ---- node serve -----------------------------------------------------------
    auto* node_cmd = app.add_subcommand("node", "node daemon");
    auto* serve = node_cmd->add_subcommand("serve", "run a peer or the orderer until interrupted");
    auto serve_role = std::make_shared<std::string>();
    serve->add_option("--role", *serve_role, "peer|orderer")->required();
    serve->callback([&ctx, serve_role] {
        node::node_options opts;
        opts.config = ctx.config();
        opts.org_index = ctx.org;
        if (*serve_role == "orderer") {
            opts.role = node::node_role::orderer;
            opts.orderer_keys = ctx.identity();
        } else if (*serve_role == "peer") {
            opts.role = node::node_role::peer;
        } else {
            raise(errc::bad_args, "--role must be peer or orderer");
        }
        node::node n(opts);
        n.start();
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cout << "serving " << n.name() << "\n  peer: " << n.peer_endpoint()
                  << "\n  rpc:  " << n.rpc_endpoint() << "\n";
        while (!g_interrupted.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        n.stop();
        std::cout << "stopped\n";
    });

    // ---- project ------------------------------------------------------------
    auto* project = app.add_subcommand("project", "initiation phase");

    auto* create = project->add_subcommand("create", "create a project with its agreement");
    struct create_args {
        std::string name, terms_file, trigger = "per_two_weeks", project_id;
        int64_t budget = 0, installment = 0;
        uint64_t period_ms = 14ull * 24 * 60 * 60 * 1000;
        uint64_t grace_ms = 24ull * 60 * 60 * 1000;
    };
    auto ca = std::make_shared<create_args>();
    create->add_option("--name", ca->name)->required();
    create->add_option("--terms-file", ca->terms_file, "agreement document to anchor")->required();
    create->add_option("--budget", ca->budget, "project budget in cents")->required();
    create->add_option("--installment", ca->installment, "installment in cents")->required();
    create->add_option("--trigger", ca->trigger, "per_iteration|per_two_weeks");
    create->add_option("--period-ms", ca->period_ms, "installment period before scaling");
    create->add_option("--grace-ms", ca->grace_ms, "grace window before scaling");
    create->add_option("--project-id", ca->project_id, "defaults to --name");
    create->callback([&ctx, ca] {
        const keypair who = ctx.identity();
        auto c = ctx.client();
        castore::store cs = ctx.store();
        const std::string terms_cid = cs.put_blob(bytes_view(slurp_file(ca->terms_file)));
        upload_closure(cs, c, terms_cid);
        const uint64_t divisor = std::max<uint64_t>(ctx.config().time_scale_divisor, 1);
        const std::string pid = ca->project_id.empty() ? ca->name : ca->project_id;
        doc agreement{{"project_budget_cents", ca->budget},
                      {"installment_cents", ca->installment},
                      {"trigger", ca->trigger},
                      {"period_ms", std::max<uint64_t>(ca->period_ms / divisor, 1)},
                      {"grace_ms", ca->grace_ms / divisor}};
        const commit_info info =
            submit_checked(c, who, "", "initiation", "create_project",
                           doc{{"name", ca->name},
                               {"project_id", pid},
                               {"terms_cid", terms_cid},
                               {"agreement", std::move(agreement)}});
        doc result = commit_doc(info);
        result["project_id"] = pid;
        result["terms_cid"] = terms_cid;
        ctx.emit(result, {"project_id: " + pid, "terms_cid:  " + terms_cid,
                          "tx:         " + info.tx_id + " @ height " +
                              std::to_string(info.height)});
    });

    auto* addmember = project->add_subcommand("add-member", "register a member on a project");
    auto am = std::make_shared<std::tuple<std::string, std::string, std::string, std::string>>();
    addmember->add_option("--project", std::get<0>(*am))->required();
    addmember->add_option("--public-key", std::get<1>(*am), "member public key, hex")->required();
    addmember->add_option("--role", std::get<2>(*am))->required();
    addmember->add_option("--member-org", std::get<3>(*am), "member's organization")->required();
    addmember->callback([&ctx, am] {
        auto c = ctx.client();
        const commit_info info = submit_checked(
            c, ctx.identity(), std::get<0>(*am), "initiation", "add_member",
            doc{{"member", doc{{"public_key", std::get<1>(*am)},
                               {"role", std::get<2>(*am)},
                               {"org", std::get<3>(*am)}}}});
        ctx.emit(commit_doc(info),
                 {"member added; tx " + info.tx_id + " @ height " + std::to_string(info.height)});
    });

    auto* accept = project->add_subcommand("accept-terms", "record one side's acceptance");
    auto ac = std::make_shared<std::pair<std::string, std::string>>();
    accept->add_option("--project", ac->first)->required();
    accept->add_option("--side", ac->second, "team|client")->required();
    accept->callback([&ctx, ac] {
        auto c = ctx.client();
        const commit_info info = submit_checked(c, ctx.identity(), ac->first, "initiation",
                                                "accept_terms", doc{{"side", ac->second}});
        ctx.emit(commit_doc(info),
                 {ac->second + " accepted; tx " + info.tx_id + " @ height " +
                  std::to_string(info.height)});
    });

    // ---- plan -----------------------------------------------------------------
    auto* plan = app.add_subcommand("plan", "development planning records");
    auto* plan_record = plan->add_subcommand("record", "anchor a planning artifact");
    auto pr = std::make_shared<std::tuple<std::string, std::string, std::string>>();
    plan_record->add_option("--project", std::get<0>(*pr))->required();
    plan_record->add_option("--file", std::get<1>(*pr), "artifact (notes, recording)")->required();
    plan_record->add_option("--kind", std::get<2>(*pr), "recording|notes")->default_val("notes");
    plan_record->callback([&ctx, pr] {
        auto c = ctx.client();
        castore::store cs = ctx.store();
        const std::string cid = cs.put_blob(bytes_view(slurp_file(std::get<1>(*pr))));
        upload_closure(cs, c, cid);
        const commit_info info =
            submit_checked(c, ctx.identity(), std::get<0>(*pr), "development", "record_plan",
                           doc{{"artifact_cid", cid}, {"kind", std::get<2>(*pr)}});
        doc result = commit_doc(info);
        result["artifact_cid"] = cid;
        ctx.emit(result, {"artifact_cid: " + cid,
                          "tx:           " + info.tx_id + " @ height " +
                              std::to_string(info.height)});
    });

    // ---- repo -----------------------------------------------------------------
    auto* repo = app.add_subcommand("repo", "repository snapshots and pushes");

    auto* snapshot = repo->add_subcommand("snapshot", "store a directory tree locally");
    auto snap_dir = std::make_shared<std::string>();
    snapshot->add_option("--dir", *snap_dir)->required();
    snapshot->callback([&ctx, snap_dir] {
        castore::store cs = ctx.store();
        const std::string tree = pipeline::snapshot_dir(cs, *snap_dir);
        ctx.emit(doc{{"tree_cid", tree}}, {"tree_cid: " + tree});
    });

    auto* push = repo->add_subcommand("push", "snapshot, commit and anchor the repo head");
    auto pu = std::make_shared<std::tuple<std::string, std::string, std::string>>();
    push->add_option("--project", std::get<0>(*pu))->required();
    push->add_option("--dir", std::get<1>(*pu))->required();
    push->add_option("--message", std::get<2>(*pu))->default_val("update");
    push->callback([&ctx, pu] {
        const keypair who = ctx.identity();
        auto c = ctx.client();
        castore::store cs = ctx.store();
        const std::string tree = pipeline::snapshot_dir(cs, std::get<1>(*pu));
        std::optional<std::string> parent;
        if (auto head = c.query_state(keys::repo_head(std::get<0>(*pu))))
            parent = require_string(*head, "commit_cid");
        const std::string commit = cs.put_commit(tree, parent, who.id.member_id.hex(),
                                                 std::get<2>(*pu), wall_ms());
        upload_closure(cs, c, commit);
        const commit_info info = submit_checked(c, who, std::get<0>(*pu), "development",
                                                "record_repo_head", doc{{"commit_cid", commit}});
        const doc head = *c.query_state(keys::repo_head(std::get<0>(*pu)));
        doc result = commit_doc(info);
        result["commit_cid"] = commit;
        result["head_seq"] = require_uint(head, "head_seq");
        ctx.emit(result, {"commit_cid: " + commit,
                          "head_seq:   " + std::to_string(require_uint(head, "head_seq")),
                          "tx:         " + info.tx_id + " @ height " +
                              std::to_string(info.height)});
    });

    // ---- build ----------------------------------------------------------------
    auto* build = app.add_subcommand("build", "CI pipeline");
    auto* build_run = build->add_subcommand("run", "run checks and anchor the build record");
    auto br = std::make_shared<std::pair<std::string, std::string>>();
    build_run->add_option("--project", br->first)->required();
    build_run->add_option("--pipeline", br->second,
                          "pipeline config file; omit to read devchain.pipeline from the repo");
    build_run->callback([&ctx, br] {
        auto c = ctx.client();
        castore::store cs = ctx.store();
        pipeline::runner runner(c, cs, ctx.identity(), br->first);
        const pipeline::repo_head head = runner.latest_head();
        const pipeline::pipeline_config cfg =
            br->second.empty()
                ? pipeline::pipeline_config::load_tree(cs, cs.resolve_path(head.commit_cid, ""))
                : pipeline::pipeline_config::load_file(br->second);
        const pipeline::build_outcome out = runner.run_pipeline(head, cfg, wall_ms);
        doc stages = doc::array();
        std::vector<std::string> human{"name:    " + out.name, "version: " + out.version,
                                       "status:  " + out.status};
        for (const pipeline::stage_result& r : out.stages) {
            doc failures = doc::array();
            for (const pipeline::stage_failure& f : r.failures)
                failures.push_back(doc{{"rule", f.rule_description}, {"path", f.path}});
            stages.push_back(doc{{"stage", std::string(pipeline::stage_name(r.stage))},
                                 {"passed", r.passed},
                                 {"failures", std::move(failures)}});
            human.push_back("  " + std::string(pipeline::stage_name(r.stage)) + ": " +
                            (r.passed ? "pass" : "fail"));
            for (const pipeline::stage_failure& f : r.failures)
                human.push_back("    " + f.rule_description +
                                (f.path.empty() ? "" : " (" + f.path + ")"));
        }
        doc result{{"name", out.name},
                   {"version", out.version},
                   {"status", out.status},
                   {"stages", std::move(stages)},
                   {"tx_id", out.tx_id.hex()},
                   {"record", out.record}};
        if (out.package_cid) {
            result["package_cid"] = *out.package_cid;
            human.push_back("package: " + *out.package_cid);
        }
        ctx.emit(result, human);
        if (out.status != "built") std::exit(4);
    });

    // ---- gate -------------------------------------------------------------------
    auto* gate = app.add_subcommand("gate", "quality gate attestation");
    auto* attest = gate->add_subcommand("attest", "attest the three gate flags for a build");
    struct attest_args {
        std::string project, name, version;
        bool quality = false, security = false, compliance = false;
    };
    auto ga = std::make_shared<attest_args>();
    attest->add_option("--project", ga->project)->required();
    attest->add_option("--name", ga->name)->required();
    attest->add_option("--version", ga->version)->required();
    attest->add_flag("--quality", ga->quality, "quality checks passed");
    attest->add_flag("--security", ga->security, "security review passed");
    attest->add_flag("--compliance", ga->compliance, "compliance review passed");
    attest->callback([&ctx, ga] {
        auto c = ctx.client();
        const commit_info info = submit_checked(c, ctx.identity(), ga->project, "cicd",
                                                "attest_gate",
                                                doc{{"name", ga->name},
                                                    {"version", ga->version},
                                                    {"quality", ga->quality},
                                                    {"security", ga->security},
                                                    {"compliance", ga->compliance}});
        const doc record = *c.query_state(keys::build(ga->project, ga->name, ga->version));
        doc result = commit_doc(info);
        result["status"] = require_string(record, "status");
        ctx.emit(result, {"status: " + require_string(record, "status"),
                          "tx:     " + info.tx_id + " @ height " + std::to_string(info.height)});
    });

    // ---- deploy -----------------------------------------------------------------
    auto* deploy = app.add_subcommand("deploy", "place a gated package and anchor the deployment");
    auto dp = std::make_shared<std::tuple<std::string, std::string, std::string, std::string>>();
    deploy->add_option("--project", std::get<0>(*dp))->required();
    deploy->add_option("--name", std::get<1>(*dp))->required();
    deploy->add_option("--version", std::get<2>(*dp))->required();
    deploy->add_option("--target", std::get<3>(*dp), "directory receiving the package")->required();
    deploy->callback([&ctx, dp] {
        auto c = ctx.client();
        castore::store cs = ctx.store();
        pipeline::runner runner(c, cs, ctx.identity(), std::get<0>(*dp));
        const pipeline::deploy_outcome out =
            runner.execute_deploy(std::get<1>(*dp), std::get<2>(*dp), std::get<3>(*dp));
        ctx.emit(doc{{"placed_path", out.placed_path},
                     {"package_cid", out.package_cid},
                     {"tx_id", out.tx_id.hex()},
                     {"record", out.record}},
                 {"placed:  " + out.placed_path, "package: " + out.package_cid,
                  "status:  " + require_string(out.record, "status")});
    });

    // ---- monitor ----------------------------------------------------------------
    auto* monitor = app.add_subcommand("monitor", "operations telemetry");

    auto* metric = monitor->add_subcommand("metric", "record a scaled metric sample");
    struct metric_args {
        std::string project, name;
        int64_t scaled_value = 0;
        uint64_t scale = 1;
    };
    auto mm = std::make_shared<metric_args>();
    metric->add_option("--project", mm->project)->required();
    metric->add_option("--name", mm->name)->required();
    metric->add_option("--scaled-value", mm->scaled_value, "value premultiplied by --scale")
        ->required();
    metric->add_option("--scale", mm->scale)->required();
    metric->callback([&ctx, mm] {
        auto c = ctx.client();
        const commit_info info = submit_checked(c, ctx.identity(), mm->project, "monitoring",
                                                "record_metric",
                                                doc{{"metric_name", mm->name},
                                                    {"scaled_value", mm->scaled_value},
                                                    {"scale", mm->scale}});
        ctx.emit(commit_doc(info),
                 {"metric recorded; tx " + info.tx_id + " @ height " +
                  std::to_string(info.height)});
    });

    auto* alert = monitor->add_subcommand("alert", "raise an alert to the developers");
    auto al = std::make_shared<std::tuple<std::string, std::string, std::string>>();
    alert->add_option("--project", std::get<0>(*al))->required();
    alert->add_option("--severity", std::get<1>(*al))->required();
    alert->add_option("--description", std::get<2>(*al))->required();
    alert->callback([&ctx, al] {
        auto c = ctx.client();
        const commit_info info = submit_checked(c, ctx.identity(), std::get<0>(*al), "monitoring",
                                                "raise_alert",
                                                doc{{"severity", std::get<1>(*al)},
                                                    {"description", std::get<2>(*al)}});
        ctx.emit(commit_doc(info),
                 {"alert raised; tx " + info.tx_id + " @ height " + std::to_string(info.height)});
    });

    // ---- pay --------------------------------------------------------------------
    auto* pay = app.add_subcommand("pay", "settle the installment that is due");
    auto pay_project = std::make_shared<std::string>();
    pay->add_option("--project", *pay_project)->required();
    pay->callback([&ctx, pay_project] {
        auto c = ctx.client();
        const keypair who = ctx.identity();
        const commit_info info =
            submit_wait(c, who, *pay_project, "payments", "pay_installment", doc::object());
        if (!info.valid) {
            // distinguish "nothing due" from a genuine refusal
            const doc agreement = *c.query_state(keys::agreement(*pay_project));
            if (agreement.at("next_due").is_null())
                raise(errc::nothing_due, "no installment is due");
            raise(errc::unauthorized, "payment transaction was marked invalid");
        }
        const doc agreement = *c.query_state(keys::agreement(*pay_project));
        doc result = commit_doc(info);
        result["paid_cents"] = agreement.at("paid_cents");
        ctx.emit(result, {"paid; total so far: " +
                              std::to_string(agreement.at("paid_cents").get<int64_t>()) +
                              " cents (tx " + info.tx_id + ")"});
    });

    // ---- wallet -----------------------------------------------------------------
    auto* wallet = app.add_subcommand("wallet", "token accounts");
    auto* balance = wallet->add_subcommand("balance", "current balance in cents");
    auto member_hex = std::make_shared<std::string>();
    balance->add_option("--member", *member_hex, "member id; defaults to --identity");
    balance->callback([&ctx, member_hex] {
        auto c = ctx.client();
        std::string who = *member_hex;
        if (who.empty()) who = ctx.identity().id.member_id.hex();
        const auto entry = c.query_state(keys::token(who));
        const int64_t cents = entry ? require_int(*entry, "balance_cents") : 0;
        ctx.emit(doc{{"member", who}, {"balance_cents", cents}},
                 {who + ": " + std::to_string(cents) + " cents"});
    });

    // ---- audit ------------------------------------------------------------------
    auto* audit = app.add_subcommand("audit", "chain verification and history");

    auto* verify = audit->add_subcommand("verify-chain", "re-verify every block and digest");
    verify->callback([&ctx] {
        auto c = ctx.client();
        const node::network_config& cfg = ctx.config();
        const std::vector<block> blocks = fetch_chain(c);
        const audit_report report =
            verify_chain(blocks, cfg.orderer_identity.pub, cfg.genesis_registry());
        std::vector<std::string> human{std::to_string(report.violations.size()) + " violations in " +
                                       std::to_string(blocks.size()) + " blocks"};
        for (const chain_violation& v : report.violations)
            human.push_back("  height " + std::to_string(v.height) + ": " +
                            std::string(errc_name(v.kind)) + " — " + v.detail);
        ctx.emit(report.to_doc(), human);
        if (!report.clean()) std::exit(7);
    });

    auto* trail = audit->add_subcommand("trail", "phase-ordered project history from chain scan");
    auto trail_project = std::make_shared<std::string>();
    trail->add_option("--project", *trail_project)->required();
    trail->callback([&ctx, trail_project] {
        auto c = ctx.client();
        const node::network_config& cfg = ctx.config();
        const std::vector<node::trail_row> rows =
            node::audit_trail(fetch_chain(c), cfg.orderer_identity.pub, cfg.genesis_members,
                              cfg.genesis_allocations, *trail_project);
        doc out = doc::array();
        std::vector<std::string> human;
        for (const node::trail_row& r : rows) {
            out.push_back(r.to_doc());
            human.push_back("h" + std::to_string(r.height) + "  " + r.phase + "/" + r.op +
                            (r.actor.empty() ? "" : "  by " + r.actor.substr(0, 12)));
        }
        if (human.empty()) human.push_back("(no history for project " + *trail_project + ")");
        ctx.emit(out, human);
    });

    // ---- bench ------------------------------------------------------------------
    auto* bench_cmd = app.add_subcommand("bench", "run benchmark rounds and render the report");
    auto bn = std::make_shared<std::pair<std::string, std::string>>();
    bench_cmd->add_option("--config", bn->first, "benchmark config file")->required();
    bench_cmd->add_option("--out", bn->second, "markdown report path")->required();
    bench_cmd->callback([&ctx, bn] {
        const bench::bench_config cfg = bench::bench_config::load_file(bn->first);
        const bench::bench_result result = bench::run_benchmark(cfg);
        const std::string md = bench::render_markdown(result.rounds, result.resources);
        spill_file(bn->second, md);
        if (ctx.json)
            std::cout << bench::render_json(result.rounds, result.resources).dump(2) << "\n";
        else
            std::cout << md;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const chain_error& e) {
        std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

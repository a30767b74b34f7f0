#include "devchain/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>

#include "devchain/state.hpp"

namespace devchain::pipeline {

namespace fs = std::filesystem;

std::string_view stage_name(stage_kind s) {
    switch (s) {
        case stage_kind::review: return "review";
        case stage_kind::unit: return "unit";
        case stage_kind::integration: return "integration";
    }
    return "review";
}

stage_kind stage_from_name(std::string_view name) {
    if (name == "review") return stage_kind::review;
    if (name == "unit") return stage_kind::unit;
    if (name == "integration") return stage_kind::integration;
    raise(errc::bad_args, "unknown stage: " + std::string(name));
}

doc check_rule::to_doc() const {
    doc d{{"kind", kind}, {"description", description}};
    if (kind == "max_file_bytes") {
        d["limit"] = limit;
    } else if (kind == "forbidden_pattern") {
        d["pattern_b64"] = base64_encode(pattern);
    } else if (kind == "required_path") {
        d["path"] = path;
    } else {  // manifest_assertion
        d["path"] = path;
        d["expected_digest"] = expected_digest;
    }
    return d;
}

check_rule check_rule::from_doc(const doc& d) {
    check_rule r;
    r.kind = require_string(d, "kind");
    r.description = require_string(d, "description");
    if (r.kind == "max_file_bytes") {
        r.limit = require_uint(d, "limit");
    } else if (r.kind == "forbidden_pattern") {
        if (!base64_decode(require_string(d, "pattern_b64"), r.pattern) || r.pattern.empty())
            raise(errc::bad_args, "forbidden_pattern needs a non-empty base64 pattern");
    } else if (r.kind == "required_path") {
        r.path = require_string(d, "path");
        if (r.path.empty()) raise(errc::bad_args, "required_path needs a path");
    } else if (r.kind == "manifest_assertion") {
        r.path = require_string(d, "path");
        r.expected_digest = require_string(d, "expected_digest");
        if (r.path.empty() || !castore::well_formed(r.expected_digest))
            raise(errc::bad_args, "manifest_assertion needs a path and a well-formed digest");
    } else {
        raise(errc::bad_args, "unknown rule kind: " + r.kind);
    }
    return r;
}

doc pipeline_config::to_doc() const {
    doc stage_docs = doc::array();
    for (const stage_spec& s : stages) {
        doc checks = doc::array();
        for (const check_rule& c : s.checks) checks.push_back(c.to_doc());
        stage_docs.push_back(
            doc{{"stage", std::string(stage_name(s.stage))}, {"checks", std::move(checks)}});
    }
    doc include = doc::array();
    for (const std::string& p : package.include_paths) include.push_back(p);
    return doc{{"stages", std::move(stage_docs)},
               {"package", doc{{"name", package.name},
                               {"version_template", package.version_template},
                               {"include_paths", std::move(include)}}},
               {"deploy_target", deploy_target}};
}

pipeline_config pipeline_config::from_doc(const doc& d) {
    pipeline_config cfg;
    int last_stage = -1;
    for (const doc& sd : require_field(d, "stages")) {
        stage_spec s;
        s.stage = stage_from_name(require_string(sd, "stage"));
        if (int(s.stage) <= last_stage)
            raise(errc::bad_args, "stages must appear once, in review, unit, integration order");
        last_stage = int(s.stage);
        for (const doc& cd : require_field(sd, "checks")) s.checks.push_back(check_rule::from_doc(cd));
        cfg.stages.push_back(std::move(s));
    }
    const doc& p = require_field(d, "package");
    cfg.package.name = require_string(p, "name");
    cfg.package.version_template = require_string(p, "version_template");
    if (cfg.package.name.empty() || cfg.package.version_template.empty())
        raise(errc::bad_args, "package needs a name and a version template");
    for (const doc& ip : require_field(p, "include_paths"))
        cfg.package.include_paths.push_back(ip.get<std::string>());
    cfg.deploy_target = require_string(d, "deploy_target");
    return cfg;
}

pipeline_config pipeline_config::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::not_found, "cannot read " + path);
    bytes content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_doc(parse_doc(content));
}

pipeline_config pipeline_config::load_tree(const castore::store& cs, const std::string& tree_cid) {
    std::string cid = cs.resolve_path(tree_cid, "devchain.pipeline");
    return from_doc(parse_doc(cs.get_blob(cid)));
}

std::vector<stage_failure> eval_checks(const castore::store& cs, const std::string& tree_cid,
                                       const std::vector<check_rule>& checks) {
    std::vector<file_entry> files = walk_tree(cs, tree_cid);
    std::vector<stage_failure> out;
    for (const check_rule& c : checks) {
        if (c.kind == "max_file_bytes") {
            for (const file_entry& f : files)
                if (f.size_bytes > c.limit) out.push_back({c.description, f.path});
        } else if (c.kind == "forbidden_pattern") {
            if (c.pattern.empty()) continue;  // validated away; never match everything
            for (const file_entry& f : files) {
                bytes content = cs.get_blob(f.cid);
                if (std::search(content.begin(), content.end(), c.pattern.begin(),
                                c.pattern.end()) != content.end())
                    out.push_back({c.description, f.path});
            }
        } else if (c.kind == "required_path") {
            try {
                cs.resolve_path(tree_cid, c.path);
            } catch (const chain_error&) {
                out.push_back({c.description, c.path});
            }
        } else {  // manifest_assertion
            try {
                if (cs.resolve_path(tree_cid, c.path) != c.expected_digest)
                    out.push_back({c.description, c.path});
            } catch (const chain_error&) {
                out.push_back({c.description, c.path});
            }
        }
    }
    return out;
}

namespace {

uint64_t wall_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

// "YYYY-MM-DD" and "HH:MM:SS", UTC.
std::pair<std::string, std::string> civil_from_ms(uint64_t ms) {
    time_t secs = time_t(ms / 1000);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char date[16], clock[16];
    strftime(date, sizeof(date), "%Y-%m-%d", &tm);
    strftime(clock, sizeof(clock), "%H:%M:%S", &tm);
    return {date, clock};
}

std::string render_version(const std::string& tmpl, uint64_t head_seq) {
    std::string out = tmpl;
    const std::string hole = "<head_seq>";
    for (size_t at = out.find(hole); at != std::string::npos; at = out.find(hole))
        out.replace(at, hole.size(), std::to_string(head_seq));
    return out;
}

std::string verdict_of(const std::vector<stage_result>& results, stage_kind s) {
    for (const stage_result& r : results)
        if (r.stage == s) return r.passed ? "pass" : "fail";
    return "pass";  // a stage with no configured checks cannot fail
}

}  // namespace

runner::runner(node::node_client& chain, castore::store& objects, keypair submitter,
               std::string project_id)
    : chain_(chain),
      objects_(objects),
      submitter_(std::move(submitter)),
      project_id_(std::move(project_id)),
      nonce_(wall_ms()) {}

hash32 runner::submit_with_retry(const std::string& contract, const std::string& op, doc args) {
    transaction tx = sign_transaction(
        tx_body{project_id_, contract, op, std::move(args), wall_ms(), ++nonce_}, submitter_);
    int backoff_ms = 100;
    for (int attempt = 0;; ++attempt) {
        try {
            return chain_.submit(tx);
        } catch (const chain_error& e) {
            bool transient =
                e.code() == errc::timeout || e.code() == errc::connection_failed;
            if (!transient) throw;
            if (attempt >= 5)
                raise(errc::submit_failure,
                      std::string("chain unreachable after retries: ") + e.what());
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
    }
}

bool runner::tx_committed_valid(const hash32& tx_id, int64_t from_height, int timeout_ms) {
    int64_t next = std::max<int64_t>(from_height, 0);
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (std::chrono::steady_clock::now() < deadline) {
        int64_t head = chain_.head_height();
        while (next <= head) {
            auto [blk, validity] = chain_.query_block(uint64_t(next));
            for (size_t i = 0; i < blk.txs.size(); ++i)
                if (blk.txs[i].tx_id == tx_id) return validity[i];
            ++next;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    raise(errc::submit_failure, "transaction was not observed on chain in time");
}

repo_head runner::latest_head() {
    std::optional<doc> head = chain_.query_state(keys::repo_head(project_id_));
    if (!head) raise(errc::not_found, "project " + project_id_ + " has no repo head");
    return {require_uint(*head, "head_seq"), require_string(*head, "commit_cid")};
}

build_outcome runner::run_pipeline(const repo_head& head, const pipeline_config& cfg,
                                   const clock_fn& clock) {
    // The head must resolve to a commit whose tree is fully present.
    std::string tree_cid;
    try {
        doc commit = objects_.get_object(head.commit_cid);
        if (require_string(commit, "kind") != "commit")
            raise(errc::bad_args, "head is not a commit object");
        tree_cid = require_string(commit, "tree_cid");
        walk_tree(objects_, tree_cid);  // touches every subtree
    } catch (const chain_error& e) {
        raise(errc::dangling_repo_head,
              head.commit_cid + " does not resolve locally: " + e.what());
    }

    build_outcome out;
    out.name = cfg.package.name;
    out.version = render_version(cfg.package.version_template, head.head_seq);

    bool all_pass = true;
    for (const stage_spec& s : cfg.stages) {
        stage_result r;
        r.stage = s.stage;
        r.failures = eval_checks(objects_, tree_cid, s.checks);
        r.passed = r.failures.empty();
        all_pass = all_pass && r.passed;
        out.stages.push_back(std::move(r));
    }

    // Any failure short-circuits packaging; the record is still anchored.
    if (all_pass) {
        bytes archive = make_package(objects_, tree_cid, cfg.package.include_paths);
        std::string local_cid = objects_.put_blob(archive);
        std::string remote_cid = chain_.castore_put(archive);
        if (remote_cid != local_cid)
            raise(errc::integrity_failure, "package upload digested to " + remote_cid);
        out.package_cid = local_cid;
    }

    std::string build_key = keys::build(project_id_, out.name, out.version);
    if (chain_.query_state(build_key))
        raise(errc::duplicate_name_version, out.name + "@" + out.version + " already on chain");

    auto [date, clock_s] = civil_from_ms(clock());
    int64_t from_height = chain_.head_height();
    out.tx_id = submit_with_retry(
        "cicd", "record_build",
        doc{{"name", out.name},
            {"version", out.version},
            {"time", clock_s},
            {"date", date},
            {"review", verdict_of(out.stages, stage_kind::review)},
            {"unit", verdict_of(out.stages, stage_kind::unit)},
            {"integration", verdict_of(out.stages, stage_kind::integration)},
            {"package_cid", out.package_cid ? doc(*out.package_cid) : doc(nullptr)}});
    if (!tx_committed_valid(out.tx_id, from_height, 15000)) {
        // Only a concurrent writer can invalidate it after the pre-check.
        if (chain_.query_state(build_key))
            raise(errc::duplicate_name_version,
                  out.name + "@" + out.version + " was recorded concurrently");
        raise(errc::submit_failure, "build record was rejected on chain");
    }
    std::optional<doc> record = chain_.query_state(build_key);
    if (!record) raise(errc::submit_failure, "build record missing after commit");
    out.record = *record;
    out.status = require_string(out.record, "status");
    return out;
}

bytes runner::fetch_verified_package(const std::string& cid) {
    if (objects_.has(cid)) {
        // get_raw / get_blob re-verify digests and manifest consistency, so
        // tampered object files surface as integrity_failure here.
        return objects_.get_blob(cid);
    }
    bytes content = chain_.castore_get(cid);
    std::string got = objects_.put_blob(content);
    if (got != cid)
        raise(errc::integrity_failure, "fetched package digested to " + got + ", wanted " + cid);
    return content;
}

deploy_outcome runner::execute_deploy(const std::string& name, const std::string& version,
                                      const std::string& target) {
    std::string build_key = keys::build(project_id_, name, version);
    std::optional<doc> build = chain_.query_state(build_key);
    if (!build) raise(errc::build_not_found, name + "@" + version + " is not on chain");
    std::string status = require_string(*build, "status");
    if (status != "gate_passed")
        raise(errc::gate_not_passed, "build is " + status + ", expected gate_passed");
    if ((*build)["package_cid"].is_null())
        raise(errc::build_not_found, "build has no package recorded");
    std::string cid = require_string(*build, "package_cid");

    bytes content = fetch_verified_package(cid);

    fs::path dir(target);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(errc::target_unwritable, "cannot create " + dir.string());
    fs::path dest = dir / (name + "-" + version + ".devpack");

    std::optional<bytes> previous;  // restored on rollback
    if (fs::exists(dest)) {
        std::ifstream in(dest, std::ios::binary);
        previous = bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    {
        std::ofstream outf(dest, std::ios::binary | std::ios::trunc);
        outf.write(reinterpret_cast<const char*>(content.data()), std::streamsize(content.size()));
        if (!outf) raise(errc::target_unwritable, "cannot write " + dest.string());
    }

    auto rollback = [&] {
        std::error_code rec;
        if (previous) {
            std::ofstream outf(dest, std::ios::binary | std::ios::trunc);
            outf.write(reinterpret_cast<const char*>(previous->data()),
                       std::streamsize(previous->size()));
        } else {
            fs::remove(dest, rec);
        }
    };

    try {
        int64_t from_height = chain_.head_height();
        hash32 tx_id = submit_with_retry(
            "deployment", "deploy",
            doc{{"name", name}, {"version", version}, {"target", dest.string()}});
        if (!tx_committed_valid(tx_id, from_height, 15000)) {
            rollback();
            raise(errc::gate_not_passed,
                  "deploy transaction was marked invalid on chain; artifact rolled back");
        }
        deploy_outcome out;
        out.placed_path = dest.string();
        out.package_cid = cid;
        out.tx_id = tx_id;
        out.record = *chain_.query_state(build_key);
        return out;
    } catch (const chain_error& e) {
        if (e.code() == errc::submit_failure) rollback();
        throw;
    }
}

repo_watcher::repo_watcher(std::string peer_endpoint, std::string rpc_endpoint,
                           std::string project_id, std::function<void(const repo_head&)> on_head)
    : peer_endpoint_(std::move(peer_endpoint)),
      rpc_endpoint_(std::move(rpc_endpoint)),
      project_id_(std::move(project_id)),
      on_head_(std::move(on_head)) {}

repo_watcher::~repo_watcher() { stop(); }

void repo_watcher::start() {
    thread_ = std::thread([this] { loop(); });
}

void repo_watcher::stop() {
    if (stop_.exchange(true)) return;
    {
        std::lock_guard lock(sub_mu_);
        if (sub_) sub_->close();
    }
    if (thread_.joinable()) thread_.join();
}

void repo_watcher::run_once(const repo_head& h) {
    try {
        on_head_(h);
    } catch (const std::exception&) {
        // a failed run must not kill the watcher; the head stays claimed
    }
}

void repo_watcher::deliver(node::node_client& rpc, uint64_t seq, const std::string& commit_cid) {
    // Fill any gap from chain state first, in order.
    while (last_seq_.load() + 1 < seq) {
        uint64_t missed = last_seq_.load() + 1;
        std::optional<doc> entry = rpc.query_state(keys::repo_entry(project_id_, missed));
        last_seq_.store(missed);
        if (entry) run_once({missed, require_string(*entry, "commit_cid")});
    }
    if (seq <= last_seq_.load()) return;  // duplicate delivery
    last_seq_.store(seq);
    run_once({seq, commit_cid});
}

void repo_watcher::loop() {
    while (!stop_.load()) {
        try {
            node::node_client rpc(rpc_endpoint_);
            {
                std::lock_guard lock(sub_mu_);
                sub_ = std::make_unique<node::event_subscriber>(peer_endpoint_, 0,
                                                                contracts::audience::developers);
            }
            while (!stop_.load()) {
                std::optional<contracts::event> ev = sub_->next(200);
                if (!ev) continue;
                if (ev->event_name != "RepoHeadUpdated") continue;
                if (require_string(ev->payload, "project_id") != project_id_) continue;
                deliver(rpc, require_uint(ev->payload, "head_seq"),
                        require_string(ev->payload, "commit_cid"));
            }
        } catch (const chain_error&) {
            // node went away: resubscribe; replayed events dedup by head_seq
        }
        if (!stop_.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
}

}  // namespace devchain::pipeline

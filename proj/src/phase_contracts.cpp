#include <algorithm>

#include "devchain/contracts/engine.hpp"

namespace devchain::contracts {

namespace {

constexpr uint64_t default_period_ms = 14ull * 24 * 60 * 60 * 1000;  // two weeks
constexpr uint64_t default_grace_ms = 48ull * 60 * 60 * 1000;        // 48 hours

std::string default_project_id(const std::string& name) {
    return sha256("project:" + name).hex().substr(0, 16);
}

bool is_pass_fail(const std::string& v) { return v == "pass" || v == "fail"; }

int64_t balance_of(const state_txn& st, const std::string& member_hex) {
    auto d = st.get(keys::token(member_hex));
    return d ? require_int(*d, "balance_cents") : 0;
}

void set_balance(state_txn& st, const std::string& member_hex, int64_t cents) {
    st.put(keys::token(member_hex), doc{{"balance_cents", cents}});
}

doc validated_agreement(const doc& args) {
    const doc& a = require_field(args, "agreement");
    int64_t budget = require_int(a, "project_budget_cents");
    int64_t installment = require_int(a, "installment_cents");
    std::string trigger = require_string(a, "trigger");
    if (trigger != "per_iteration" && trigger != "per_two_weeks")
        raise(errc::invalid_agreement, "unknown trigger: " + trigger);
    if (budget < 1 || installment < 1)
        raise(errc::invalid_agreement, "budget and installment must be positive");
    if (installment > budget)
        raise(errc::invalid_agreement, "installment exceeds project budget");
    uint64_t period_ms = a.contains("period_ms") ? require_uint(a, "period_ms")
                                                 : default_period_ms;
    uint64_t grace_ms = a.contains("grace_ms") ? require_uint(a, "grace_ms")
                                               : default_grace_ms;
    if (period_ms < 1) raise(errc::invalid_agreement, "period_ms must be >= 1");
    return doc{{"project_budget_cents", budget},
               {"installment_cents", installment},
               {"trigger", trigger},
               {"period_ms", period_ms},
               {"grace_ms", grace_ms},
               {"nonpayment_action", "StopProjectFunctions"},
               {"next_due", nullptr},
               {"paid_cents", 0},
               {"payment_seq", 0}};
}

// ---- initiation --------------------------------------------------------

doc create_project(exec_context& ctx) {
    auto reg = ctx.state.get(keys::registry(ctx.tx.submitter.hex()));
    if (!reg) raise(errc::unauthorized, "submitter has no registered identity");
    role r = role_from_name(require_string(*reg, "role"));
    if (r != role::owner && r != role::manager)
        raise(errc::unauthorized, "only owners and managers can create projects");

    std::string name = require_string(ctx.tx.args, "name");
    std::string terms_cid = require_string(ctx.tx.args, "terms_cid");
    if (!well_formed_cid(terms_cid)) raise(errc::malformed_cid, "bad terms_cid");
    std::string project_id = ctx.tx.args.contains("project_id")
                                 ? require_string(ctx.tx.args, "project_id")
                                 : default_project_id(name);
    if (project_id.empty() || project_id.find('/') != std::string::npos)
        raise(errc::bad_args, "project_id must be a nonempty path segment");

    std::string pkey = keys::project(project_id);
    if (ctx.state.exists(pkey))
        raise(errc::duplicate_project_id, "project already exists: " + project_id);

    doc agreement = validated_agreement(ctx.tx.args);

    ctx.state.put(pkey, doc{{"project_id", project_id},
                            {"name", name},
                            {"owner", ctx.tx.submitter.hex()},
                            {"status", "draft"},
                            {"terms_cid", terms_cid},
                            {"team_accepted", false},
                            {"client_accepted", false},
                            {"iteration_counter", 0},
                            {"plan_counter", 0}});
    ctx.state.put(keys::agreement(project_id), agreement);
    ctx.state.put(keys::member(project_id, ctx.tx.submitter.hex()),
                  doc{{"role", require_string(*reg, "role")},
                      {"org", require_string(*reg, "org")},
                      {"public_key", require_string(*reg, "public_key")}});
    ctx.emit("ProjectCreated", doc{{"project_id", project_id}, {"name", name}},
             audience::all_members);
    return doc{{"project_id", project_id}};
}

doc add_member(exec_context& ctx) {
    doc project = ctx.project_doc();
    role submitter = ctx.submitter_role();
    if (submitter != role::owner && submitter != role::manager)
        raise(errc::unauthorized, "only owners and managers can add members");
    std::string status = require_string(project, "status");
    if (status == "frozen" || status == "closed")
        raise(errc::project_not_active, "project is " + status);

    const doc& m = require_field(ctx.tx.args, "member");
    public_key pk = public_key::from_hex(require_string(m, "public_key"));
    role_from_name(require_string(m, "role"));  // validate
    std::string org = require_string(m, "org");
    hash32 member_id = sha256(bytes_view(pk.data.data(), pk.data.size()));

    std::string mkey = keys::member(ctx.tx.project_id, member_id.hex());
    if (ctx.state.exists(mkey))
        raise(errc::duplicate_key, "public key already registered in project");

    doc member_record{{"role", require_string(m, "role")},
                      {"org", org},
                      {"public_key", pk.hex()}};
    ctx.state.put(mkey, member_record);
    doc reg = member_record;
    reg["member_id"] = member_id.hex();
    ctx.state.put(keys::registry(member_id.hex()), reg);
    ctx.emit("MemberAdded",
             doc{{"project_id", ctx.tx.project_id},
                 {"member_id", member_id.hex()},
                 {"role", require_string(m, "role")}},
             audience::all_members);
    return doc{{"member_id", member_id.hex()}};
}

doc accept_terms(exec_context& ctx) {
    doc project = ctx.project_doc();
    std::string status = require_string(project, "status");
    if (status != "draft") raise(errc::already_active, "project is " + status);

    std::string side = require_string(ctx.tx.args, "side");
    role r = ctx.submitter_role();
    if (side == "team") {
        if (r != role::owner && r != role::manager)
            raise(errc::wrong_side, "team side requires an owner or manager");
        project["team_accepted"] = true;
    } else if (side == "client") {
        if (r != role::client) raise(errc::wrong_side, "client side requires a client");
        project["client_accepted"] = true;
    } else {
        raise(errc::bad_args, "side must be team or client");
    }

    if (project["team_accepted"].get<bool>() && project["client_accepted"].get<bool>()) {
        project["status"] = "active";
        doc agreement = *ctx.state.get(keys::agreement(ctx.tx.project_id));
        if (require_string(agreement, "trigger") == "per_two_weeks")
            agreement["next_due"] = ctx.block_timestamp + agreement["period_ms"].get<uint64_t>();
        ctx.state.put(keys::agreement(ctx.tx.project_id), agreement);
        ctx.emit("TermsConsensus",
                 doc{{"project_id", ctx.tx.project_id}, {"status", "active"}},
                 audience::parties);
    }
    ctx.state.put(ctx.project_key(), project);
    return doc{{"status", require_string(project, "status")}};
}

// ---- continuous development --------------------------------------------

doc record_plan(exec_context& ctx) {
    doc project = ctx.project_doc();
    ctx.member_doc(ctx.tx.submitter);
    ctx.require_active(project);
    std::string cid = require_string(ctx.tx.args, "artifact_cid");
    if (!well_formed_cid(cid)) raise(errc::malformed_cid, "bad artifact_cid: " + cid);
    std::string kind = require_string(ctx.tx.args, "kind");
    if (kind != "recording" && kind != "notes")
        raise(errc::bad_args, "kind must be recording or notes");

    uint64_t seq = project["plan_counter"].get<uint64_t>() + 1;
    project["plan_counter"] = seq;
    ctx.state.put(ctx.project_key(), project);
    ctx.state.put(keys::plan(ctx.tx.project_id, seq),
                  doc{{"artifact_cid", cid},
                      {"kind", kind},
                      {"height", ctx.height},
                      {"recorded_by", ctx.tx.submitter.hex()}});
    ctx.emit("PlanRecorded",
             doc{{"project_id", ctx.tx.project_id}, {"record_id", seq}, {"artifact_cid", cid}},
             audience::all_members);
    return doc{{"record_id", seq}};
}

doc record_repo_head(exec_context& ctx) {
    doc project = ctx.project_doc();
    ctx.member_doc(ctx.tx.submitter);
    ctx.require_active(project);
    std::string cid = require_string(ctx.tx.args, "commit_cid");
    if (!well_formed_cid(cid)) raise(errc::malformed_cid, "bad commit_cid: " + cid);

    auto head = ctx.state.get(keys::repo_head(ctx.tx.project_id));
    uint64_t seq = head ? require_uint(*head, "head_seq") + 1 : 1;
    doc head_doc{{"head_seq", seq}, {"commit_cid", cid}};
    ctx.state.put(keys::repo_head(ctx.tx.project_id), head_doc);
    ctx.state.put(keys::repo_entry(ctx.tx.project_id, seq),
                  doc{{"commit_cid", cid},
                      {"height", ctx.height},
                      {"pushed_by", ctx.tx.submitter.hex()}});
    ctx.emit("RepoHeadUpdated", doc{{"project_id", ctx.tx.project_id},
                                    {"head_seq", seq},
                                    {"commit_cid", cid}},
             audience::developers);
    return doc{{"head_seq", seq}};
}

// ---- CI/CD ---------------------------------------------------------------

doc record_build(exec_context& ctx) {
    doc project = ctx.project_doc();
    ctx.member_doc(ctx.tx.submitter);
    ctx.require_active(project);

    std::string name = require_string(ctx.tx.args, "name");
    std::string version = require_string(ctx.tx.args, "version");
    std::string review = require_string(ctx.tx.args, "review");
    std::string unit = require_string(ctx.tx.args, "unit");
    std::string integration = require_string(ctx.tx.args, "integration");
    if (!is_pass_fail(review) || !is_pass_fail(unit) || !is_pass_fail(integration))
        raise(errc::bad_args, "stage verdicts must be pass or fail");

    std::string bkey = keys::build(ctx.tx.project_id, name, version);
    if (ctx.state.exists(bkey))
        raise(errc::duplicate_name_version, name + "@" + version + " already recorded");

    doc package_cid = nullptr;
    if (ctx.tx.args.contains("package_cid") && !ctx.tx.args.at("package_cid").is_null()) {
        std::string cid = require_string(ctx.tx.args, "package_cid");
        if (!well_formed_cid(cid)) raise(errc::malformed_cid, "bad package_cid");
        package_cid = cid;
    }

    bool ok = review == "pass" && unit == "pass" && integration == "pass";
    doc record{{"name", name},
               {"version", version},
               {"time", require_string(ctx.tx.args, "time")},
               {"date", require_string(ctx.tx.args, "date")},
               {"package_cid", package_cid},
               {"review", review},
               {"unit", unit},
               {"integration", integration},
               {"status", ok ? "built" : "failed"},
               {"gate", nullptr},
               {"deploy_target", nullptr},
               {"recorded_by", ctx.tx.submitter.hex()},
               {"height", ctx.height}};
    ctx.state.put(bkey, record);

    if (ok) {
        ctx.emit("BuildRecorded",
                 doc{{"project_id", ctx.tx.project_id},
                     {"name", name},
                     {"version", version},
                     {"package_cid", package_cid}},
                 audience::all_members);
    } else {
        ctx.emit("Alert",
                 doc{{"project_id", ctx.tx.project_id},
                     {"name", name},
                     {"version", version},
                     {"message", "build failed: remove the error in the code and update "
                                 "the repo"},
                     {"review", review},
                     {"unit", unit},
                     {"integration", integration}},
                 audience::developers);
    }
    return doc{{"status", ok ? "built" : "failed"}};
}

doc attest_gate(exec_context& ctx) {
    doc project = ctx.project_doc();
    role r = ctx.submitter_role();
    if (r != role::manager && r != role::tester)
        raise(errc::unauthorized, "gate attestation requires a manager or tester");
    ctx.require_active(project);

    std::string name = require_string(ctx.tx.args, "name");
    std::string version = require_string(ctx.tx.args, "version");
    std::string bkey = keys::build(ctx.tx.project_id, name, version);
    auto build = ctx.state.get(bkey);
    if (!build) raise(errc::build_not_found, name + "@" + version + " not found");
    if (require_string(*build, "status") != "built")
        raise(errc::build_not_built,
              "build is " + require_string(*build, "status") + ", expected built");

    bool quality = require_bool(ctx.tx.args, "quality");
    bool security = require_bool(ctx.tx.args, "security");
    bool compliance = require_bool(ctx.tx.args, "compliance");
    (*build)["gate"] = doc{{"quality", quality},
                           {"security", security},
                           {"compliance", compliance},
                           {"attester", ctx.tx.submitter.hex()}};
    bool passed = quality && security && compliance;
    if (passed) (*build)["status"] = "gate_passed";
    ctx.state.put(bkey, *build);
    ctx.emit("GateAttested",
             doc{{"project_id", ctx.tx.project_id},
                 {"name", name},
                 {"version", version},
                 {"passed", passed}},
             audience::all_members);
    return doc{{"status", require_string(*build, "status")}};
}

// ---- continuous deployment ----------------------------------------------

doc deploy(exec_context& ctx) {
    doc project = ctx.project_doc();
    ctx.member_doc(ctx.tx.submitter);
    ctx.require_active(project);

    std::string name = require_string(ctx.tx.args, "name");
    std::string version = require_string(ctx.tx.args, "version");
    std::string target = require_string(ctx.tx.args, "target");
    std::string bkey = keys::build(ctx.tx.project_id, name, version);
    auto build = ctx.state.get(bkey);
    if (!build) raise(errc::build_not_found, name + "@" + version + " not found");
    if (require_string(*build, "status") != "gate_passed")
        raise(errc::gate_not_passed,
              "build is " + require_string(*build, "status") + ", expected gate_passed");

    (*build)["status"] = "deployed";
    (*build)["deploy_target"] = target;
    ctx.state.put(bkey, *build);

    uint64_t iteration = project["iteration_counter"].get<uint64_t>() + 1;
    project["iteration_counter"] = iteration;
    ctx.state.put(ctx.project_key(), project);

    doc agreement = *ctx.state.get(keys::agreement(ctx.tx.project_id));
    if (require_string(agreement, "trigger") == "per_iteration" &&
        agreement["paid_cents"].get<int64_t>() <
            agreement["project_budget_cents"].get<int64_t>()) {
        agreement["next_due"] =
            ctx.block_timestamp + agreement["grace_ms"].get<uint64_t>();
        ctx.state.put(keys::agreement(ctx.tx.project_id), agreement);
    }

    ctx.emit("Deployed",
             doc{{"project_id", ctx.tx.project_id},
                 {"name", name},
                 {"version", version},
                 {"target", target},
                 {"iteration", iteration}},
             audience::all_members);
    return doc{{"status", "deployed"}, {"iteration", iteration}};
}

// ---- continuous monitoring ------------------------------------------------

doc record_metric(exec_context& ctx) {
    doc project = ctx.project_doc();
    ctx.member_doc(ctx.tx.submitter);
    ctx.require_active(project);
    std::string name = require_string(ctx.tx.args, "metric_name");
    int64_t scaled_value = require_int(ctx.tx.args, "scaled_value");
    uint64_t scale = require_uint(ctx.tx.args, "scale");
    std::string key = keys::metric(ctx.tx.project_id, ctx.height, ctx.tx_index);
    ctx.state.put(key, doc{{"metric_name", name},
                           {"scaled_value", scaled_value},
                           {"scale", scale},
                           {"height", ctx.height},
                           {"recorded_by", ctx.tx.submitter.hex()}});
    return doc{{"key", key}};
}

doc raise_alert(exec_context& ctx) {
    doc project = ctx.project_doc();
    ctx.member_doc(ctx.tx.submitter);
    ctx.require_active(project);
    std::string severity = require_string(ctx.tx.args, "severity");
    std::string description = require_string(ctx.tx.args, "description");
    std::string alert_id = keys::seq(ctx.height) + "-" + std::to_string(ctx.tx_index);
    // Record first, then notify: both happen in this one tx, and events are
    // only delivered after the block commits.
    ctx.state.put(keys::alert(ctx.tx.project_id, ctx.height, ctx.tx_index),
                  doc{{"alert_id", alert_id},
                      {"severity", severity},
                      {"description", description},
                      {"height", ctx.height},
                      {"raised_by", ctx.tx.submitter.hex()}});
    ctx.emit("Alert",
             doc{{"project_id", ctx.tx.project_id},
                 {"alert_id", alert_id},
                 {"severity", severity},
                 {"description", description}},
             audience::developers);
    return doc{{"alert_id", alert_id}};
}

// ---- payments --------------------------------------------------------------

doc pay_installment(exec_context& ctx) {
    doc project = ctx.project_doc();
    if (ctx.submitter_role() != role::client)
        raise(errc::unauthorized, "only the client pays installments");
    std::string status = require_string(project, "status");
    if (status != "active" && status != "frozen")
        raise(errc::project_not_active, "project is " + status);

    doc agreement = *ctx.state.get(keys::agreement(ctx.tx.project_id));
    if (agreement["next_due"].is_null()) raise(errc::nothing_due, "no installment due");

    int64_t budget = agreement["project_budget_cents"].get<int64_t>();
    int64_t installment = agreement["installment_cents"].get<int64_t>();
    int64_t paid = agreement["paid_cents"].get<int64_t>();
    // The final installment clamps to the remaining budget, so cumulative
    // payments never exceed it.
    int64_t amount = std::min(installment, budget - paid);
    if (amount <= 0) raise(errc::nothing_due, "project budget exhausted");

    std::string payer_hex = ctx.tx.submitter.hex();
    std::string owner_hex = require_string(project, "owner");
    int64_t payer_balance = balance_of(ctx.state, payer_hex);
    if (payer_balance < amount)
        raise(errc::insufficient_balance,
              "balance " + std::to_string(payer_balance) + " < " + std::to_string(amount));

    if (payer_hex != owner_hex) {
        set_balance(ctx.state, payer_hex, payer_balance - amount);
        set_balance(ctx.state, owner_hex, balance_of(ctx.state, owner_hex) + amount);
    }

    paid += amount;
    uint64_t seq = agreement["payment_seq"].get<uint64_t>() + 1;
    agreement["paid_cents"] = paid;
    agreement["payment_seq"] = seq;
    if (require_string(agreement, "trigger") == "per_two_weeks" && paid < budget)
        agreement["next_due"] =
            agreement["next_due"].get<uint64_t>() + agreement["period_ms"].get<uint64_t>();
    else
        agreement["next_due"] = nullptr;
    ctx.state.put(keys::agreement(ctx.tx.project_id), agreement);

    doc receipt{{"payer", payer_hex},
                {"amount_cents", amount},
                {"paid_cents", paid},
                {"payment_seq", seq},
                {"height", ctx.height},
                {"block_timestamp", ctx.block_timestamp}};
    ctx.state.put(keys::payment(ctx.tx.project_id, seq), receipt);

    if (status == "frozen") {
        project["status"] = "active";
        ctx.state.put(ctx.project_key(), project);
    }
    ctx.emit("PaymentMade",
             doc{{"project_id", ctx.tx.project_id},
                 {"amount_cents", amount},
                 {"paid_cents", paid},
                 {"payment_seq", seq}},
             audience::parties);
    doc result = receipt;
    result["status"] = require_string(project, "status");
    return result;
}

// ---- token ledger -----------------------------------------------------------

doc token_transfer(exec_context& ctx) {
    std::string to = require_string(ctx.tx.args, "to");
    int64_t amount = require_int(ctx.tx.args, "amount_cents");
    if (amount < 0) raise(errc::bad_args, "amount_cents must be non-negative");
    hash32 to_id = hash32::from_hex(to);  // validates shape
    (void)to_id;

    std::string from = ctx.tx.submitter.hex();
    int64_t from_balance = balance_of(ctx.state, from);
    if (from_balance < amount)
        raise(errc::insufficient_balance,
              "balance " + std::to_string(from_balance) + " < " + std::to_string(amount));
    if (from != to && amount > 0) {
        set_balance(ctx.state, from, from_balance - amount);
        set_balance(ctx.state, to, balance_of(ctx.state, to) + amount);
    }
    return doc{{"balance_cents", balance_of(ctx.state, from)}};
}

}  // namespace

bool well_formed_cid(const std::string& cid) {
    if (cid.size() != 7 + 64 || cid.compare(0, 7, "sha256-") != 0) return false;
    for (size_t i = 7; i < cid.size(); ++i) {
        char c = cid[i];
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
}

void register_phase_contracts(std::map<std::pair<std::string, std::string>, handler>& t) {
    t[{"initiation", "create_project"}] = create_project;
    t[{"initiation", "add_member"}] = add_member;
    t[{"initiation", "accept_terms"}] = accept_terms;
    t[{"development", "record_plan"}] = record_plan;
    t[{"development", "record_repo_head"}] = record_repo_head;
    t[{"cicd", "record_build"}] = record_build;
    t[{"cicd", "attest_gate"}] = attest_gate;
    t[{"deployment", "deploy"}] = deploy;
    t[{"monitoring", "record_metric"}] = record_metric;
    t[{"monitoring", "raise_alert"}] = raise_alert;
    t[{"payments", "pay_installment"}] = pay_installment;
    t[{"token", "transfer"}] = token_transfer;
}

void engine::on_block(state_store& st, uint64_t height, uint64_t block_timestamp,
                      std::vector<event>& events) const {
    state_txn txn(st);
    for (const auto& key : st.keys_with_prefix("project/")) {
        if (key.find('/', sizeof("project/") - 1) != std::string::npos) continue;
        doc project = *txn.get(key);
        if (require_string(project, "status") != "active") continue;
        std::string project_id = require_string(project, "project_id");
        doc agreement = *txn.get(keys::agreement(project_id));
        if (agreement["next_due"].is_null()) continue;
        uint64_t due = agreement["next_due"].get<uint64_t>();
        uint64_t grace = agreement["grace_ms"].get<uint64_t>();
        if (block_timestamp > due + grace) {
            project["status"] = "frozen";
            txn.put(key, project);
            events.push_back(event{height, hash32{}, "payments", "ProjectFrozen",
                                   doc{{"project_id", project_id},
                                       {"next_due", due},
                                       {"block_timestamp", block_timestamp}},
                                   audience::all_members});
        }
    }
    txn.commit();
}

}  // namespace devchain::contracts

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>

#include "devchain/contracts/engine.hpp"

using namespace devchain;
using namespace devchain::contracts;

namespace {

const std::string good_cid = "sha256-" + sha256(std::string_view("terms")).hex();

constexpr uint64_t kPeriod = 100;  // ms, shrunk for tests
constexpr uint64_t kGrace = 20;

// One orderer-less network-in-a-box: genesis identities plus an engine.
struct harness {
    engine eng;
    state_store st;
    keypair owner = generate_identity(role::owner, "org1");
    keypair manager = generate_identity(role::manager, "org1");
    keypair dev = generate_identity(role::developer, "org2");
    keypair tester = generate_identity(role::tester, "org3");
    keypair client = generate_identity(role::client, "org4");
    std::vector<event> events;
    uint64_t height = 1;
    uint64_t nonce = 0;

    harness() {
        engine::apply_genesis(
            st, {owner.id, manager.id, dev.id, tester.id, client.id},
            {{client.id.member_id, 100000}, {owner.id.member_id, 0}});
    }

    tx_receipt run(const keypair& kp, const std::string& project,
                   const std::string& contract, const std::string& op, doc args,
                   uint64_t ts) {
        transaction tx =
            sign_transaction(tx_body{project, contract, op, std::move(args), ts, ++nonce}, kp);
        return eng.execute(st, tx, height++, ts, 0, events);
    }

    doc agreement_args(const std::string& trigger) {
        return doc{{"name", "demo"},
                   {"terms_cid", good_cid},
                   {"agreement", doc{{"project_budget_cents", 100000},
                                     {"installment_cents", 10000},
                                     {"trigger", trigger},
                                     {"period_ms", kPeriod},
                                     {"grace_ms", kGrace}}}};
    }

    // Draft project "p" with the whole team on board.
    std::string setup_project(const std::string& trigger, uint64_t ts = 10) {
        doc args = agreement_args(trigger);
        args["project_id"] = "p";
        REQUIRE(run(owner, "p", "initiation", "create_project", args, ts).valid);
        for (const keypair* kp : {&manager, &dev, &tester, &client})
            REQUIRE(run(owner, "p", "initiation", "add_member",
                        doc{{"member", kp->id.to_doc()}}, ts)
                        .valid);
        return "p";
    }

    std::string activate_project(const std::string& trigger, uint64_t ts = 10) {
        setup_project(trigger, ts);
        REQUIRE(run(manager, "p", "initiation", "accept_terms", doc{{"side", "team"}}, ts)
                    .valid);
        REQUIRE(run(client, "p", "initiation", "accept_terms", doc{{"side", "client"}}, ts)
                    .valid);
        return "p";
    }

    int64_t balance(const keypair& kp) {
        auto d = st.get(keys::token(kp.id.member_id.hex()));
        return d ? d->at("balance_cents").get<int64_t>() : 0;
    }

    std::string project_status(const std::string& id) {
        return st.get(keys::project(id))->at("status").get<std::string>();
    }

    doc agreement(const std::string& id) { return *st.get(keys::agreement(id)); }

    const event* last_event(const std::string& name) {
        for (auto it = events.rbegin(); it != events.rend(); ++it)
            if (it->event_name == name) return &*it;
        return nullptr;
    }
};

}  // namespace

TEST_CASE("create_project validates authority, agreement and uniqueness") {
    harness h;

    SUBCASE("developer cannot create") {
        auto r = h.run(h.dev, "p", "initiation", "create_project", h.agreement_args("per_iteration"), 1);
        CHECK_FALSE(r.valid);
        CHECK(r.code == errc::unauthorized);
    }
    SUBCASE("installment above budget is rejected") {
        doc args = h.agreement_args("per_iteration");
        args["agreement"]["installment_cents"] = 200000;
        auto r = h.run(h.owner, "p", "initiation", "create_project", args, 1);
        CHECK(r.code == errc::invalid_agreement);
    }
    SUBCASE("unknown trigger is rejected") {
        doc args = h.agreement_args("weekly");
        CHECK(h.run(h.owner, "p", "initiation", "create_project", args, 1).code ==
              errc::invalid_agreement);
    }
    SUBCASE("terms cid must be well formed") {
        doc args = h.agreement_args("per_iteration");
        args["terms_cid"] = "sha256-zz";
        CHECK(h.run(h.owner, "p", "initiation", "create_project", args, 1).code ==
              errc::malformed_cid);
    }
    SUBCASE("happy path writes project, agreement and owner membership") {
        doc args = h.agreement_args("per_iteration");
        args["project_id"] = "p";
        auto r = h.run(h.owner, "p", "initiation", "create_project", args, 1);
        REQUIRE(r.valid);
        CHECK(r.result.at("project_id") == "p");
        CHECK(h.project_status("p") == "draft");
        doc a = h.agreement("p");
        CHECK(a.at("next_due").is_null());
        CHECK(a.at("paid_cents") == 0);
        CHECK(a.at("nonpayment_action") == "StopProjectFunctions");
        CHECK(h.st.exists(keys::member("p", h.owner.id.member_id.hex())));
        REQUIRE(h.last_event("ProjectCreated") != nullptr);
        CHECK(h.last_event("ProjectCreated")->aud == audience::all_members);

        // Same explicit id again.
        auto dup = h.run(h.owner, "p", "initiation", "create_project", args, 2);
        CHECK(dup.code == errc::duplicate_project_id);
    }
    SUBCASE("derived project ids are deterministic") {
        auto r = h.run(h.owner, "", "initiation", "create_project",
                       h.agreement_args("per_iteration"), 1);
        REQUIRE(r.valid);
        std::string derived = r.result.at("project_id");
        CHECK(derived == sha256(std::string_view("project:demo")).hex().substr(0, 16));
    }
}

TEST_CASE("membership controls who may write") {
    harness h;
    h.setup_project("per_iteration");

    SUBCASE("only owners and managers add members") {
        keypair extra = generate_identity(role::developer, "org9");
        auto r = h.run(h.dev, "p", "initiation", "add_member",
                       doc{{"member", extra.id.to_doc()}}, 11);
        CHECK(r.code == errc::unauthorized);
        CHECK(h.run(h.manager, "p", "initiation", "add_member",
                    doc{{"member", extra.id.to_doc()}}, 11)
                  .valid);
        // New member is registered for signature verification too.
        CHECK(h.st.exists(keys::registry(extra.id.member_id.hex())));
    }
    SUBCASE("a public key registers at most once per project") {
        auto r = h.run(h.owner, "p", "initiation", "add_member",
                       doc{{"member", h.dev.id.to_doc()}}, 11);
        CHECK(r.code == errc::duplicate_key);
    }
    SUBCASE("non-members cannot touch the project") {
        keypair stranger = generate_identity(role::developer, "elsewhere");
        // Stranger is registered globally but not a member of p.
        engine::apply_genesis(h.st, {stranger.id}, {});
        auto r = h.run(stranger, "p", "development", "record_repo_head",
                       doc{{"commit_cid", good_cid}}, 11);
        CHECK(r.code == errc::unauthorized);
    }
    SUBCASE("unknown project") {
        auto r = h.run(h.owner, "ghost", "initiation", "add_member",
                       doc{{"member", h.dev.id.to_doc()}}, 11);
        CHECK(r.code == errc::project_not_found);
    }
}

TEST_CASE("accept_terms drives draft to active exactly once") {
    harness h;
    h.setup_project("per_two_weeks", 10);

    CHECK(h.run(h.client, "p", "initiation", "accept_terms", doc{{"side", "team"}}, 11).code ==
          errc::wrong_side);
    CHECK(h.run(h.manager, "p", "initiation", "accept_terms", doc{{"side", "client"}}, 11).code ==
          errc::wrong_side);

    REQUIRE(h.run(h.manager, "p", "initiation", "accept_terms", doc{{"side", "team"}}, 12).valid);
    CHECK(h.project_status("p") == "draft");
    CHECK(h.last_event("TermsConsensus") == nullptr);

    REQUIRE(h.run(h.client, "p", "initiation", "accept_terms", doc{{"side", "client"}}, 20).valid);
    CHECK(h.project_status("p") == "active");
    const event* ev = h.last_event("TermsConsensus");
    REQUIRE(ev != nullptr);
    CHECK(ev->aud == audience::parties);
    // Periodic trigger schedules the first installment at activation.
    CHECK(h.agreement("p").at("next_due") == 20 + kPeriod);

    CHECK(h.run(h.client, "p", "initiation", "accept_terms", doc{{"side", "client"}}, 21).code ==
          errc::already_active);
}

TEST_CASE("plans and repo heads append under active projects only") {
    harness h;
    h.setup_project("per_iteration");

    // Draft project rejects development writes.
    CHECK(h.run(h.dev, "p", "development", "record_plan",
                doc{{"artifact_cid", good_cid}, {"kind", "recording"}}, 11)
              .code == errc::project_not_active);

    REQUIRE(h.run(h.manager, "p", "initiation", "accept_terms", doc{{"side", "team"}}, 12).valid);
    REQUIRE(h.run(h.client, "p", "initiation", "accept_terms", doc{{"side", "client"}}, 13).valid);

    CHECK(h.run(h.dev, "p", "development", "record_plan",
                doc{{"artifact_cid", "sha256-short"}, {"kind", "notes"}}, 14)
              .code == errc::malformed_cid);
    CHECK(h.run(h.dev, "p", "development", "record_plan",
                doc{{"artifact_cid", good_cid}, {"kind", "video"}}, 14)
              .code == errc::bad_args);

    auto r1 = h.run(h.dev, "p", "development", "record_plan",
                    doc{{"artifact_cid", good_cid}, {"kind", "recording"}}, 15);
    REQUIRE(r1.valid);
    CHECK(r1.result.at("record_id") == 1);
    auto r2 = h.run(h.manager, "p", "development", "record_plan",
                    doc{{"artifact_cid", good_cid}, {"kind", "notes"}}, 16);
    CHECK(r2.result.at("record_id") == 2);
    CHECK(h.st.exists(keys::plan("p", 1)));
    CHECK(h.st.exists(keys::plan("p", 2)));

    auto p1 = h.run(h.dev, "p", "development", "record_repo_head",
                    doc{{"commit_cid", good_cid}}, 17);
    REQUIRE(p1.valid);
    CHECK(p1.result.at("head_seq") == 1);
    auto p2 = h.run(h.dev, "p", "development", "record_repo_head",
                    doc{{"commit_cid", good_cid}}, 18);
    CHECK(p2.result.at("head_seq") == 2);
    CHECK(h.st.get(keys::repo_head("p"))->at("head_seq") == 2);
    const event* ev = h.last_event("RepoHeadUpdated");
    REQUIRE(ev != nullptr);
    CHECK(ev->aud == audience::developers);
}

TEST_CASE("builds, gates and deployment follow the state machine") {
    harness h;
    h.activate_project("per_iteration");
    doc build_args{{"name", "app"},     {"version", "1.0"},
                   {"time", "10:00"},   {"date", "2026-02-03"},
                   {"package_cid", good_cid}, {"review", "pass"},
                   {"unit", "pass"},    {"integration", "pass"}};

    SUBCASE("failed stage records failure and alerts developers") {
        doc bad = build_args;
        bad["unit"] = "fail";
        auto r = h.run(h.dev, "p", "cicd", "record_build", bad, 20);
        REQUIRE(r.valid);  // recording a failed build is a valid tx
        CHECK(r.result.at("status") == "failed");
        const event* ev = h.last_event("Alert");
        REQUIRE(ev != nullptr);
        CHECK(ev->aud == audience::developers);
        // A failed build can never be attested.
        CHECK(h.run(h.tester, "p", "cicd", "attest_gate",
                    doc{{"name", "app"}, {"version", "1.0"}, {"quality", true},
                        {"security", true}, {"compliance", true}}, 21)
                  .code == errc::build_not_built);
    }
    SUBCASE("same name@version records once") {
        REQUIRE(h.run(h.dev, "p", "cicd", "record_build", build_args, 20).valid);
        CHECK(h.run(h.dev, "p", "cicd", "record_build", build_args, 21).code ==
              errc::duplicate_name_version);
    }
    SUBCASE("gate requires manager or tester, full pass promotes") {
        REQUIRE(h.run(h.dev, "p", "cicd", "record_build", build_args, 20).valid);
        doc gate{{"name", "app"}, {"version", "1.0"}, {"quality", true},
                 {"security", true}, {"compliance", true}};
        CHECK(h.run(h.dev, "p", "cicd", "attest_gate", gate, 21).code == errc::unauthorized);

        doc partial = gate;
        partial["security"] = false;
        auto r = h.run(h.tester, "p", "cicd", "attest_gate", partial, 22);
        REQUIRE(r.valid);
        CHECK(r.result.at("status") == "built");  // not promoted
        CHECK(h.last_event("GateAttested")->payload.at("passed") == false);

        // Deploy before the gate passes.
        CHECK(h.run(h.manager, "p", "deployment", "deploy",
                    doc{{"name", "app"}, {"version", "1.0"}, {"target", "staging"}}, 23)
                  .code == errc::gate_not_passed);

        REQUIRE(h.run(h.tester, "p", "cicd", "attest_gate", gate, 24).valid);
        CHECK(h.st.get(keys::build("p", "app", "1.0"))->at("status") == "gate_passed");

        auto d = h.run(h.manager, "p", "deployment", "deploy",
                       doc{{"name", "app"}, {"version", "1.0"}, {"target", "staging"}}, 25);
        REQUIRE(d.valid);
        CHECK(d.result.at("iteration") == 1);
        CHECK(h.st.get(keys::build("p", "app", "1.0"))->at("deploy_target") == "staging");
        // Iteration trigger arms the payment clock: due = deploy time + grace.
        CHECK(h.agreement("p").at("next_due") == 25 + kGrace);
        // Double deploy of the same build.
        CHECK(h.run(h.manager, "p", "deployment", "deploy",
                    doc{{"name", "app"}, {"version", "1.0"}, {"target", "prod"}}, 26)
                  .code == errc::gate_not_passed);
    }
    SUBCASE("missing build") {
        CHECK(h.run(h.tester, "p", "cicd", "attest_gate",
                    doc{{"name", "ghost"}, {"version", "0"}, {"quality", true},
                        {"security", true}, {"compliance", true}}, 20)
                  .code == errc::build_not_found);
        CHECK(h.run(h.manager, "p", "deployment", "deploy",
                    doc{{"name", "ghost"}, {"version", "0"}, {"target", "x"}}, 21)
                  .code == errc::build_not_found);
    }
}

TEST_CASE("metrics and alerts record under monitoring") {
    harness h;
    h.activate_project("per_iteration");

    auto m = h.run(h.dev, "p", "monitoring", "record_metric",
                   doc{{"metric_name", "cpu_pct"}, {"scaled_value", 146}, {"scale", 2}}, 20);
    REQUIRE(m.valid);
    CHECK(h.st.exists(m.result.at("key").get<std::string>()));

    // Float metrics cannot even be signed: canonical encoding rejects them.
    errc sign_code = errc::ok;
    try {
        sign_transaction(tx_body{"p", "monitoring", "record_metric",
                                 doc{{"metric_name", "cpu_pct"}, {"scaled_value", 1.46}},
                                 21, 999},
                         h.dev);
    } catch (const chain_error& e) {
        sign_code = e.code();
    }
    CHECK(sign_code == errc::unsupported_value);

    auto a = h.run(h.dev, "p", "monitoring", "raise_alert",
                   doc{{"severity", "high"}, {"description", "cpu spike"}}, 22);
    REQUIRE(a.valid);
    const event* ev = h.last_event("Alert");
    REQUIRE(ev != nullptr);
    CHECK(ev->aud == audience::developers);
    CHECK(ev->payload.at("severity") == "high");
    // The on-chain record exists for the notified alert.
    std::string alert_id = a.result.at("alert_id");
    auto keys_found = h.st.keys_with_prefix("project/p/alert/");
    REQUIRE(keys_found.size() == 1);
    CHECK(h.st.get(keys_found[0])->at("alert_id") == alert_id);
}

TEST_CASE("per-iteration payments clamp to budget and stop when settled") {
    harness h;
    h.activate_project("per_iteration");
    // Shrink the numbers: budget 1000, installment 300 -> 300+300+300+100.
    doc a = h.agreement("p");
    a["project_budget_cents"] = 1000;
    a["installment_cents"] = 300;
    h.st.put(keys::agreement("p"), a);

    int64_t client0 = h.balance(h.client), owner0 = h.balance(h.owner);
    doc build_args{{"name", "app"}, {"version", "1.0"}, {"time", "t"}, {"date", "d"},
                   {"package_cid", nullptr}, {"review", "pass"}, {"unit", "pass"},
                   {"integration", "pass"}};
    doc gate{{"name", "app"}, {"version", "1.0"}, {"quality", true}, {"security", true},
             {"compliance", true}};

    CHECK(h.run(h.client, "p", "payments", "pay_installment", doc::object(), 20).code ==
          errc::nothing_due);

    int64_t expected_paid = 0;
    for (int i = 0; i < 4; ++i) {
        std::string v = std::to_string(i);
        doc b = build_args;
        b["version"] = v;
        doc g = gate;
        g["version"] = v;
        REQUIRE(h.run(h.dev, "p", "cicd", "record_build", b, 30 + i).valid);
        REQUIRE(h.run(h.tester, "p", "cicd", "attest_gate", g, 30 + i).valid);
        REQUIRE(h.run(h.manager, "p", "deployment", "deploy",
                      doc{{"name", "app"}, {"version", v}, {"target", "prod"}}, 30 + i)
                    .valid);
        CHECK_FALSE(h.agreement("p").at("next_due").is_null());

        CHECK(h.run(h.dev, "p", "payments", "pay_installment", doc::object(), 31 + i).code ==
              errc::unauthorized);
        auto pay = h.run(h.client, "p", "payments", "pay_installment", doc::object(), 31 + i);
        REQUIRE(pay.valid);
        expected_paid += (i < 3) ? 300 : 100;  // final installment clamps
        CHECK(pay.result.at("paid_cents") == expected_paid);
        CHECK(h.agreement("p").at("next_due").is_null());
    }
    CHECK(h.balance(h.client) == client0 - 1000);
    CHECK(h.balance(h.owner) == owner0 + 1000);
    CHECK(h.agreement("p").at("payment_seq") == 4);
    CHECK(h.st.exists(keys::payment("p", 4)));

    // Budget settled: a fifth deployment no longer arms the clock.
    doc b = build_args;
    b["version"] = "5";
    doc g = gate;
    g["version"] = "5";
    REQUIRE(h.run(h.dev, "p", "cicd", "record_build", b, 40).valid);
    REQUIRE(h.run(h.tester, "p", "cicd", "attest_gate", g, 40).valid);
    REQUIRE(h.run(h.manager, "p", "deployment", "deploy",
                  doc{{"name", "app"}, {"version", "5"}, {"target", "prod"}}, 40)
                .valid);
    CHECK(h.agreement("p").at("next_due").is_null());
    CHECK(h.run(h.client, "p", "payments", "pay_installment", doc::object(), 41).code ==
          errc::nothing_due);
}

TEST_CASE("missed periodic payments freeze; payment thaws") {
    harness h;
    h.activate_project("per_two_weeks", 10);  // next_due = 110, grace 20

    // Before the grace deadline nothing happens.
    h.eng.on_block(h.st, h.height++, 110 + kGrace, h.events);
    CHECK(h.project_status("p") == "active");

    // One past the deadline freezes and announces.
    h.eng.on_block(h.st, h.height++, 111 + kGrace, h.events);
    CHECK(h.project_status("p") == "frozen");
    const event* ev = h.last_event("ProjectFrozen");
    REQUIRE(ev != nullptr);
    CHECK(ev->aud == audience::all_members);
    CHECK(ev->tx_id.is_zero());

    // Frozen projects refuse everything except payment.
    CHECK(h.run(h.dev, "p", "cicd", "record_build",
                doc{{"name", "a"}, {"version", "1"}, {"time", "t"}, {"date", "d"},
                    {"package_cid", nullptr}, {"review", "pass"}, {"unit", "pass"},
                    {"integration", "pass"}},
                140)
              .code == errc::project_not_active);
    CHECK(h.run(h.owner, "p", "initiation", "add_member",
                doc{{"member", generate_identity(role::developer, "x").id.to_doc()}}, 140)
              .code == errc::project_not_active);

    auto pay = h.run(h.client, "p", "payments", "pay_installment", doc::object(), 140);
    REQUIRE(pay.valid);
    CHECK(pay.result.at("status") == "active");
    CHECK(h.project_status("p") == "active");
    // Clock advanced one period from the missed due date.
    CHECK(h.agreement("p").at("next_due") == 110 + kPeriod);

    // Active again: writes work.
    CHECK(h.run(h.dev, "p", "development", "record_repo_head",
                doc{{"commit_cid", good_cid}}, 141)
              .valid);
}

TEST_CASE("insufficient client balance rejects payment atomically") {
    harness h;
    h.activate_project("per_two_weeks", 10);
    // Drain the client wallet below one installment.
    REQUIRE(h.run(h.client, "", "token", "transfer",
                  doc{{"to", h.dev.id.member_id.hex()}, {"amount_cents", 95000}}, 11)
                .valid);
    auto r = h.run(h.client, "p", "payments", "pay_installment", doc::object(), 120);
    CHECK(r.code == errc::insufficient_balance);
    CHECK(h.balance(h.client) == 5000);              // untouched
    CHECK(h.agreement("p").at("paid_cents") == 0);   // untouched
    CHECK(h.agreement("p").at("next_due") == 110);   // still due -> will freeze
}

TEST_CASE("invalid transactions consume their nonce but mutate nothing else") {
    harness h;
    h.setup_project("per_iteration");
    auto digest_without_nonces = [](const state_store& st) {
        state_store filtered;
        for (const auto& [k, v] : st.documents())
            if (!k.starts_with("nonce/")) filtered.put(k, v);
        return filtered.digest();
    };
    hash32 before = digest_without_nonces(h.st);

    // Contract failure: duplicate project id.
    doc args = h.agreement_args("per_iteration");
    args["project_id"] = "p";
    transaction tx = sign_transaction(
        tx_body{"p", "initiation", "create_project", args, 50, 777}, h.owner);
    auto r = h.eng.execute(h.st, tx, h.height++, 50, 0, h.events);
    CHECK_FALSE(r.valid);
    CHECK(r.code == errc::duplicate_project_id);

    // Only the consumed nonce separates post-state from pre-state.
    CHECK(h.st.exists(keys::nonce("p", h.owner.id.member_id.hex(), 777)));
    CHECK(digest_without_nonces(h.st) == before);

    // Replaying the same signed tx is flagged and changes nothing.
    hash32 mid = h.st.digest();
    auto replay = h.eng.execute(h.st, tx, h.height++, 51, 0, h.events);
    CHECK(replay.code == errc::replayed_nonce);
    CHECK(h.st.digest() == mid);

    // Unknown dispatch targets.
    CHECK(h.run(h.owner, "p", "astrology", "predict", doc::object(), 52).code ==
          errc::unknown_contract);
    CHECK(h.run(h.owner, "p", "initiation", "destroy", doc::object(), 53).code ==
          errc::unknown_operation);

    // A tx signed by an unregistered key is invalid and consumes nothing.
    keypair ghost = generate_identity(role::owner, "ghost");
    transaction bad = sign_transaction(
        tx_body{"p", "initiation", "accept_terms", doc{{"side", "team"}}, 54, 1}, ghost);
    auto g = h.eng.execute(h.st, bad, h.height++, 54, 0, h.events);
    CHECK(g.code == errc::unknown_submitter);
    CHECK_FALSE(h.st.exists(keys::nonce("p", ghost.id.member_id.hex(), 1)));
}

TEST_CASE("token transfers conserve total supply under fuzzing") {
    harness h;
    std::vector<keypair*> wallets{&h.owner, &h.manager, &h.dev, &h.tester, &h.client};
    auto total = [&] {
        int64_t sum = 0;
        for (auto* w : wallets) sum += h.balance(*w);
        return sum;
    };
    const int64_t supply = total();
    CHECK(supply == 100000);

    CHECK(h.run(h.client, "", "token", "transfer",
                doc{{"to", h.dev.id.member_id.hex()}, {"amount_cents", -5}}, 1)
              .code == errc::bad_args);
    CHECK(h.run(h.dev, "", "token", "transfer",
                doc{{"to", h.client.id.member_id.hex()}, {"amount_cents", 1}}, 1)
              .code == errc::insufficient_balance);
    // Self transfer and zero transfer are no-ops.
    CHECK(h.run(h.client, "", "token", "transfer",
                doc{{"to", h.client.id.member_id.hex()}, {"amount_cents", 10}}, 1)
              .valid);
    CHECK(h.run(h.client, "", "token", "transfer",
                doc{{"to", h.dev.id.member_id.hex()}, {"amount_cents", 0}}, 1)
              .valid);
    CHECK(total() == supply);

    std::mt19937_64 rng(7);
    int accepted = 0, rejected = 0;
    for (int i = 0; i < 1000; ++i) {
        keypair& from = *wallets[rng() % wallets.size()];
        keypair& to = *wallets[rng() % wallets.size()];
        int64_t amount = static_cast<int64_t>(rng() % 40000);
        int64_t from_before = h.balance(from);
        auto r = h.run(from, "", "token", "transfer",
                       doc{{"to", to.id.member_id.hex()}, {"amount_cents", amount}}, 2 + i);
        if (from_before >= amount) {
            REQUIRE(r.valid);
            ++accepted;
        } else {
            CHECK(r.code == errc::insufficient_balance);
            ++rejected;
        }
        CHECK(total() == supply);
    }
    CHECK(accepted > 0);
    CHECK(rejected > 0);
}

TEST_CASE("events carry the emitting tx and round trip") {
    harness h;
    h.activate_project("per_two_weeks", 10);
    REQUIRE(!h.events.empty());
    for (const auto& ev : h.events) {
        CHECK_FALSE(ev.tx_id.is_zero());
        CHECK(ev.block_height > 0);
        event back = event::from_doc(ev.to_doc());
        CHECK(back.event_name == ev.event_name);
        CHECK(back.payload == ev.payload);
        CHECK(back.aud == ev.aud);
    }
}

TEST_CASE("identical transaction sequences replay to identical state") {
    keypair owner = generate_identity(role::owner, "org1");
    keypair client = generate_identity(role::client, "org4");

    doc args{{"project_id", "p"},
             {"name", "demo"},
             {"terms_cid", good_cid},
             {"agreement", doc{{"project_budget_cents", 1000},
                               {"installment_cents", 100},
                               {"trigger", "per_two_weeks"},
                               {"period_ms", kPeriod},
                               {"grace_ms", kGrace}}}};
    std::vector<transaction> txs;
    txs.push_back(sign_transaction(
        tx_body{"p", "initiation", "create_project", args, 5, 1}, owner));
    txs.push_back(sign_transaction(
        tx_body{"p", "initiation", "add_member", doc{{"member", client.id.to_doc()}}, 6, 2},
        owner));
    txs.push_back(sign_transaction(
        tx_body{"p", "initiation", "accept_terms", doc{{"side", "team"}}, 7, 3}, owner));
    txs.push_back(sign_transaction(
        tx_body{"p", "initiation", "accept_terms", doc{{"side", "client"}}, 8, 1}, client));
    // One deliberately invalid tx in the middle: replayed nonce.
    txs.push_back(sign_transaction(
        tx_body{"p", "initiation", "accept_terms", doc{{"side", "team"}}, 9, 3}, owner));

    auto replay = [&] {
        engine eng;
        state_store st;
        engine::apply_genesis(st, {owner.id, client.id}, {{client.id.member_id, 5000}});
        std::vector<event> events;
        uint64_t height = 1;
        for (const auto& tx : txs) eng.execute(st, tx, height, 10 * height, 0, events), ++height;
        eng.on_block(st, height, 10 * height, events);
        return std::pair{st.digest(), events};
    };
    auto [d1, e1] = replay();
    auto [d2, e2] = replay();
    CHECK(d1 == d2);
    REQUIRE(e1.size() == e2.size());
    for (size_t i = 0; i < e1.size(); ++i) CHECK(e1[i].to_doc() == e2[i].to_doc());
}

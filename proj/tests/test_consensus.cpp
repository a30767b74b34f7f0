#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "devchain/consensus/orderer.hpp"

using namespace devchain;
using namespace devchain::consensus;

namespace {

struct net {
    keypair ord = generate_identity(role::owner, "orderer-org");
    keypair owner = generate_identity(role::owner, "org1");
    keypair client = generate_identity(role::client, "org4");
    ordering_policy policy;
    orderer_core orderer;
    uint64_t nonce = 0;

    explicit net(ordering_policy p = {})
        : policy(p),
          orderer(ord, p, {owner.id, client.id}, {{client.id.member_id, 1000000}}) {}

    transaction zero_transfer() {
        return sign_transaction(tx_body{"", "token", "transfer",
                                        doc{{"to", owner.id.member_id.hex()},
                                            {"amount_cents", 0}},
                                        0, ++nonce},
                                client);
    }

    replica make_peer() const {
        return replica(ord.id.pub, {owner.id, client.id}, {{client.id.member_id, 1000000}});
    }
};

}  // namespace

TEST_CASE("batches cut at max size immediately and at the deadline otherwise") {
    ordering_policy p;
    p.max_batch_size = 500;
    p.max_batch_wait_ms = 250;
    net n(p);
    n.orderer.cut_genesis(1000);

    for (int i = 0; i < 1250; ++i) n.orderer.submit(n.zero_transfer(), 1000);
    CHECK(n.orderer.pending() == 1250);

    // Two full batches are due with no waiting at all.
    auto b1 = n.orderer.cut_block(1001);
    REQUIRE(b1.has_value());
    CHECK(b1->txs.size() == 500);
    CHECK(b1->header.height == 1);
    auto b2 = n.orderer.cut_block(1001);
    REQUIRE(b2.has_value());
    CHECK(b2->txs.size() == 500);

    // 250 left: below max_batch_size, the wait timer gates the cut.
    CHECK_FALSE(n.orderer.cut_block(1001).has_value());
    CHECK(n.orderer.pending() == 250);
    auto b3 = n.orderer.cut_block(1001 + 250);
    REQUIRE(b3.has_value());
    CHECK(b3->txs.size() == 250);
    CHECK(b3->header.height == 3);
    CHECK(n.orderer.pending() == 0);
    CHECK_FALSE(n.orderer.cut_block(999999).has_value());

    // Submission order is preserved across all three blocks.
    uint64_t expect = 1;
    for (const auto* b : {&*b1, &*b2, &*b3})
        for (const auto& tx : b->txs) CHECK(tx.nonce == expect++);
}

TEST_CASE("partial batch waits exactly max_batch_wait from first arrival") {
    ordering_policy p;
    p.max_batch_size = 100;
    p.max_batch_wait_ms = 250;
    net n(p);
    n.orderer.cut_genesis(0);

    n.orderer.submit(n.zero_transfer(), 1000);  // timer armed at 1000
    n.orderer.submit(n.zero_transfer(), 1200);
    CHECK_FALSE(n.orderer.cut_block(1249).has_value());
    auto b = n.orderer.cut_block(1250);
    REQUIRE(b.has_value());
    CHECK(b->txs.size() == 2);

    // Queue emptied: a fresh arrival re-arms the timer from its own time.
    n.orderer.submit(n.zero_transfer(), 5000);
    CHECK_FALSE(n.orderer.cut_block(5249).has_value());
    CHECK(n.orderer.cut_block(5250).has_value());
}

TEST_CASE("admission control rejects bad submissions") {
    net n;
    n.orderer.cut_genesis(0);
    auto code_of = [](auto&& f) {
        try {
            f();
        } catch (const chain_error& e) {
            return e.code();
        }
        return errc::ok;
    };

    transaction good = n.zero_transfer();
    n.orderer.submit(good, 1);

    // Same nonce while still queued.
    CHECK(code_of([&] { n.orderer.submit(good, 2); }) == errc::replayed_nonce);

    // Same nonce after commit.
    REQUIRE(n.orderer.cut_block(1000).has_value());
    CHECK(code_of([&] { n.orderer.submit(good, 1001); }) == errc::replayed_nonce);

    // Garbage signature.
    transaction bad = n.zero_transfer();
    bad.sig.data[3] ^= 0xff;
    CHECK(code_of([&] { n.orderer.submit(bad, 1001); }) == errc::bad_signature);

    // Unknown key.
    keypair ghost = generate_identity(role::client, "ghost");
    transaction from_ghost = sign_transaction(
        tx_body{"", "token", "transfer",
                doc{{"to", n.owner.id.member_id.hex()}, {"amount_cents", 0}}, 0, 1},
        ghost);
    CHECK(code_of([&] { n.orderer.submit(from_ghost, 1001); }) == errc::unknown_submitter);

    // Queue capacity.
    ordering_policy tiny;
    tiny.max_queue = 3;
    tiny.max_batch_size = 100;
    net small(tiny);
    small.orderer.cut_genesis(0);
    for (int i = 0; i < 3; ++i) small.orderer.submit(small.zero_transfer(), 1);
    CHECK(code_of([&] { small.orderer.submit(small.zero_transfer(), 1); }) ==
          errc::queue_full);
}

TEST_CASE("replicas replay identically, invalid txs marked not rejected") {
    net n;
    block genesis = n.orderer.cut_genesis(100);

    // A mix: valid transfer, over-balance transfer (invalid), valid transfer.
    transaction t1 = sign_transaction(tx_body{"", "token", "transfer",
                                              doc{{"to", n.owner.id.member_id.hex()},
                                                  {"amount_cents", 400}},
                                              0, 1},
                                      n.client);
    transaction t2 = sign_transaction(tx_body{"", "token", "transfer",
                                              doc{{"to", n.owner.id.member_id.hex()},
                                                  {"amount_cents", 99999999}},
                                              0, 2},
                                      n.client);
    transaction t3 = sign_transaction(tx_body{"", "token", "transfer",
                                              doc{{"to", n.owner.id.member_id.hex()},
                                                  {"amount_cents", 600}},
                                              0, 3},
                                      n.client);
    for (const auto& t : {t1, t2, t3}) n.orderer.submit(t, 200);
    auto b = n.orderer.cut_block(200 + 250);
    REQUIRE(b.has_value());
    REQUIRE(b->txs.size() == 3);

    replica peer1 = n.make_peer();
    replica peer2 = n.make_peer();
    peer1.commit(genesis);
    peer2.commit(genesis);
    commit_result r1 = peer1.commit(*b);
    commit_result r2 = peer2.commit(*b);

    CHECK(r1.validity == std::vector<bool>{true, false, true});
    CHECK(r1.receipts[1].code == errc::insufficient_balance);
    CHECK(r1.state_digest == r2.state_digest);
    CHECK(r1.state_digest == n.orderer.self().state().digest());
    REQUIRE(r1.receipts.size() == r2.receipts.size());
    for (size_t i = 0; i < r1.receipts.size(); ++i) {
        CHECK(r1.receipts[i].valid == r2.receipts[i].valid);
        CHECK(r1.receipts[i].code == r2.receipts[i].code);
        CHECK(r1.receipts[i].result == r2.receipts[i].result);
    }
    REQUIRE(r1.events.size() == r2.events.size());
    for (size_t i = 0; i < r1.events.size(); ++i)
        CHECK(r1.events[i].to_doc() == r2.events[i].to_doc());

    // Ledger reflects only the valid transfers.
    CHECK(peer1.state().get(keys::token(n.owner.id.member_id.hex()))->at("balance_cents") ==
          1000);
    CHECK(peer1.state().get(keys::token(n.client.id.member_id.hex()))->at("balance_cents") ==
          1000000 - 1000);
    CHECK(peer1.state().version() == b->header.height);
}

TEST_CASE("structural violations reject the whole block") {
    net n;
    block genesis = n.orderer.cut_genesis(100);
    replica peer = n.make_peer();
    peer.commit(genesis);

    n.orderer.submit(n.zero_transfer(), 200);
    auto b = n.orderer.cut_block(450);
    REQUIRE(b.has_value());

    block tampered = *b;
    tampered.txs[0].tx_id.data[0] ^= 1;
    errc code = errc::ok;
    try {
        peer.commit(tampered);
    } catch (const chain_error& e) {
        code = e.code();
    }
    CHECK(code == errc::bad_merkle_root);
    // The failed commit left no trace; the genuine block still applies.
    CHECK(peer.next_height() == 1);
    CHECK_NOTHROW(peer.commit(*b));
    CHECK(peer.state().digest() == n.orderer.self().state().digest());
}

TEST_CASE("heartbeats advance contract time without transactions") {
    net n;
    block genesis = n.orderer.cut_genesis(10);
    replica peer = n.make_peer();
    peer.commit(genesis);

    // Activate a project with a 100ms period / 20ms grace payment clock.
    const std::string cid = "sha256-" + sha256(std::string_view("t")).hex();
    std::vector<transaction> setup;
    setup.push_back(sign_transaction(
        tx_body{"p", "initiation", "create_project",
                doc{{"project_id", "p"},
                    {"name", "demo"},
                    {"terms_cid", cid},
                    {"agreement", doc{{"project_budget_cents", 1000},
                                      {"installment_cents", 100},
                                      {"trigger", "per_two_weeks"},
                                      {"period_ms", 1000},
                                      {"grace_ms", 200}}}},
                0, 10},
        n.owner));
    setup.push_back(sign_transaction(
        tx_body{"p", "initiation", "add_member", doc{{"member", n.client.id.to_doc()}}, 0, 11},
        n.owner));
    setup.push_back(sign_transaction(
        tx_body{"p", "initiation", "accept_terms", doc{{"side", "team"}}, 0, 12}, n.owner));
    setup.push_back(sign_transaction(
        tx_body{"p", "initiation", "accept_terms", doc{{"side", "client"}}, 0, 13},
        n.client));
    for (const auto& t : setup) n.orderer.submit(t, 20);
    auto b1 = n.orderer.cut_block(20 + 250);  // activation at ts 270 -> due 1270
    REQUIRE(b1.has_value());
    auto r1 = peer.commit(*b1);
    CHECK(r1.validity == std::vector<bool>(4, true));

    // While txs are pending, no heartbeat fires.
    n.orderer.submit(n.zero_transfer(), 280);
    CHECK_FALSE(n.orderer.cut_heartbeat(281).has_value());
    REQUIRE(n.orderer.cut_block(280 + 250).has_value());
    peer.commit(*n.orderer.self().chain().tip());
    CHECK(peer.state().get(keys::project("p"))->at("status") == "active");

    // Quiet network: heartbeats alone push block time past due + grace.
    auto hb1 = n.orderer.cut_heartbeat(1470);
    REQUIRE(hb1.has_value());
    CHECK(hb1->txs.empty());
    auto rh1 = peer.commit(*hb1);
    CHECK(peer.state().get(keys::project("p"))->at("status") == "active");
    CHECK(rh1.events.empty());

    auto hb2 = n.orderer.cut_heartbeat(1471);
    REQUIRE(hb2.has_value());
    auto rh2 = peer.commit(*hb2);
    CHECK(peer.state().get(keys::project("p"))->at("status") == "frozen");
    REQUIRE(rh2.events.size() == 1);
    CHECK(rh2.events[0].event_name == "ProjectFrozen");
    CHECK(rh2.events[0].tx_id.is_zero());
    CHECK(peer.state().digest() == n.orderer.self().state().digest());
}

// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/threat/threat.hpp>

#include <doctest.h>

using namespace iotln;
using namespace iotln::threat;

TEST_CASE("every suite scenario matches its modeled outcome")
{
    const auto suite = run_suite(1);
    REQUIRE(suite.size() == 12);
    for (const auto& v : suite) {
        CAPTURE(v.text());
        CHECK(v.passed);
    }
    auto find = [&](std::string_view name) {
        return *std::find_if(suite.begin(), suite.end(), [&](const Verdict& v) { return v.scenario == name; });
    };
    CHECK(find("gateway-revoked-bridge-online").outcome == "Punished");
    CHECK(find("bridge-revoked-watchtower").outcome == "Punished");
    CHECK(find("gateway-revoked-bridge-offline").outcome == "TooLate");
    CHECK(find("bridge-revoked-gateway-offline").outcome == "TooLate");
    CHECK(find("gateway-latest-state").outcome == "NotRevoked");
}

TEST_CASE("gateway revoked broadcast: bridge takes the whole fee output before the delay matures")
{
    for (std::uint32_t k : {3u, 6u, 144u}) {
        CAPTURE(k);
        RevokedBroadcastConfig c;
        c.to_self_delay = k;
        const auto v = run_revoked_broadcast(c);
        CHECK(v.outcome == "Punished");
        CHECK(v.passed);
        CHECK(v.facts["fee_output"] == btc(1) / 10);
        CHECK(v.facts["fee_output_to"] == "victim");
        CHECK(v.facts["fee_confiscated_before_maturity"] == true);
        CHECK(v.facts["fee_output_spent_at"].get<std::uint32_t>() < v.facts["timelock_matures_at"].get<std::uint32_t>());
        CHECK(v.facts["cheater_final"] == 0);
        CHECK(v.facts["funding_spends_without_device_sig"] == 0);
    }
}

TEST_CASE("punishment depends on whether the victim returns before the delay matures")
{
    RevokedBroadcastConfig c;
    c.to_self_delay = 6;
    c.victim_offline_blocks = 3;
    CHECK(run_revoked_broadcast(c).outcome == "Punished");
    c.victim_offline_blocks = 5;
    CHECK(run_revoked_broadcast(c).outcome == "Punished");
    c.victim_offline_blocks = 6;
    const auto late = run_revoked_broadcast(c);
    CHECK(late.outcome == "TooLate");
    CHECK(late.passed);
    // The gateway kept its fee; the device's delayed output came home.
    CHECK(late.facts["cheater_final"].get<Amount>() > 0);
    CHECK(late.facts["device_loss"] == 0);
}

TEST_CASE("greedy confiscation after a gateway cheat also takes the device output")
{
    const auto v = run_revoked_broadcast({});
    CHECK(v.facts["device_loss"].get<Amount>() == btc(9) - 1'000);
    CHECK(v.facts["confiscated_total"] == btc(10));
}

TEST_CASE("bridge cheating: the gateway confiscates and the device is untouched")
{
    RevokedBroadcastConfig c;
    c.adversary = Adversary::Bridge;
    const auto v = run_revoked_broadcast(c);
    CHECK(v.outcome == "Punished");
    CHECK(v.facts["device_loss"] == 0);
    CHECK(v.facts["cheater_final"].get<Amount>() < v.facts["cheater_honest"].get<Amount>());
}

TEST_CASE("state 0 commitments cannot be broadcast without the device")
{
    RevokedBroadcastConfig c;
    c.state_index = 0;
    const auto v = run_revoked_broadcast(c);
    CHECK(v.outcome == "BroadcastRejected");
    CHECK(v.passed);
}

TEST_CASE("revoked broadcast rejects a state that does not exist")
{
    RevokedBroadcastConfig c;
    c.state_index = 9;
    CHECK_THROWS_AS(run_revoked_broadcast(c), std::invalid_argument);
}

TEST_CASE("scenarios are pure functions of seed and config")
{
    RevokedBroadcastConfig c;
    c.seed = 42;
    c.adversary = Adversary::Bridge;
    CHECK(run_revoked_broadcast(c).json() == run_revoked_broadcast(c).json());
    CHECK(run_mitm(MitmKind::Replay, 3).json() == run_mitm(MitmKind::Replay, 3).json());
}

namespace {

struct Setup {
    agents::Network net;
    WatchedChannel watched;
    chain::Transaction revoked;
    std::uint32_t fee_index = 0;

    Setup()
    {
        agents::iot_open_channel(net, btc(10));
        agents::iot_send_payment(net, btc(1));
        const auto& gw = *net.gateway().channel();
        const auto& br = *net.bridge().channel();
        watched = {gw.funding(), br.counterparty_reveals(), net.bridge().signing().pub};
        const auto& c = gw.commitments(1)->gateway_held;
        revoked = c.tx;
        fee_index = *c.find(channel::OutputRole::GatewayFee);
    }
};

} // namespace

TEST_CASE("watchtower: quiet chain gives an empty report")
{
    Setup s;
    Watchtower t;
    t.watch(s.watched);
    const auto r = t.tick(s.net.chain());
    CHECK(r.submitted.empty());
    CHECK(r.too_late.empty());
    CHECK(watchtower_tick(s.net.chain(), {s.watched}).submitted.empty());
}

TEST_CASE("watchtower: one revoked gateway broadcast yields one confiscation including the fee")
{
    Setup s;
    Watchtower t;
    t.watch(s.watched);
    s.net.chain().submit_tx(s.revoked);
    CHECK(t.tick(s.net.chain()).submitted.empty()); // still in the mempool
    s.net.world().mine(1);
    const auto r = t.tick(s.net.chain());
    REQUIRE(r.submitted.size() == 1);
    const auto& tx = r.submitted.front();
    const chain::OutPoint fee_op{s.revoked.txid(), s.fee_index};
    CHECK(std::any_of(tx.inputs.begin(), tx.inputs.end(), [&](const chain::TxIn& in) { return in.prevout == fee_op; }));
    CHECK(chain::sole_key(tx.outputs[0].condition) == s.net.bridge().signing().pub);
    s.net.world().mine(1);
    CHECK(s.net.chain().spender(fee_op) == tx.txid());
    CHECK(t.pending() == 0);
    CHECK(t.tick(s.net.chain()).submitted.empty());
}

TEST_CASE("watchtower: ticking after the cheater swept records TooLate")
{
    Setup s;
    s.net.chain().submit_tx(s.revoked);
    const auto k = s.net.gateway().channel()->params().to_self_delay;
    s.net.world().mine(k);
    CHECK(try_sweep(s.net.chain(), s.revoked, s.net.gateway().signing(), s.net.gateway().signing().pub) > 0);
    s.net.world().mine(1);
    const auto r = watchtower_tick(s.net.chain(), {s.watched});
    REQUIRE(r.too_late.size() == 1);
    CHECK(r.too_late.front() == s.revoked.txid());
}

TEST_CASE("sweeps only take what the key unlocks at the next height")
{
    Setup s;
    s.net.chain().submit_tx(s.revoked);
    s.net.world().mine(1);
    // Gateway's delayed fee branch is not open yet.
    CHECK_FALSE(build_sweep(s.net.chain(), s.revoked, s.net.gateway().signing(), s.net.gateway().signing().pub));
    // The bridge needs the preimage for the HTLC hashlock branch.
    const auto& bk = s.net.bridge().signing();
    CHECK_FALSE(build_sweep(s.net.chain(), s.revoked, bk, bk.pub));
    auto tx = build_sweep(s.net.chain(), s.revoked, bk, bk.pub, s.net.bridge().known_preimages());
    REQUIRE(tx);
    CHECK(tx->inputs.size() == 1);
    CHECK(tx->total_out() == btc(1) * 9 / 10 - s.net.chain().config().onchain_fee);
}

TEST_CASE("theft attempts without the device signature are all refused")
{
    const auto v = run_theft_attempt(5);
    CHECK(v.passed);
    for (const auto& row : v.facts["attempts"]) {
        if (row["attempt"] == "control-latest-commitment")
            CHECK(row["result"] == "Ok");
        else
            CHECK(row["result"] == "ThresholdNotMet");
    }
}

TEST_CASE("1000 under-signed funding spends are all rejected")
{
    const auto v = run_signature_fuzz(11, 1000);
    CHECK(v.facts["rejected"] == 1000);
    CHECK(v.facts["accepted"] == 0);
    CHECK(v.passed);
}

TEST_CASE("1000 replayed or tampered envelopes cause no state transition")
{
    const auto v = run_envelope_fuzz(13, 1000);
    CHECK(v.facts["state_transitions"] == 0);
    CHECK(v.facts["payments_executed"] == 1);
    CHECK(v.passed);
}

TEST_CASE("man-in-the-middle variants")
{
    for (auto k : {MitmKind::Tamper, MitmKind::Replay, MitmKind::Eavesdrop, MitmKind::Impersonate}) {
        const auto v = run_mitm(k, 2);
        CAPTURE(v.text());
        CHECK(v.passed);
        CHECK(mitm_kind_from_string(to_string(k)) == k);
    }
    CHECK_FALSE(mitm_kind_from_string("sniff"));
    CHECK(run_mitm(MitmKind::Tamper).facts["gateway_mac_mismatches"] == 1);
    CHECK(run_mitm(MitmKind::Eavesdrop).facts["plaintext_leaks"].empty());
    CHECK(run_mitm(MitmKind::Impersonate).facts["device_rejected_foreign_session"] == true);
}

TEST_CASE("verdict text and json")
{
    Verdict v;
    v.scenario = "s";
    v.outcome = "o";
    v.passed = true;
    v.facts["n"] = 3;
    v.facts["who"] = "gateway";
    CHECK(v.text() == "s: o PASS\n  n = 3\n  who = gateway\n");
    CHECK(v.json().dump() == R"({"scenario":"s","outcome":"o","passed":true,"facts":{"n":3,"who":"gateway"}})");
}

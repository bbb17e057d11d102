// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/agents/network.hpp>

#include <doctest.h>

#include <fstream>

using namespace iotln;
using namespace iotln::agents;

namespace {

std::vector<std::string> golden(const std::string& name)
{
    std::ifstream in(std::string(IOTLN_GOLDEN_DIR) + "/" + name);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) lines.push_back(l);
    return lines;
}

bool has_incident(const std::vector<Incident>& v, AgentErrc code)
{
    return std::any_of(v.begin(), v.end(), [&](const Incident& i) { return i.code == code; });
}

// Counts funding-outpoint spends and flags any with fewer than three valid
// channel signatures.
struct SignatureGate {
    std::size_t funding_spends = 0;
    std::size_t violations = 0;

    explicit SignatureGate(Network& net)
    {
        net.chain().add_submit_observer([this, &net](const chain::Transaction& tx) {
            const auto& ch = net.gateway().channel();
            if (!ch) return;
            for (const auto& in : tx.inputs) {
                if (in.prevout != ch->funding()) continue;
                ++funding_spends;
                const auto& p = ch->params();
                int valid = 0;
                for (const auto& key : {p.iot_pub, p.gateway_pub, p.bridge_pub})
                    for (const auto& s : in.witness.signatures)
                        if (s.key == key && crypto::verify(tx.txid(), s.sig, key)) {
                            ++valid;
                            break;
                        }
                if (valid < 3) ++violations;
            }
        });
    }
};

} // namespace

TEST_CASE("opening, payment and closing follow the golden message sequences")
{
    Network net;
    SignatureGate gate(net);
    const auto id = iot_open_channel(net, btc(10));
    CHECK(id == net.gateway().channel()->channel_id());
    CHECK(net.world().transcript_lines() == golden("open.txt"));
    CHECK(net.gateway().phase() == Phase::Operational);
    CHECK(net.bridge().phase() == Phase::Operational);

    net.world().clear_transcript();
    auto out = iot_send_payment(net, btc(1));
    CHECK(out.type == MsgType::PaymentSuccess);
    CHECK(net.world().transcript_lines() == golden("pay.txt"));

    net.world().clear_transcript();
    iot_close_channel(net);
    CHECK(net.world().transcript_lines() == golden("close.txt"));
    CHECK(net.gateway().phase() == Phase::Closed);
    CHECK(net.device().channel_id() == 0);
    CHECK(gate.funding_spends == 1);
    CHECK(gate.violations == 0);
    CHECK(net.gateway().incidents().empty());
    CHECK(net.bridge().incidents().empty());
    CHECK(net.device().incidents().empty());
}

TEST_CASE("a 1 BTC payment at 10% reaches the destination as 0.9 BTC")
{
    Network net;
    iot_open_channel(net, btc(10));
    REQUIRE(iot_send_payment(net, btc(1)).type == MsgType::PaymentSuccess);
    CHECK(net.destination().received() == btc(1) * 9 / 10);
    CHECK(net.destination().payments() == 1);

    const auto& g = net.gateway().channel()->latest();
    CHECK(g.iot_balance == btc(9));
    CHECK(g.bridge_balance == btc(1) * 9 / 10);
    CHECK(g.gateway_fee_accrued == btc(1) / 10);
    CHECK(g.pending_htlcs.empty());
    CHECK(g == net.bridge().channel()->latest());
}

TEST_CASE("two payments: one add and one fulfill update each, reveals for every superseded state")
{
    Network net;
    iot_open_channel(net, btc(10));
    REQUIRE(iot_send_payment(net, btc(1)).type == MsgType::PaymentSuccess);
    REQUIRE(iot_send_payment(net, btc(2)).type == MsgType::PaymentSuccess);

    const auto& gw = *net.gateway().channel();
    const auto& br = *net.bridge().channel();
    CHECK(gw.latest().index == 4);
    CHECK(br.latest().index == 4);
    for (std::uint64_t i = 0; i < 4; ++i) {
        CHECK(gw.is_revoked(i));
        CHECK(br.is_revoked(i));
        CHECK(gw.counterparty_reveals().contains(i));
        CHECK(br.counterparty_reveals().contains(i));
    }
    CHECK_FALSE(gw.is_revoked(4));
    CHECK_FALSE(br.is_revoked(4));

    // Replay against an independent channel-module run.
    const auto& p = gw.params();
    auto s = channel::initial_state(p, {});
    Amount dest = 0;
    for (Amount amt : {btc(1), btc(2)}) {
        crypto::Rng rng(amt);
        auto secret = crypto::new_preimage(rng);
        s = channel::apply_payment(p, s, amt, secret.hash, 1000, 0, {});
        s = channel::settle_htlc(s, secret.preimage, {});
        dest += amt - channel::payment_fee(p, amt);
    }
    CHECK(gw.latest().iot_balance == s.iot_balance);
    CHECK(gw.latest().bridge_balance == s.bridge_balance);
    CHECK(gw.latest().gateway_fee_accrued == s.gateway_fee_accrued);
    CHECK(net.destination().received() == dest);
    CHECK(gw.latest().total() == btc(10));
}

TEST_CASE("bridge offline during opening: BridgeRejected and the wallet is untouched")
{
    Network net;
    net.world().set_online("bridge", false);
    const auto before = net.chain().balance(net.device_keys().pub);
    try {
        iot_open_channel(net, btc(10));
        FAIL("open should not succeed");
    } catch (const AgentError& e) {
        CHECK(e.code() == AgentErrc::BridgeRejected);
    }
    CHECK(net.device().outcome()->type == MsgType::Rejected);
    CHECK(net.chain().balance(net.device_keys().pub) == before);
    CHECK(net.chain().utxo(net.wallet_coin()).has_value());
    CHECK_FALSE(net.chain().spender(net.wallet_coin()).has_value());
    CHECK(net.gateway().phase() == Phase::Idle);
}

TEST_CASE("bridge refusing the channel is reported as BridgeRejected")
{
    NetworkConfig cfg;
    cfg.bridge.reject_open = true;
    Network net(cfg);
    CHECK_THROWS_AS(iot_open_channel(net, btc(10)), AgentError);
    CHECK(net.device().outcome()->reason == "BridgeRejected");
}

TEST_CASE("a wallet too small for the capacity is GatewayRejected")
{
    NetworkConfig cfg;
    cfg.wallet = btc(5);
    Network net(cfg);
    try {
        iot_open_channel(net, btc(10));
        FAIL("open should not succeed");
    } catch (const AgentError& e) {
        CHECK(e.code() == AgentErrc::GatewayRejected);
    }
    CHECK(net.world().transcript().size() == 2);
}

TEST_CASE("withheld funding signature: the funding tx is never broadcast")
{
    NetworkConfig cfg;
    cfg.device.withhold_funding_signature = true;
    Network net(cfg);
    std::size_t submitted = 0;
    net.chain().add_submit_observer([&](const chain::Transaction&) { ++submitted; });
    CHECK_THROWS_AS(iot_open_channel(net, btc(10)), AgentError);
    CHECK(submitted == 0);
    CHECK(net.chain().utxo(net.wallet_coin()).has_value());
    CHECK(net.gateway().phase() == Phase::Idle);
}

TEST_CASE("declined signature: payment fails, state unchanged, unsigned commitment is unspendable")
{
    Network net;
    iot_open_channel(net, btc(10));
    net.device().config().decline_signing = true;
    auto out = iot_send_payment(net, btc(1));
    CHECK(out.type == MsgType::PaymentFailure);
    CHECK(out.reason == "DeviceDeclinedSignature");

    const auto& gw = *net.gateway().channel();
    const auto& br = *net.bridge().channel();
    CHECK(gw.latest().index == 0);
    CHECK(br.latest().index == 0);
    CHECK_FALSE(gw.is_revoked(0));
    CHECK_FALSE(br.is_revoked(0));
    CHECK(gw.counterparty_reveals().empty());
    CHECK(net.destination().payments() == 0);
    CHECK(net.gateway().phase() == Phase::Operational);

    // What the gateway and bridge could build alone.
    const auto& p = gw.params();
    auto staged = channel::apply_payment(p, gw.latest(), btc(1), crypto::Hash256{}, 100, net.chain().height(),
                                         gw.next_points());
    auto pair = channel::build_commitments(p, gw.funding(), staged);
    pair.bridge_held.tx.add_signature(0, net.gateway().signing());
    pair.bridge_held.tx.add_signature(0, net.bridge().signing());
    auto v = net.chain().validate_spend(pair.bridge_held.tx, net.chain().height() + 1);
    CHECK(v.code == chain::TxErrc::ThresholdNotMet);

    // Consent restored: the next payment goes through.
    net.device().config().decline_signing = false;
    CHECK(iot_send_payment(net, btc(1)).type == MsgType::PaymentSuccess);
}

TEST_CASE("stalled bridge: payment fails with BridgeUnresponsive and nothing is revealed")
{
    NetworkConfig cfg;
    cfg.bridge.stall_updates = true;
    Network net(cfg);
    iot_open_channel(net, btc(10));
    auto out = iot_send_payment(net, btc(1));
    CHECK(out.type == MsgType::PaymentFailure);
    CHECK(out.reason == "BridgeUnresponsive");
    CHECK(net.gateway().channel()->latest().index == 0);
    CHECK_FALSE(net.gateway().channel()->is_revoked(0));
    CHECK(net.gateway().phase() == Phase::Operational);
}

TEST_CASE("payment errors surface as PaymentFailure")
{
    Network net;
    iot_open_channel(net, btc(10));
    CHECK(iot_send_payment(net, btc(11)).reason == "InsufficientChannelBalance");
    CHECK(iot_send_payment(net, btc(1), std::string("nobody")).reason == "UnknownDestination");
    CHECK(iot_send_payment(net, 0).reason == "ZeroAmount");
    CHECK(net.gateway().channel()->latest().index == 0);
    // Whole balance is payable.
    CHECK(iot_send_payment(net, btc(10)).type == MsgType::PaymentSuccess);
    CHECK(net.gateway().channel()->latest().iot_balance == 0);
}

TEST_CASE("replayed SendPayment envelope is an AuthFailure and adds no HTLC")
{
    Network net;
    iot_open_channel(net, btc(10));
    REQUIRE(iot_send_payment(net, btc(1)).type == MsgType::PaymentSuccess);
    const auto index = net.gateway().channel()->latest().index;

    const Bytes captured = net.device().sent_envelopes().back();
    net.world().inject("iot", "gateway", MsgType::SendPayment, captured);
    net.world().settle();
    CHECK(has_incident(net.gateway().incidents(), AgentErrc::AuthFailure));
    CHECK(net.gateway().channel()->latest().index == index);
    CHECK(net.destination().payments() == 1);
}

TEST_CASE("SendPayment while Opening is a ProtocolViolation")
{
    Network net;
    net.device().request_open(btc(10));
    net.world().run_until_idle(1);
    REQUIRE(net.gateway().phase() == Phase::Opening);
    net.device().request_payment(btc(1));
    net.world().settle();
    CHECK(has_incident(net.gateway().incidents(), AgentErrc::ProtocolViolation));
    CHECK(net.gateway().phase() == Phase::Operational);
    CHECK(net.gateway().channel()->latest().index == 0);
    CHECK(net.destination().payments() == 0);
}

TEST_CASE("undecodable and foreign messages are ProtocolViolations")
{
    Network net;
    iot_open_channel(net, btc(10));
    const auto before = net.gateway().channel()->latest();

    net.world().inject("bridge", "gateway", MsgType::PeerError, Bytes{0x7f, 0, 0});
    net.world().run_until_idle();
    CHECK(net.gateway().incidents().size() == 1);

    // Well-formed peer message from a node that is not our bridge.
    net.world().inject("mallory", "gateway", MsgType::Shutdown, encode(Message{0, msg::Shutdown{}}));
    net.world().run_until_idle();
    CHECK(net.gateway().incidents().size() == 2);

    // A device-facing type on the peer link.
    net.world().inject("bridge", "gateway", MsgType::PaymentSuccess,
                       encode(Message{net.device().channel_id(), msg::PaymentSuccess{}}));
    net.world().run_until_idle();
    CHECK(net.gateway().incidents().size() == 3);

    // Unknown type inside a valid envelope from the device.
    crypto::Rng rng(99);
    auto session = crypto::SessionKeys::generate(rng);
    Bytes payload{0x55, 0, 0, 0, 0, 0, 0, 0, 0};
    auto env = crypto::seal_envelope(payload, session, net.gateway_encryption().pub, net.world().now_ms(), rng,
                                     crypto::issue_certificate(net.device_keys().pub, net.issuer()));
    net.world().inject("iot", "gateway", MsgType::SendPayment, env.serialize());
    net.world().run_until_idle();
    CHECK(net.gateway().incidents().back().code == AgentErrc::ProtocolViolation);
    CHECK(net.gateway().channel()->latest() == before);
    for (const auto& i : net.gateway().incidents()) CHECK(i.code == AgentErrc::ProtocolViolation);
}

TEST_CASE("select_bridge picks the busiest node, ties to the smallest id")
{
    const crypto::PubKey k{};
    std::vector<DirectoryEntry> d{{"A", k, 5}, {"B", k, 9}};
    CHECK(select_bridge(d).node_id == "B");
    d[1].active_channels = 5;
    CHECK(select_bridge(d).node_id == "A");
    std::vector<DirectoryEntry> rev{{"B", k, 5}, {"A", k, 5}};
    CHECK(select_bridge(rev).node_id == "A");
    CHECK(select_bridge(std::span(d).first(1)).node_id == "A");
    try {
        select_bridge({});
        FAIL("empty directory");
    } catch (const AgentError& e) {
        CHECK(e.code() == AgentErrc::EmptyDirectory);
    }
}

TEST_CASE("gateway connects to the busiest directory entry")
{
    NetworkConfig cfg;
    cfg.extra_directory = {{"quiet", crypto::PubKey{}, 3}};
    Network net(cfg);
    iot_open_channel(net, btc(10));
    CHECK(net.gateway().bridge_name() == "bridge");

    NetworkConfig busier;
    busier.extra_directory = {{"hub", crypto::PubKey{}, 50}};
    Network other(busier);
    CHECK_THROWS_AS(iot_open_channel(other, btc(10)), AgentError);
    CHECK(other.gateway().bridge_name() == "hub");
}

TEST_CASE("device persists keys, certificate and channel id only")
{
    Network net;
    iot_open_channel(net, btc(10));
    iot_send_payment(net, btc(1));
    const auto state = net.device().persistent_state();
    std::set<std::string> keys;
    for (const auto& [k, v] : state.items()) keys.insert(k);
    CHECK(keys == std::set<std::string>{"signing_key", "signing_pub", "encryption_key", "certificate", "channel_id"});
    CHECK(state["channel_id"] == net.device().channel_id());
    const auto dump = state.dump();
    const auto& ch = *net.gateway().channel();
    for (std::uint64_t i = 0; i <= ch.latest().index; ++i) {
        const auto* pair = ch.commitments(i);
        REQUIRE(pair != nullptr);
        CHECK(dump.find(to_hex(pair->gateway_held.tx.txid())) == std::string::npos);
        CHECK(dump.find(to_hex(pair->gateway_held.tx.serialize())) == std::string::npos);
    }
    CHECK(dump.find(to_hex(ch.funding().txid)) == std::string::npos);
}

TEST_CASE("SendPayment ciphertext fits in three AES blocks")
{
    Network net;
    iot_open_channel(net, btc(10));
    iot_send_payment(net, btc(1));
    const auto env = crypto::Envelope::parse(net.device().sent_envelopes()[2]);
    CHECK(decode(crypto::open_envelope(env, net.gateway_encryption().priv, env.timestamp_ms).payload).type() ==
          MsgType::SendPayment);
    CHECK(env.ciphertext.size() <= 48);
}

TEST_CASE("all three close initiators produce the same on-chain balances")
{
    std::vector<std::array<Amount, 3>> results;
    for (auto who : {CloseInitiator::Device, CloseInitiator::Gateway, CloseInitiator::Bridge}) {
        CAPTURE(to_string(who));
        Network net;
        SignatureGate gate(net);
        iot_open_channel(net, btc(10));
        REQUIRE(iot_send_payment(net, btc(1)).type == MsgType::PaymentSuccess);
        iot_close_channel(net, who);
        CHECK(gate.funding_spends == 1);
        CHECK(gate.violations == 0);
        CHECK(net.device().outcome()->type == MsgType::ChannelClosed);
        const auto fee = net.chain().config().onchain_fee;
        const auto iot = net.chain().balance(net.device_keys().pub);
        const auto gw = net.chain().balance(net.gateway().signing().pub);
        const auto br = net.chain().balance(net.bridge().signing().pub);
        CHECK(iot == (btc(1) - fee) + (btc(9) - fee));
        CHECK(gw == btc(1) / 10);
        CHECK(br == btc(1) * 9 / 10);
        results.push_back({iot, gw, br});
    }
    CHECK(results[0] == results[1]);
    CHECK(results[1] == results[2]);
}

TEST_CASE("close at state 0 refunds the device less two on-chain fees")
{
    Network net;
    iot_open_channel(net, btc(10));
    iot_close_channel(net);
    CHECK(net.chain().balance(net.device_keys().pub) == btc(11) - 2 * net.chain().config().onchain_fee);
    CHECK(net.chain().balance(net.bridge().signing().pub) == 0);
}

TEST_CASE("close with a pending HTLC is refused")
{
    Network net;
    iot_open_channel(net, btc(10));
    // Known to the gateway, unreachable from the bridge: the HTLC never settles.
    Destination stranded("stranded", net.world().fork_rng());
    net.gateway().add_destination(stranded);
    auto out = iot_send_payment(net, btc(1), std::string("stranded"));
    CHECK(out.type == MsgType::PaymentFailure);
    REQUIRE(net.gateway().channel()->latest().pending_htlcs.size() == 1);

    try {
        iot_close_channel(net);
        FAIL("close should be refused");
    } catch (const AgentError& e) {
        CHECK(e.code() == AgentErrc::PendingHtlcs);
    }
    CHECK_THROWS_AS(net.gateway().initiate_close(), AgentError);
    CHECK_THROWS_AS(net.bridge().initiate_close(), AgentError);
    CHECK(net.gateway().phase() == Phase::Operational);
}

TEST_CASE("same seed, same transcript with timings")
{
    auto run = [] {
        Network net;
        iot_open_channel(net, btc(10));
        iot_send_payment(net, btc(1));
        iot_close_channel(net);
        return std::pair(net.world().transcript_lines(true), net.chain().dump().dump());
    };
    CHECK(run() == run());
}

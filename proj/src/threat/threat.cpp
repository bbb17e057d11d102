// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/threat/threat.hpp>

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace iotln::threat {

using agents::Network;
using agents::NetworkConfig;
using chain::Transaction;

std::string_view to_string(Adversary a) { return a == Adversary::Gateway ? "gateway" : "bridge"; }

std::string Verdict::text() const
{
    std::ostringstream out;
    out << scenario << ": " << outcome << (passed ? " PASS" : " FAIL") << "\n";
    for (const auto& [k, v] : facts.items()) {
        out << "  " << k << " = ";
        if (v.is_string())
            out << v.get<std::string>();
        else
            out << v.dump();
        out << "\n";
    }
    return out.str();
}

ordered_json Verdict::json() const
{
    ordered_json j;
    j["scenario"] = scenario;
    j["outcome"] = outcome;
    j["passed"] = passed;
    j["facts"] = facts;
    return j;
}

// ------------------------------------------------------------------ sweeps

namespace {

Transaction single_input(const chain::OutPoint& op, Amount value, const crypto::PubKey& to)
{
    Transaction tx;
    tx.inputs.push_back({op, {}});
    tx.outputs.push_back({value, chain::single_key(to)});
    return tx;
}

void sign_input(Transaction& tx, std::size_t i, const crypto::KeyPair& key, const std::vector<crypto::Preimage>& pre)
{
    tx.add_signature(i, key);
    tx.inputs[i].witness.preimages = pre;
}

} // namespace

std::optional<Transaction> build_sweep(const chain::Chain& chain, const Transaction& source, const crypto::KeyPair& key,
                                       const crypto::PubKey& beneficiary, const std::vector<crypto::Preimage>& preimages)
{
    const auto id = source.txid();
    const auto at = chain.height() + 1;
    struct Pick {
        chain::OutPoint op;
        bool with_preimages;
    };
    std::vector<Pick> picks;
    Amount total = 0;
    for (std::uint32_t i = 0; i < source.outputs.size(); ++i) {
        const chain::OutPoint op{id, i};
        if (!chain.utxo(op)) continue;
        const auto value = source.outputs[i].value;
        for (bool with : {false, true}) {
            if (with && preimages.empty()) break;
            auto trial = single_input(op, value, beneficiary);
            sign_input(trial, 0, key, with ? preimages : std::vector<crypto::Preimage>{});
            if (chain.validate_spend(trial, at).ok()) {
                picks.push_back({op, with});
                total += value;
                break;
            }
        }
    }
    const Amount fee = chain.config().onchain_fee;
    if (picks.empty() || total <= fee) return std::nullopt;
    Transaction tx;
    for (const auto& p : picks) tx.inputs.push_back({p.op, {}});
    tx.outputs.push_back({total - fee, chain::single_key(beneficiary)});
    for (std::size_t i = 0; i < picks.size(); ++i)
        sign_input(tx, i, key, picks[i].with_preimages ? preimages : std::vector<crypto::Preimage>{});
    return tx;
}

Amount try_sweep(chain::Chain& chain, const Transaction& source, const crypto::KeyPair& key,
                 const crypto::PubKey& beneficiary, const std::vector<crypto::Preimage>& preimages)
{
    auto tx = build_sweep(chain, source, key, beneficiary, preimages);
    if (!tx) return 0;
    try {
        chain.submit_tx(*tx);
    } catch (const chain::ChainError&) {
        return 0; // lost the race in the mempool
    }
    return tx->total_out() + chain.config().onchain_fee;
}

// -------------------------------------------------------------- watchtower

void Watchtower::watch(const WatchedChannel& channel)
{
    for (auto& c : channels_) {
        if (c.funding == channel.funding) {
            c = channel;
            return;
        }
    }
    channels_.push_back(channel);
}

TickReport Watchtower::tick(chain::Chain& chain)
{
    TickReport report;
    for (const auto& block : chain.blocks()) {
        if (block.height <= scanned_) continue;
        for (const auto& txid : block.txids) {
            const auto* tx = chain.find_tx(txid);
            for (std::size_t c = 0; c < channels_.size(); ++c) {
                const auto& ch = channels_[c];
                const bool spends_funding = std::any_of(tx->inputs.begin(), tx->inputs.end(),
                                                        [&](const chain::TxIn& in) { return in.prevout == ch.funding; });
                if (!spends_funding) continue;
                for (const auto& [index, reveal] : ch.reveals) {
                    const auto point = reveal.keypair().pub;
                    const bool revoked = std::any_of(tx->outputs.begin(), tx->outputs.end(), [&](const chain::Output& o) {
                        return chain::has_revocation_branch(o.condition, point);
                    });
                    if (revoked) breaches_.push_back({txid, c, reveal});
                }
            }
        }
    }
    scanned_ = chain.height();

    std::vector<Breach> still_pending;
    for (const auto& b : breaches_) {
        const auto* src = chain.find_tx(b.txid);
        const auto point = b.reveal.keypair().pub;
        const auto& beneficiary = channels_[b.channel].beneficiary;
        bool lost_some = false;
        for (std::uint32_t i = 0; i < src->outputs.size(); ++i) {
            if (!chain::has_revocation_branch(src->outputs[i].condition, point)) continue;
            const auto spender = chain.spender({b.txid, i});
            if (!spender) continue;
            // Another tower acting for the same beneficiary does not count.
            const auto& outs = chain.find_tx(*spender)->outputs;
            const bool ours = std::all_of(outs.begin(), outs.end(), [&](const chain::Output& o) {
                return chain::sole_key(o.condition) == beneficiary;
            });
            lost_some = lost_some || !ours;
        }
        if (lost_some) report.too_late.push_back(b.txid);

        auto tx = build_sweep(chain, *src, b.reveal.keypair(), beneficiary);
        if (!tx) continue; // nothing left to take
        try {
            chain.submit_tx(*tx);
            report.submitted.push_back(*tx);
        } catch (const chain::ChainError&) {
            still_pending.push_back(b);
        }
    }
    breaches_ = std::move(still_pending);
    return report;
}

TickReport watchtower_tick(chain::Chain& chain, const std::vector<WatchedChannel>& watched)
{
    Watchtower t;
    for (const auto& w : watched) t.watch(w);
    return t.tick(chain);
}

// --------------------------------------------------------------- scenarios

namespace {

struct Balances {
    Amount device = 0;
    Amount gateway = 0;
    Amount bridge = 0;
};

Balances balances_of(Network& net)
{
    auto& c = net.chain();
    return {c.balance(net.device_keys().pub), c.balance(net.gateway().signing().pub),
            c.balance(net.bridge().signing().pub)};
}

NetworkConfig network_config(const RevokedBroadcastConfig& cfg)
{
    NetworkConfig nc;
    nc.seed = cfg.seed;
    nc.wallet = cfg.capacity + btc(1);
    nc.gateway.to_self_delay = cfg.to_self_delay;
    return nc;
}

void make_payments(Network& net, const RevokedBroadcastConfig& cfg)
{
    agents::iot_open_channel(net, cfg.capacity);
    for (std::uint32_t i = 0; i < cfg.payments; ++i) {
        auto out = agents::iot_send_payment(net, cfg.payment);
        if (out.type != agents::MsgType::PaymentSuccess)
            throw std::runtime_error("setup payment failed: " + out.reason);
    }
}

Balances honest_close_balances(const RevokedBroadcastConfig& cfg)
{
    Network net(network_config(cfg));
    make_payments(net, cfg);
    agents::iot_close_channel(net);
    return balances_of(net);
}

// Counts funding-outpoint spends lacking a valid device signature.
struct DeviceGate {
    std::size_t spends = 0;
    std::size_t unsigned_by_device = 0;

    void attach(Network& net)
    {
        net.chain().add_submit_observer([this, &net](const Transaction& tx) {
            const auto& ch = net.gateway().channel();
            if (!ch) return;
            for (const auto& in : tx.inputs) {
                if (in.prevout != ch->funding()) continue;
                ++spends;
                const auto& key = ch->params().iot_pub;
                const bool ok = std::any_of(in.witness.signatures.begin(), in.witness.signatures.end(),
                                            [&](const chain::KeySignature& s) {
                                                return s.key == key && crypto::verify(tx.txid(), s.sig, key);
                                            });
                if (!ok) ++unsigned_by_device;
            }
        });
    }
};

Amount& pick(Balances& b, Adversary a) { return a == Adversary::Gateway ? b.gateway : b.bridge; }
Amount& victim_of(Balances& b, Adversary a) { return a == Adversary::Gateway ? b.bridge : b.gateway; }

} // namespace

Verdict run_revoked_broadcast(const RevokedBroadcastConfig& cfg)
{
    Verdict v;
    v.scenario = "revoked-broadcast/" + std::string(to_string(cfg.adversary));
    Network net(network_config(cfg));
    DeviceGate gate;
    gate.attach(net);
    make_payments(net, cfg);

    auto& gw = *net.gateway().mutable_channel();
    auto& br = *net.bridge().mutable_channel();
    const auto latest = gw.latest().index;
    if (cfg.state_index > latest) throw std::invalid_argument("state_index beyond latest state");
    const bool gateway_cheats = cfg.adversary == Adversary::Gateway;
    const auto* pair = (gateway_cheats ? gw : br).commitments(cfg.state_index);
    if (pair == nullptr) throw std::invalid_argument("no stored commitment for state");
    const auto& commitment = gateway_cheats ? pair->gateway_held : pair->bridge_held;
    const Transaction cheat = commitment.tx;
    const bool revoked = cfg.state_index < latest;

    const auto& cheater_key = gateway_cheats ? net.gateway().signing() : net.bridge().signing();
    const auto& victim_key = gateway_cheats ? net.bridge().signing() : net.gateway().signing();
    const auto& victim_channel = gateway_cheats ? br : gw;
    const std::vector<crypto::Preimage> cheater_preimages =
        gateway_cheats ? std::vector<crypto::Preimage>{} : net.bridge().known_preimages();

    const WatchedChannel watched{gw.funding(), victim_channel.counterparty_reveals(), victim_key.pub};
    Watchtower own;
    Watchtower tower;
    own.watch(watched);
    tower.watch(watched);

    v.facts["adversary"] = std::string(to_string(cfg.adversary));
    v.facts["state_index"] = cfg.state_index;
    v.facts["latest_state"] = latest;
    v.facts["to_self_delay"] = cfg.to_self_delay;
    v.facts["victim_offline_blocks"] = cfg.victim_offline_blocks;
    v.facts["watchtower"] = cfg.watchtower;

    try {
        net.chain().submit_tx(cheat);
    } catch (const chain::ChainError& e) {
        v.outcome = "BroadcastRejected";
        v.facts["reason"] = e.what();
        // Only an under-signed state can be refused; that is the device's protection.
        v.passed = gate.unsigned_by_device > 0 || e.code() == chain::TxErrc::ThresholdNotMet;
        return v;
    }

    // Offline victims drop everything, including their own node's messages.
    const std::string victim_name = gateway_cheats ? "bridge" : "gateway";
    if (cfg.victim_offline_blocks > 0) net.world().set_online(victim_name, false);

    const auto fee_index = commitment.find(channel::OutputRole::GatewayFee);
    const auto cheat_id = cheat.txid();
    std::optional<std::uint32_t> broadcast_height;
    Amount confiscated = 0;
    bool too_late = false;
    const std::uint32_t rounds = cfg.to_self_delay + 4 + cfg.victim_offline_blocks;
    for (std::uint32_t b = 1; b <= rounds; ++b) {
        net.world().mine(1);
        if (!broadcast_height) broadcast_height = net.chain().confirmed_height(cheat_id);
        if (b == cfg.victim_offline_blocks) net.world().set_online(victim_name, true);

        const bool victim_up = b > cfg.victim_offline_blocks;
        for (auto* t : {victim_up ? &own : nullptr, cfg.watchtower ? &tower : nullptr}) {
            if (t == nullptr) continue;
            auto r = t->tick(net.chain());
            for (const auto& tx : r.submitted) confiscated += tx.total_out() + net.chain().config().onchain_fee;
            too_late = too_late || !r.too_late.empty();
        }
        try_sweep(net.chain(), cheat, cheater_key, cheater_key.pub, cheater_preimages);
        try_sweep(net.chain(), cheat, net.device_keys(), net.device_keys().pub);
        if (victim_up) try_sweep(net.chain(), cheat, victim_key, victim_key.pub);
    }
    net.world().mine(1);

    Balances final = balances_of(net);
    Balances honest = honest_close_balances(cfg);
    const auto matures = broadcast_height.value_or(0) + cfg.to_self_delay;
    v.facts["broadcast_height"] = broadcast_height.value_or(0);
    v.facts["timelock_matures_at"] = matures;

    bool fee_confiscated_in_time = false;
    if (fee_index) {
        const chain::OutPoint fee_op{cheat_id, *fee_index};
        v.facts["fee_output"] = cheat.outputs[*fee_index].value;
        if (auto spender = net.chain().spender(fee_op)) {
            const auto* tx = net.chain().find_tx(*spender);
            const auto h = net.chain().confirmed_height(*spender).value_or(0);
            const bool to_victim = chain::sole_key(tx->outputs.at(0).condition) == victim_key.pub;
            fee_confiscated_in_time = to_victim && h < matures;
            v.facts["fee_output_spent_at"] = h;
            v.facts["fee_output_to"] = to_victim ? "victim" : "other";
        }
    }
    v.facts["confiscated_total"] = confiscated;
    v.facts["fee_confiscated_before_maturity"] = fee_confiscated_in_time;
    v.facts["cheater_final"] = pick(final, cfg.adversary);
    v.facts["cheater_honest"] = pick(honest, cfg.adversary);
    v.facts["victim_final"] = victim_of(final, cfg.adversary);
    v.facts["victim_honest"] = victim_of(honest, cfg.adversary);
    v.facts["device_final"] = final.device;
    v.facts["device_honest"] = honest.device;
    v.facts["device_loss"] = std::max<Amount>(0, honest.device - final.device);
    v.facts["funding_spends_without_device_sig"] = gate.unsigned_by_device;

    const bool punish_expected = revoked && (cfg.watchtower || cfg.victim_offline_blocks < cfg.to_self_delay);
    const bool punished = confiscated > 0;
    if (!revoked) {
        v.outcome = "NotRevoked";
        v.passed = !punished;
    } else if (punished && !too_late) {
        v.outcome = "Punished";
        const bool incentive = pick(final, cfg.adversary) < pick(honest, cfg.adversary);
        const bool fee_rule = !gateway_cheats || !fee_index || fee_confiscated_in_time;
        v.facts["incentive_holds"] = incentive;
        v.passed = punish_expected && incentive && fee_rule;
    } else {
        // Whatever the victim still took after the cheater swept is reported
        // in confiscated_total; the cheater kept the rest.
        v.outcome = too_late ? "TooLate" : "CheaterUnpunished";
        v.passed = !punish_expected;
    }
    v.passed = v.passed && gate.unsigned_by_device == 0;
    return v;
}

Verdict run_theft_attempt(std::uint64_t seed)
{
    Verdict v;
    v.scenario = "theft-attempt";
    NetworkConfig nc;
    nc.seed = seed;
    Network net(nc);
    agents::iot_open_channel(net, btc(10));
    agents::iot_send_payment(net, btc(1));

    auto& gw = *net.gateway().mutable_channel();
    const auto& p = gw.params();
    const auto device_before = net.chain().balance(net.device_keys().pub);
    const auto& gk = net.gateway().signing();
    const auto& bk = net.bridge().signing();

    // Every device satoshi moved to the gateway fee output.
    auto grab = gw.latest();
    grab.gateway_fee_accrued += grab.iot_balance;
    grab.iot_balance = 0;
    grab.index += 1;
    grab.revocation = gw.next_points();
    auto stolen = channel::build_commitments(p, gw.funding(), grab).gateway_held.tx;

    // An HTLC carved out of the device balance, payable to the gateway alone.
    auto redirected = channel::build_commitments(
                          p, gw.funding(),
                          channel::apply_payment(p, gw.latest(), btc(5), crypto::Hash256{}, net.chain().height() + 40,
                                                 net.chain().height(), gw.next_points()))
                          .gateway_held;
    if (auto i = redirected.find(channel::OutputRole::Htlc)) redirected.tx.outputs[*i].condition = chain::single_key(gk.pub);

    auto close_to_gateway = channel::build_mutual_close(p, gw.funding(), gw.latest(), net.chain().config().onchain_fee);
    Amount sum = close_to_gateway.total_out();
    close_to_gateway.outputs = {{sum, chain::single_key(gk.pub)}};

    struct Attempt {
        std::string name;
        Transaction tx;
    };
    std::vector<Attempt> attempts;
    attempts.push_back({"one-of-three", stolen});
    attempts.back().tx.add_signature(0, gk);
    attempts.push_back({"forged-two-of-three", stolen});
    attempts.back().tx.add_signature(0, gk);
    attempts.back().tx.add_signature(0, bk);
    attempts.push_back({"bogus-device-signature", stolen});
    attempts.back().tx.add_signature(0, gk);
    attempts.back().tx.add_signature(0, bk);
    attempts.back().tx.inputs[0].witness.signatures.push_back(
        {p.iot_pub, crypto::sign(attempts.back().tx.txid(), gk.priv)});
    attempts.push_back({"htlc-redirect", redirected.tx});
    attempts.back().tx.add_signature(0, gk);
    attempts.back().tx.add_signature(0, bk);
    attempts.push_back({"close-to-gateway", close_to_gateway});
    attempts.back().tx.add_signature(0, gk);
    attempts.back().tx.add_signature(0, bk);

    bool all_rejected = true;
    ordered_json rows = ordered_json::array();
    for (const auto& a : attempts) {
        const auto verdict = net.chain().validate_spend(a.tx, net.chain().height() + 1);
        bool submitted = true;
        try {
            net.chain().submit_tx(a.tx);
        } catch (const chain::ChainError&) {
            submitted = false;
        }
        const bool rejected = !submitted && verdict.code == chain::TxErrc::ThresholdNotMet;
        all_rejected = all_rejected && rejected;
        rows.push_back({{"attempt", a.name}, {"result", std::string(chain::to_string(verdict.code))}});
    }
    net.world().mine(1);
    const bool funding_untouched = !net.chain().spender(gw.funding()).has_value();
    const bool device_unchanged = net.chain().balance(net.device_keys().pub) == device_before;

    // Control: the latest, fully signed commitment is broadcastable.
    const auto& legit = gw.commitments(gw.latest().index)->gateway_held.tx;
    bool control_ok = true;
    try {
        net.chain().submit_tx(legit);
    } catch (const chain::ChainError&) {
        control_ok = false;
    }
    rows.push_back({{"attempt", "control-latest-commitment"}, {"result", control_ok ? "Ok" : "Rejected"}});

    v.facts["attempts"] = rows;
    v.facts["funding_untouched"] = funding_untouched;
    v.facts["device_balance_unchanged"] = device_unchanged;
    v.passed = all_rejected && funding_untouched && device_unchanged && control_ok;
    v.outcome = v.passed ? "AllRejected" : "TheftPossible";
    return v;
}

Verdict run_signature_fuzz(std::uint64_t seed, std::size_t attempts)
{
    Verdict v;
    v.scenario = "signature-fuzz";
    NetworkConfig nc;
    nc.seed = seed;
    Network net(nc);
    agents::iot_open_channel(net, btc(10));
    agents::iot_send_payment(net, btc(1));
    auto& gw = *net.gateway().mutable_channel();
    const auto& p = gw.params();
    crypto::Rng rng(seed ^ 0x5157);
    const std::array<const crypto::KeyPair*, 3> parties{&net.device_keys(), &net.gateway().signing(),
                                                        &net.bridge().signing()};
    const auto stranger = crypto::generate_keypair(rng);

    std::size_t rejected = 0;
    std::size_t accepted = 0;
    for (std::size_t n = 0; n < attempts; ++n) {
        Transaction tx;
        switch (rng.uniform(0, 2)) {
        case 0: tx = gw.commitments(rng.uniform(0, gw.latest().index))->gateway_held.tx; break;
        case 1: tx = channel::build_mutual_close(p, gw.funding(), gw.latest(), net.chain().config().onchain_fee); break;
        default: {
            tx.inputs.push_back({gw.funding(), {}});
            const auto k = rng.uniform(1, 3);
            for (std::uint64_t i = 0; i < k; ++i)
                tx.outputs.push_back({p.capacity / static_cast<Amount>(k), chain::single_key(parties[rng.uniform(0, 2)]->pub)});
        }
        }
        auto& sigs = tx.inputs[0].witness.signatures;
        sigs.clear();
        // Up to two genuine channel signatures.
        const auto skip = rng.uniform(0, 2);
        const auto genuine = rng.uniform(0, 2);
        std::uint64_t added = 0;
        for (std::uint64_t i = 0; i < 3 && added < genuine; ++i) {
            if (i == skip) continue;
            tx.add_signature(0, *parties[i]);
            ++added;
        }
        // Noise: a duplicate, a stranger, or a mislabeled signature for the missing party.
        switch (rng.uniform(0, 3)) {
        case 0:
            if (!sigs.empty()) sigs.push_back(sigs.front());
            break;
        case 1: tx.add_signature(0, stranger); break;
        case 2: sigs.push_back({parties[skip]->pub, crypto::sign(tx.txid(), stranger.priv)}); break;
        default: break;
        }
        const auto verdict = net.chain().validate_spend(tx, net.chain().height() + 1);
        bool ok = verdict.ok();
        if (!ok) {
            try {
                net.chain().submit_tx(tx);
                ok = true;
            } catch (const chain::ChainError&) {
            }
        }
        (ok ? accepted : rejected) += 1;
    }
    v.facts["attempts"] = attempts;
    v.facts["rejected"] = rejected;
    v.facts["accepted"] = accepted;
    v.passed = accepted == 0 && rejected == attempts;
    v.outcome = v.passed ? "AllRejected" : "UnderSignedSpendAccepted";
    return v;
}

// ------------------------------------------------------------------- MITM

std::string_view to_string(MitmKind k)
{
    switch (k) {
    case MitmKind::Tamper: return "tamper";
    case MitmKind::Replay: return "replay";
    case MitmKind::Eavesdrop: return "eavesdrop";
    case MitmKind::Impersonate: return "impersonate";
    }
    return "unknown";
}

std::optional<MitmKind> mitm_kind_from_string(std::string_view s)
{
    for (auto k : {MitmKind::Tamper, MitmKind::Replay, MitmKind::Eavesdrop, MitmKind::Impersonate})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

namespace {

struct GatewaySnapshot {
    agents::Phase phase{};
    std::uint64_t index = 0;
    std::size_t history = 0;
    std::size_t to_bridge = 0;
    std::size_t paid = 0;

    bool operator==(const GatewaySnapshot&) const = default;
};

GatewaySnapshot snapshot(Network& net)
{
    GatewaySnapshot s;
    s.phase = net.gateway().phase();
    if (const auto& ch = net.gateway().channel()) {
        s.index = ch->latest().index;
        s.history = ch->history().size();
    }
    for (const auto& e : net.world().transcript())
        if (e.from == "gateway" && e.to == "bridge") ++s.to_bridge;
    s.paid = net.destination().payments();
    return s;
}

std::size_t auth_failures(Network& net, crypto::EnvelopeErrc code)
{
    const auto name = std::string(crypto::to_string(code));
    const auto& incidents = net.gateway().incidents();
    return static_cast<std::size_t>(std::count_if(incidents.begin(), incidents.end(), [&](const agents::Incident& i) {
        return i.code == agents::AgentErrc::AuthFailure && i.detail == name;
    }));
}

bool contains(const Bytes& hay, ByteView needle)
{
    return !needle.empty() && std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

Verdict mitm_tamper(std::uint64_t seed)
{
    Verdict v;
    NetworkConfig nc;
    nc.seed = seed;
    Network net(nc);
    agents::iot_open_channel(net, btc(10));
    const auto before = snapshot(net);

    // CBC malleability: flipping IV byte 12 flips plaintext byte 12, inside
    // the amount field of SendPayment. Only the MAC stands in the way.
    bool flipped = false;
    net.world().set_interceptor([&](const agents::TranscriptEntry& e, Bytes& wire) {
        if (flipped || e.type != agents::MsgType::SendPayment) return true;
        auto env = crypto::Envelope::parse(wire);
        env.iv[12] ^= 0x01;
        wire = env.serialize();
        flipped = true;
        return true;
    });
    const auto out = agents::iot_send_payment(net, btc(1));
    net.world().set_interceptor(nullptr);
    const auto after = snapshot(net);

    v.facts["tampered"] = flipped;
    v.facts["gateway_mac_mismatches"] = auth_failures(net, crypto::EnvelopeErrc::MacMismatch);
    v.facts["state_changed"] = !(before == after);
    v.facts["device_outcome"] = std::string(out.reason.empty() ? agents::to_string(out.type) : out.reason);

    const auto retry = agents::iot_send_payment(net, btc(1));
    v.facts["untampered_retry"] = std::string(agents::to_string(retry.type));
    v.passed = flipped && auth_failures(net, crypto::EnvelopeErrc::MacMismatch) == 1 && before == after &&
               retry.type == agents::MsgType::PaymentSuccess && net.destination().payments() == 1;
    v.outcome = v.passed ? "Rejected" : "TamperAccepted";
    return v;
}

Verdict mitm_replay(std::uint64_t seed)
{
    Verdict v;
    NetworkConfig nc;
    nc.seed = seed;
    Network net(nc);
    agents::iot_open_channel(net, btc(10));
    Bytes captured;
    net.world().add_tap([&](const agents::TranscriptEntry& e, const Bytes& wire) {
        if (e.type == agents::MsgType::SendPayment) captured = wire;
    });
    agents::iot_send_payment(net, btc(1));
    const auto before = snapshot(net);

    net.world().inject("iot", "gateway", agents::MsgType::SendPayment, captured);
    net.world().settle();
    net.world().mine(1); // ten minutes later: outside the freshness window
    net.world().inject("iot", "gateway", agents::MsgType::SendPayment, captured);
    net.world().settle();
    const auto after = snapshot(net);

    v.facts["replays"] = 2;
    v.facts["rejected_replayed"] = auth_failures(net, crypto::EnvelopeErrc::Replayed);
    v.facts["rejected_stale"] = auth_failures(net, crypto::EnvelopeErrc::StaleTimestamp);
    v.facts["payments_executed"] = net.destination().payments();
    v.passed = before == after && net.destination().payments() == 1 &&
               auth_failures(net, crypto::EnvelopeErrc::Replayed) == 1 &&
               auth_failures(net, crypto::EnvelopeErrc::StaleTimestamp) == 1;
    v.outcome = v.passed ? "Rejected" : "ReplayAccepted";
    return v;
}

Verdict mitm_eavesdrop(std::uint64_t seed)
{
    Verdict v;
    NetworkConfig nc;
    nc.seed = seed;
    Network net(nc);
    std::vector<Bytes> seen;
    net.world().add_tap([&](const agents::TranscriptEntry& e, const Bytes& wire) {
        if (e.from == "iot" || e.to == "iot") seen.push_back(wire);
    });
    const Amount capacity = btc(10);
    const Amount amount = 123'456'789;
    agents::iot_open_channel(net, capacity);
    agents::iot_send_payment(net, amount);
    agents::iot_close_channel(net);

    std::vector<std::pair<std::string, Bytes>> needles;
    for (auto [label, value] : {std::pair{"capacity", capacity}, std::pair{"amount", amount}}) {
        ByteWriter w;
        w.i64(value);
        needles.emplace_back(std::string(label) + "_be64", std::move(w).take());
        const auto dec = std::to_string(value);
        needles.emplace_back(std::string(label) + "_decimal", Bytes(dec.begin(), dec.end()));
    }
    const auto& dest = net.device().config().default_destination;
    needles.emplace_back("destination", Bytes(dest.begin(), dest.end()));

    std::size_t leaks = 0;
    ordered_json found = ordered_json::array();
    for (const auto& [label, needle] : needles) {
        const bool hit = std::any_of(seen.begin(), seen.end(), [&](const Bytes& w) { return contains(w, needle); });
        if (hit) {
            ++leaks;
            found.push_back(label);
        }
    }
    const auto pub = net.device_keys().pub;
    v.facts["messages_captured"] = seen.size();
    v.facts["plaintext_leaks"] = found;
    v.facts["device_pubkey_visible"] =
        std::any_of(seen.begin(), seen.end(), [&](const Bytes& w) { return contains(w, pub); });
    v.passed = leaks == 0 && !seen.empty();
    v.outcome = v.passed ? "NoLeak" : "Leak";
    return v;
}

Verdict mitm_impersonate(std::uint64_t seed)
{
    Verdict v;
    NetworkConfig nc;
    nc.seed = seed;
    Network net(nc);
    agents::iot_open_channel(net, btc(10));
    const auto before = snapshot(net);

    // Lift the certificate off any device envelope; seal a request under our own session.
    const auto cert = crypto::Envelope::parse(net.device().sent_envelopes().front()).cert;
    crypto::Rng rng(seed ^ 0x1d);
    const auto session = crypto::SessionKeys::generate(rng);
    const auto body = agents::encode(agents::Message{net.device().channel_id(), agents::msg::SendPayment{btc(5), "destination"}});
    const auto env = crypto::seal_envelope(body, session, net.gateway_encryption().pub, net.world().now_ms(), rng, cert);
    net.world().inject("iot", "gateway", agents::MsgType::SendPayment, env.serialize());
    net.world().settle();
    const auto after = snapshot(net);

    const auto& dev_incidents = net.device().incidents();
    v.facts["gateway_accepted_request"] = after.to_bridge > before.to_bridge;
    v.facts["device_rejected_foreign_session"] =
        std::any_of(dev_incidents.begin(), dev_incidents.end(),
                    [](const agents::Incident& i) { return i.code == agents::AgentErrc::AuthFailure; });
    v.facts["state_index_before"] = before.index;
    v.facts["state_index_after"] = after.index;
    v.facts["payments_executed"] = after.paid;
    v.passed = after.index == before.index && after.paid == 0 && after.phase == agents::Phase::Operational;
    v.outcome = v.passed ? "Contained" : "ImpersonationSucceeded";
    return v;
}

} // namespace

Verdict run_mitm(MitmKind kind, std::uint64_t seed)
{
    Verdict v;
    switch (kind) {
    case MitmKind::Tamper: v = mitm_tamper(seed); break;
    case MitmKind::Replay: v = mitm_replay(seed); break;
    case MitmKind::Eavesdrop: v = mitm_eavesdrop(seed); break;
    case MitmKind::Impersonate: v = mitm_impersonate(seed); break;
    }
    v.scenario = "mitm/" + std::string(to_string(kind));
    return v;
}

Verdict run_envelope_fuzz(std::uint64_t seed, std::size_t attempts)
{
    Verdict v;
    v.scenario = "envelope-fuzz";
    NetworkConfig nc;
    nc.seed = seed;
    Network net(nc);
    agents::iot_open_channel(net, btc(10));
    agents::iot_send_payment(net, btc(1));
    const auto& captured = net.device().sent_envelopes();
    crypto::Rng rng(seed ^ 0xf022);

    std::size_t transitions = 0;
    std::size_t replays = 0;
    std::size_t mutations = 0;
    for (std::size_t n = 0; n < attempts; ++n) {
        Bytes wire = captured[rng.uniform(0, captured.size() - 1)];
        switch (rng.uniform(0, 3)) {
        case 0: ++replays; break;
        case 1: {
            const auto pos = rng.uniform(0, wire.size() - 1);
            wire[pos] ^= static_cast<std::uint8_t>(1u << rng.uniform(0, 7));
            ++mutations;
            break;
        }
        case 2: {
            const auto pos = rng.uniform(0, wire.size() - 1);
            wire[pos] = static_cast<std::uint8_t>(rng.uniform(0, 255)) ^ (wire[pos] == 0 ? 1 : 0);
            ++mutations;
            break;
        }
        default:
            wire.resize(rng.uniform(0, wire.size() - 1));
            ++mutations;
        }
        const auto before = snapshot(net);
        net.world().inject("iot", "gateway", agents::MsgType::SendPayment, std::move(wire));
        net.world().run_until_idle();
        const auto after = snapshot(net);
        if (!(before == after)) ++transitions;
    }
    v.facts["attempts"] = attempts;
    v.facts["replays"] = replays;
    v.facts["mutations"] = mutations;
    v.facts["state_transitions"] = transitions;
    v.facts["payments_executed"] = net.destination().payments();
    v.passed = transitions == 0 && net.destination().payments() == 1;
    v.outcome = v.passed ? "NoTransitions" : "TransitionObserved";
    return v;
}

std::vector<Verdict> run_suite(std::uint64_t seed)
{
    std::vector<Verdict> out;
    auto revoked = [&](Adversary a, std::uint64_t state, std::uint32_t offline, bool tower, std::string name) {
        RevokedBroadcastConfig c;
        c.seed = seed;
        c.adversary = a;
        c.state_index = state;
        c.victim_offline_blocks = offline;
        c.watchtower = tower;
        auto v = run_revoked_broadcast(c);
        v.scenario = std::move(name);
        out.push_back(std::move(v));
    };
    revoked(Adversary::Gateway, 1, 0, false, "gateway-revoked-bridge-online");
    revoked(Adversary::Bridge, 1, 0, false, "bridge-revoked-gateway-online");
    revoked(Adversary::Gateway, 1, 20, true, "gateway-revoked-watchtower");
    revoked(Adversary::Bridge, 1, 20, true, "bridge-revoked-watchtower");
    revoked(Adversary::Gateway, 1, 20, false, "gateway-revoked-bridge-offline");
    revoked(Adversary::Bridge, 1, 20, false, "bridge-revoked-gateway-offline");
    revoked(Adversary::Gateway, 2, 0, false, "gateway-latest-state");
    out.push_back(run_theft_attempt(seed));
    for (auto k : {MitmKind::Tamper, MitmKind::Replay, MitmKind::Eavesdrop, MitmKind::Impersonate})
        out.push_back(run_mitm(k, seed));
    return out;
}

} // namespace iotln::threat

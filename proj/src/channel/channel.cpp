// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/channel/channel.hpp>

#include <algorithm>

namespace iotln::channel {

using chain::after_blocks;
using chain::after_height;
using chain::any_of;
using chain::hash_locked;
using chain::Output;
using chain::revocation;
using chain::single_key;

std::string_view to_string(ChannelErrc code)
{
    switch (code) {
    case ChannelErrc::InvalidParams: return "InvalidParams";
    case ChannelErrc::InsufficientFunds: return "InsufficientFunds";
    case ChannelErrc::ConservationViolation: return "ConservationViolation";
    case ChannelErrc::InsufficientChannelBalance: return "InsufficientChannelBalance";
    case ChannelErrc::ZeroAmount: return "ZeroAmount";
    case ChannelErrc::InvalidExpiry: return "InvalidExpiry";
    case ChannelErrc::UnknownPreimage: return "UnknownPreimage";
    case ChannelErrc::NotExpired: return "NotExpired";
    case ChannelErrc::CannotRevokeLatest: return "CannotRevokeLatest";
    case ChannelErrc::PendingHtlcs: return "PendingHtlcs";
    case ChannelErrc::UnknownState: return "UnknownState";
    case ChannelErrc::BadRevocationReveal: return "BadRevocationReveal";
    }
    return "Unknown";
}

ChannelError::ChannelError(ChannelErrc code)
    : std::runtime_error("channel error: " + std::string(to_string(code))), code_(code)
{
}

std::string_view to_string(OutputRole role)
{
    switch (role) {
    case OutputRole::ToIot: return "iot";
    case OutputRole::ToBridge: return "bridge";
    case OutputRole::Htlc: return "htlc";
    case OutputRole::GatewayFee: return "gateway_fee";
    }
    return "unknown";
}

void ChannelParams::validate() const
{
    if (capacity <= 0 || gateway_fee_percent >= 100 || to_self_delay < 1 || htlc_timeout < 1 ||
        confirmation_depth < 1)
        throw ChannelError(ChannelErrc::InvalidParams);
    if (iot_pub == gateway_pub || iot_pub == bridge_pub || gateway_pub == bridge_pub)
        throw ChannelError(ChannelErrc::InvalidParams);
}

chain::SpendCondition ChannelParams::funding_condition() const
{
    return chain::multisig(3, {iot_pub, gateway_pub, bridge_pub});
}

Amount ChannelState::htlc_total() const
{
    Amount sum = 0;
    for (const auto& h : pending_htlcs) sum += h.value;
    return sum;
}

Amount payment_fee(const ChannelParams& params, Amount amount)
{
    return amount * static_cast<Amount>(params.gateway_fee_percent) / 100;
}

ChannelState initial_state(const ChannelParams& params, const RevocationPoints& points)
{
    params.validate();
    ChannelState s;
    s.iot_balance = params.capacity;
    s.revocation = points;
    return s;
}

ChannelState add_htlc(const ChannelState& state, const Htlc& htlc, std::uint32_t current_height,
                      const RevocationPoints& next)
{
    if (htlc.value <= 0 || htlc.fee < 0) throw ChannelError(ChannelErrc::ZeroAmount);
    if (htlc.value + htlc.fee > state.iot_balance) throw ChannelError(ChannelErrc::InsufficientChannelBalance);
    if (htlc.expiry <= current_height) throw ChannelError(ChannelErrc::InvalidExpiry);

    ChannelState s = state;
    s.index = state.index + 1;
    s.iot_balance -= htlc.value + htlc.fee;
    s.gateway_fee_accrued += htlc.fee;
    s.pending_htlcs.push_back(htlc);
    s.revocation = next;
    return s;
}

ChannelState apply_payment(const ChannelParams& params, const ChannelState& state, Amount amount,
                           const Hash256& payment_hash, std::uint32_t expiry, std::uint32_t current_height,
                           const RevocationPoints& next)
{
    if (amount <= 0) throw ChannelError(ChannelErrc::ZeroAmount);
    if (amount > state.iot_balance) throw ChannelError(ChannelErrc::InsufficientChannelBalance);
    const Amount fee = payment_fee(params, amount);
    if (amount - fee <= 0) throw ChannelError(ChannelErrc::ZeroAmount);
    return add_htlc(state, Htlc{amount - fee, fee, payment_hash, expiry, HtlcDirection::Outgoing}, current_height,
                    next);
}

ChannelState settle_htlc(const ChannelState& state, const crypto::Preimage& preimage, const RevocationPoints& next)
{
    auto hash = crypto::sha256(preimage);
    auto it = std::find_if(state.pending_htlcs.begin(), state.pending_htlcs.end(),
                           [&](const Htlc& h) { return h.payment_hash == hash; });
    if (it == state.pending_htlcs.end()) throw ChannelError(ChannelErrc::UnknownPreimage);

    ChannelState s = state;
    s.index = state.index + 1;
    s.bridge_balance += it->value;
    s.pending_htlcs.erase(s.pending_htlcs.begin() + (it - state.pending_htlcs.begin()));
    s.revocation = next;
    return s;
}

ChannelState timeout_htlc(const ChannelState& state, std::uint32_t current_height, const RevocationPoints& next)
{
    ChannelState s = state;
    auto expired = [&](const Htlc& h) { return h.expiry <= current_height; };
    if (std::none_of(state.pending_htlcs.begin(), state.pending_htlcs.end(), expired))
        throw ChannelError(ChannelErrc::NotExpired);
    for (const auto& h : state.pending_htlcs) {
        if (!expired(h)) continue;
        s.iot_balance += h.value + h.fee;
        s.gateway_fee_accrued -= h.fee;
    }
    std::erase_if(s.pending_htlcs, expired);
    s.index = state.index + 1;
    s.revocation = next;
    return s;
}

Transaction build_funding_tx(const ChannelParams& params, const OutPoint& wallet_outpoint, Amount wallet_value,
                             Amount onchain_fee)
{
    params.validate();
    if (onchain_fee < 0 || wallet_value < params.capacity + onchain_fee || wallet_value == params.capacity)
        throw ChannelError(ChannelErrc::InsufficientFunds);
    Transaction tx;
    tx.inputs.push_back({wallet_outpoint, {}});
    tx.outputs.push_back(Output{params.capacity, params.funding_condition()});
    if (const Amount change = wallet_value - params.capacity - onchain_fee; change > 0)
        tx.outputs.push_back(Output{change, single_key(params.iot_pub)});
    return tx;
}

std::optional<std::uint32_t> CommitmentTx::find(OutputRole role) const
{
    for (std::uint32_t i = 0; i < roles.size(); ++i)
        if (roles[i] == role) return i;
    return std::nullopt;
}

namespace {

void add_output(CommitmentTx& c, OutputRole role, Amount value, chain::SpendCondition cond)
{
    if (value <= 0) return;
    c.tx.outputs.push_back(Output{value, std::move(cond)});
    c.roles.push_back(role);
}

void check_conservation(const ChannelParams& params, const ChannelState& state)
{
    if (state.iot_balance < 0 || state.bridge_balance < 0 || state.gateway_fee_accrued < 0 ||
        state.total() != params.capacity)
        throw ChannelError(ChannelErrc::ConservationViolation);
    for (const auto& h : state.pending_htlcs)
        if (h.value <= 0) throw ChannelError(ChannelErrc::ConservationViolation);
}

} // namespace

CommitmentPair build_commitments(const ChannelParams& params, const OutPoint& funding, const ChannelState& state)
{
    check_conservation(params, state);
    const auto k = params.to_self_delay;
    const auto& gw_rev = state.revocation.gateway;
    const auto& br_rev = state.revocation.bridge;

    CommitmentPair pair;
    auto& g = pair.gateway_held;
    g.tx.inputs.push_back({funding, {}});
    add_output(g, OutputRole::ToIot, state.iot_balance,
               any_of({after_blocks(k, single_key(params.iot_pub)), revocation(gw_rev)}));
    add_output(g, OutputRole::ToBridge, state.bridge_balance, single_key(params.bridge_pub));
    for (const auto& h : state.pending_htlcs) {
        add_output(g, OutputRole::Htlc, h.value,
                   any_of({hash_locked(h.payment_hash, single_key(params.bridge_pub)),
                           after_height(h.expiry, single_key(params.iot_pub)), revocation(gw_rev)}));
    }
    add_output(g, OutputRole::GatewayFee, state.gateway_fee_accrued,
               any_of({after_blocks(k, single_key(params.gateway_pub)), revocation(gw_rev)}));

    auto& b = pair.bridge_held;
    b.tx.inputs.push_back({funding, {}});
    add_output(b, OutputRole::ToIot, state.iot_balance, single_key(params.iot_pub));
    add_output(b, OutputRole::ToBridge, state.bridge_balance,
               any_of({after_blocks(k, single_key(params.bridge_pub)), revocation(br_rev)}));
    for (const auto& h : state.pending_htlcs) {
        add_output(b, OutputRole::Htlc, h.value,
                   any_of({hash_locked(h.payment_hash, after_blocks(k, single_key(params.bridge_pub))),
                           after_height(h.expiry, single_key(params.iot_pub)), revocation(br_rev)}));
    }
    add_output(b, OutputRole::GatewayFee, state.gateway_fee_accrued,
               any_of({single_key(params.gateway_pub), revocation(br_rev)}));
    return pair;
}

Transaction build_mutual_close(const ChannelParams& params, const OutPoint& funding, const ChannelState& state,
                               Amount onchain_fee)
{
    if (!state.pending_htlcs.empty()) throw ChannelError(ChannelErrc::PendingHtlcs);
    check_conservation(params, state);
    if (onchain_fee < 0 || state.iot_balance < onchain_fee) throw ChannelError(ChannelErrc::InsufficientFunds);

    Transaction tx;
    tx.inputs.push_back({funding, {}});
    if (const Amount iot = state.iot_balance - onchain_fee; iot > 0)
        tx.outputs.push_back(Output{iot, single_key(params.iot_pub)});
    if (state.bridge_balance > 0) tx.outputs.push_back(Output{state.bridge_balance, single_key(params.bridge_pub)});
    if (state.gateway_fee_accrued > 0)
        tx.outputs.push_back(Output{state.gateway_fee_accrued, single_key(params.gateway_pub)});
    return tx;
}

std::uint64_t channel_id_for(const OutPoint& funding)
{
    std::uint64_t id = 0;
    for (int i = 0; i < 8; ++i) id = (id << 8) | funding.txid[static_cast<std::size_t>(i)];
    return id ^ funding.index;
}

Channel::Channel(ChannelParams params, Role role, RevocationStore own_revocation, OutPoint funding,
                 const PubKey& counterparty_first_point)
    : params_(std::move(params)), role_(role), own_revocation_(std::move(own_revocation)), funding_(funding)
{
    RevocationPoints points;
    if (role_ == Role::Gateway) {
        points = {own_revocation_.point(0), counterparty_first_point};
    } else {
        points = {counterparty_first_point, own_revocation_.point(0)};
    }
    states_.push_back(initial_state(params_, points));
    own_revocation_.set_latest(0);
}

std::uint64_t Channel::channel_id() const { return channel_id_for(funding_); }

const ChannelState& Channel::state(std::uint64_t index) const
{
    if (index >= states_.size()) throw ChannelError(ChannelErrc::UnknownState);
    return states_[index];
}

RevocationPoints Channel::next_points() const
{
    const auto own = own_revocation_.point(latest().index + 1);
    return role_ == Role::Gateway ? RevocationPoints{own, counterparty_next_} : RevocationPoints{counterparty_next_, own};
}

void Channel::push(ChannelState next)
{
    if (next.index != latest().index + 1) throw ChannelError(ChannelErrc::UnknownState);
    check_conservation(params_, next);
    states_.push_back(std::move(next));
    own_revocation_.set_latest(latest().index);
}

void Channel::store_commitments(std::uint64_t index, CommitmentPair pair)
{
    if (index >= states_.size()) throw ChannelError(ChannelErrc::UnknownState);
    commitments_[index] = std::move(pair);
}

const CommitmentPair* Channel::commitments(std::uint64_t index) const
{
    auto it = commitments_.find(index);
    return it == commitments_.end() ? nullptr : &it->second;
}

RevocationReveal Channel::revoke_state(std::uint64_t index)
{
    if (index >= states_.size()) throw ChannelError(ChannelErrc::UnknownState);
    return own_revocation_.revoke(index);
}

PubKey Channel::counterparty_point(const ChannelState& s) const
{
    return role_ == Role::Gateway ? s.revocation.bridge : s.revocation.gateway;
}

void Channel::accept_reveal(const RevocationReveal& reveal)
{
    if (reveal.state_index >= latest().index || !reveal.matches(counterparty_point(state(reveal.state_index))))
        throw ChannelError(ChannelErrc::BadRevocationReveal);
    reveals_[reveal.state_index] = reveal;
}

namespace {

using nlohmann::json;

json htlc_json(const Htlc& h)
{
    return {{"value", h.value}, {"fee", h.fee}, {"payment_hash", to_hex(h.payment_hash)}, {"expiry", h.expiry}};
}

template <std::size_t N>
std::array<std::uint8_t, N> hex_array(const json& j)
{
    auto b = from_hex(j.get<std::string>());
    if (b.size() != N) throw DecodeError("wrong hex length");
    std::array<std::uint8_t, N> out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

json commitment_json(const CommitmentTx& c)
{
    json roles = json::array();
    for (auto r : c.roles) roles.push_back(std::string(to_string(r)));
    return {{"txid", to_hex(c.tx.txid())}, {"raw", to_hex(c.tx.serialize())}, {"roles", roles}};
}

CommitmentTx commitment_from_json(const json& j)
{
    CommitmentTx c;
    c.tx = Transaction::parse(from_hex(j.at("raw").get<std::string>()));
    for (const auto& r : j.at("roles")) {
        const auto s = r.get<std::string>();
        if (s == "iot") c.roles.push_back(OutputRole::ToIot);
        else if (s == "bridge") c.roles.push_back(OutputRole::ToBridge);
        else if (s == "htlc") c.roles.push_back(OutputRole::Htlc);
        else if (s == "gateway_fee") c.roles.push_back(OutputRole::GatewayFee);
        else throw DecodeError("unknown output role " + s);
    }
    return c;
}

} // namespace

json Channel::to_json() const
{
    json j;
    j["schema"] = "iotln.channel/1";
    j["role"] = role_ == Role::Gateway ? "gateway" : "bridge";
    j["params"] = {{"capacity", params_.capacity},
                   {"iot_pub", to_hex(params_.iot_pub)},
                   {"gateway_pub", to_hex(params_.gateway_pub)},
                   {"bridge_pub", to_hex(params_.bridge_pub)},
                   {"to_self_delay", params_.to_self_delay},
                   {"htlc_timeout", params_.htlc_timeout},
                   {"gateway_fee_percent", params_.gateway_fee_percent},
                   {"confirmation_depth", params_.confirmation_depth}};
    j["funding"] = {{"txid", to_hex(funding_.txid)}, {"index", funding_.index}};
    j["channel_id"] = channel_id();
    j["revocation_seed"] = to_hex(own_revocation_.seed());
    j["revoked"] = own_revocation_.revoked();
    j["counterparty_next_point"] = to_hex(counterparty_next_);

    json states = json::array();
    for (const auto& s : states_) {
        json htlcs = json::array();
        for (const auto& h : s.pending_htlcs) htlcs.push_back(htlc_json(h));
        states.push_back({{"index", s.index},
                          {"iot_balance", s.iot_balance},
                          {"bridge_balance", s.bridge_balance},
                          {"gateway_fee_accrued", s.gateway_fee_accrued},
                          {"pending_htlcs", htlcs},
                          {"revocation", {{"gateway", to_hex(s.revocation.gateway)}, {"bridge", to_hex(s.revocation.bridge)}}}});
    }
    j["states"] = states;

    json commitments = json::array();
    for (const auto& [index, pair] : commitments_) {
        commitments.push_back({{"index", index},
                               {"gateway_held", commitment_json(pair.gateway_held)},
                               {"bridge_held", commitment_json(pair.bridge_held)}});
    }
    j["commitments"] = commitments;

    json reveals = json::array();
    for (const auto& [index, r] : reveals_) reveals.push_back({{"index", index}, {"key", to_hex(r.key.seed)}});
    j["counterparty_reveals"] = reveals;
    return j;
}

Channel Channel::from_json(const json& j)
{
    if (j.at("schema") != "iotln.channel/1") throw DecodeError("unsupported channel schema");
    const auto& p = j.at("params");
    ChannelParams params;
    params.capacity = p.at("capacity").get<Amount>();
    params.iot_pub = hex_array<32>(p.at("iot_pub"));
    params.gateway_pub = hex_array<32>(p.at("gateway_pub"));
    params.bridge_pub = hex_array<32>(p.at("bridge_pub"));
    params.to_self_delay = p.at("to_self_delay").get<std::uint32_t>();
    params.htlc_timeout = p.at("htlc_timeout").get<std::uint32_t>();
    params.gateway_fee_percent = p.at("gateway_fee_percent").get<std::uint32_t>();
    params.confirmation_depth = p.at("confirmation_depth").get<std::uint32_t>();

    const Role role = j.at("role") == "gateway" ? Role::Gateway : Role::Bridge;
    OutPoint funding{hex_array<32>(j.at("funding").at("txid")), j.at("funding").at("index").get<std::uint32_t>()};
    RevocationStore store(hex_array<32>(j.at("revocation_seed")));

    std::vector<ChannelState> states;
    for (const auto& sj : j.at("states")) {
        ChannelState s;
        s.index = sj.at("index").get<std::uint64_t>();
        s.iot_balance = sj.at("iot_balance").get<Amount>();
        s.bridge_balance = sj.at("bridge_balance").get<Amount>();
        s.gateway_fee_accrued = sj.at("gateway_fee_accrued").get<Amount>();
        for (const auto& hj : sj.at("pending_htlcs")) {
            s.pending_htlcs.push_back(Htlc{hj.at("value").get<Amount>(), hj.at("fee").get<Amount>(),
                                           hex_array<32>(hj.at("payment_hash")), hj.at("expiry").get<std::uint32_t>(),
                                           HtlcDirection::Outgoing});
        }
        s.revocation.gateway = hex_array<32>(sj.at("revocation").at("gateway"));
        s.revocation.bridge = hex_array<32>(sj.at("revocation").at("bridge"));
        states.push_back(std::move(s));
    }
    if (states.empty()) throw DecodeError("channel snapshot has no states");

    const PubKey first_counterparty = role == Role::Gateway ? states[0].revocation.bridge : states[0].revocation.gateway;
    Channel ch(params, role, store, funding, first_counterparty);
    if (!(ch.states_.front() == states.front())) throw DecodeError("channel snapshot state 0 is inconsistent");
    for (std::size_t i = 1; i < states.size(); ++i) ch.push(states[i]);
    for (auto idx : j.at("revoked").get<std::vector<std::uint64_t>>()) ch.own_revocation_.revoke(idx);
    ch.counterparty_next_ = hex_array<32>(j.at("counterparty_next_point"));
    for (const auto& cj : j.at("commitments")) {
        ch.commitments_[cj.at("index").get<std::uint64_t>()] =
            CommitmentPair{commitment_from_json(cj.at("gateway_held")), commitment_from_json(cj.at("bridge_held"))};
    }
    for (const auto& rj : j.at("counterparty_reveals")) {
        RevocationReveal r;
        r.state_index = rj.at("index").get<std::uint64_t>();
        r.key.seed = hex_array<32>(rj.at("key"));
        ch.accept_reveal(r);
    }
    return ch;
}

} // namespace iotln::channel

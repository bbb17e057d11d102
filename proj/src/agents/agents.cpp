// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/agents/agents.hpp>

#include <algorithm>

namespace iotln::agents {

using channel::ChannelError;
using channel::ChannelState;
using channel::RevocationReveal;
using chain::KeySignature;
using chain::Transaction;

std::string_view to_string(AgentErrc code)
{
    switch (code) {
    case AgentErrc::ProtocolViolation: return "ProtocolViolation";
    case AgentErrc::AuthFailure: return "AuthFailure";
    case AgentErrc::GatewayRejected: return "GatewayRejected";
    case AgentErrc::BridgeRejected: return "BridgeRejected";
    case AgentErrc::SignatureInvalid: return "SignatureInvalid";
    case AgentErrc::ConfirmationTimeout: return "ConfirmationTimeout";
    case AgentErrc::InsufficientChannelBalance: return "InsufficientChannelBalance";
    case AgentErrc::DeviceDeclinedSignature: return "DeviceDeclinedSignature";
    case AgentErrc::BridgeUnresponsive: return "BridgeUnresponsive";
    case AgentErrc::PendingHtlcs: return "PendingHtlcs";
    case AgentErrc::EmptyDirectory: return "EmptyDirectory";
    case AgentErrc::UnknownDestination: return "UnknownDestination";
    }
    return "Unknown";
}

std::optional<AgentErrc> agent_errc_from_string(std::string_view s)
{
    for (int i = 0; i <= static_cast<int>(AgentErrc::UnknownDestination); ++i) {
        auto c = static_cast<AgentErrc>(i);
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

AgentError::AgentError(AgentErrc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)), code_(code)
{
}

std::string_view to_string(Phase p)
{
    switch (p) {
    case Phase::Idle: return "Idle";
    case Phase::Opening: return "Opening";
    case Phase::Operational: return "Operational";
    case Phase::Paying: return "Paying";
    case Phase::Closing: return "Closing";
    case Phase::Closed: return "Closed";
    }
    return "Unknown";
}

const DirectoryEntry& select_bridge(std::span<const DirectoryEntry> directory)
{
    if (directory.empty()) throw AgentError(AgentErrc::EmptyDirectory);
    return *std::min_element(directory.begin(), directory.end(), [](const auto& a, const auto& b) {
        if (a.active_channels != b.active_channels) return a.active_channels > b.active_channels;
        return a.node_id < b.node_id;
    });
}

crypto::Hash256 Destination::invoice(Amount amount)
{
    auto secret = crypto::new_preimage(rng_);
    invoices_[secret.hash] = Invoice{secret, amount, false};
    return secret.hash;
}

std::optional<crypto::Preimage> Destination::claim(const crypto::Hash256& hash, Amount value)
{
    auto it = invoices_.find(hash);
    if (it == invoices_.end() || it->second.paid || value < it->second.amount) return std::nullopt;
    it->second.paid = true;
    received_ += value;
    ++payments_;
    return it->second.secret.preimage;
}

namespace {

std::optional<crypto::Signature> signature_by(const Transaction& tx, const crypto::PubKey& key)
{
    if (tx.inputs.empty()) return std::nullopt;
    for (const auto& s : tx.inputs[0].witness.signatures)
        if (s.key == key) return s.sig;
    return std::nullopt;
}

bool signed_correctly(const Transaction& tx, const crypto::PubKey& key)
{
    auto sig = signature_by(tx, key);
    return sig && crypto::verify(tx.txid(), *sig, key);
}

std::optional<crypto::Signature> find_sig(const std::vector<KeySignature>& sigs, const chain::Txid& id,
                                          const crypto::PubKey& key)
{
    for (const auto& s : sigs)
        if (s.key == key && crypto::verify(id, s.sig, key)) return s.sig;
    return std::nullopt;
}

void attach(Transaction& tx, const crypto::PubKey& key, const crypto::Signature& sig)
{
    auto& sigs = tx.inputs.at(0).witness.signatures;
    std::erase_if(sigs, [&](const KeySignature& s) { return s.key == key; });
    sigs.push_back({key, sig});
}

std::optional<Message> decode_or_null(const Bytes& wire)
{
    try {
        return decode(wire);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

} // namespace

// ---------------------------------------------------------------- Device

Device::Device(World& world, std::string name, Keys keys, std::string gateway, crypto::PubKey gateway_enc_pub,
               DeviceConfig config)
    : Agent(world, std::move(name)), keys_(std::move(keys)), gateway_(std::move(gateway)),
      gateway_enc_pub_(gateway_enc_pub), config_(std::move(config)), rng_(world.fork_rng()),
      session_(crypto::SessionKeys::generate(rng_))
{
    world.add(*this);
}

void Device::send(Body body)
{
    Message m{channel_id_, std::move(body)};
    auto env = crypto::seal_envelope(encode(m), session_, gateway_enc_pub_, world_.now_ms(), rng_,
                                     keys_.certificate);
    auto wire = env.serialize();
    sent_.push_back(wire);
    world_.send(name_, gateway_, m.type(), std::move(wire));
}

void Device::request_open(Amount capacity)
{
    outcome_.reset();
    requested_capacity_ = capacity;
    send(msg::OpenChannelRequest{capacity});
}

void Device::request_payment(Amount amount, std::optional<std::string> destination)
{
    outcome_.reset();
    send(msg::SendPayment{amount, destination.value_or(config_.default_destination)});
}

void Device::request_close()
{
    outcome_.reset();
    send(msg::CloseChannelRequest{});
}

nlohmann::json Device::persistent_state() const
{
    return {
        {"signing_key", to_hex(keys_.signing.priv.seed)},
        {"signing_pub", to_hex(keys_.signing.pub)},
        {"encryption_key", to_hex(keys_.encryption.priv)},
        {"certificate", to_hex(keys_.certificate.serialize())},
        {"channel_id", channel_id_},
    };
}

void Device::on_receive(const std::string& from, const Bytes& wire)
{
    if (from != gateway_) {
        incidents_.push_back({world_.now_ms(), AgentErrc::ProtocolViolation, "message from " + from});
        return;
    }
    std::optional<Message> m;
    try {
        auto env = crypto::Envelope::parse(wire);
        auto opened = crypto::open_envelope(env, keys_.encryption.priv, world_.now_ms(),
                                            crypto::OpenPolicy{config_.freshness_window_ms, std::nullopt});
        // Only the gateway could have unwrapped our session keys.
        if (opened.session.enc != session_.enc || opened.session.mac != session_.mac)
            throw crypto::EnvelopeError(crypto::EnvelopeErrc::DecryptFailure);
        if (!replay_.check_and_remember(env.mac, env.timestamp_ms))
            throw crypto::EnvelopeError(crypto::EnvelopeErrc::Replayed);
        m = decode_or_null(opened.payload);
    } catch (const crypto::EnvelopeError& e) {
        incidents_.push_back({world_.now_ms(), AgentErrc::AuthFailure, std::string(to_string(e.code()))});
        return;
    }
    if (!m || !is_device_facing(m->type())) {
        incidents_.push_back({world_.now_ms(), AgentErrc::ProtocolViolation, "undecodable"});
        return;
    }
    handle(*m);
}

void Device::handle(const Message& m)
{
    if (const auto* f = m.as<msg::FundingSignature>()) {
        auto tx = f->unsigned_funding_tx;
        const chain::MultiSig* ms =
            tx.outputs.empty() ? nullptr : std::get_if<chain::MultiSig>(&tx.outputs[0].condition.node);
        const bool ours = ms != nullptr && ms->threshold == 3 && ms->keys.size() == 3 &&
                          std::find(ms->keys.begin(), ms->keys.end(), keys_.signing.pub) != ms->keys.end() &&
                          tx.outputs[0].value == requested_capacity_;
        if (!ours) {
            send(msg::Rejected{std::string(to_string(AgentErrc::ProtocolViolation))});
            return;
        }
        if (config_.withhold_funding_signature) return;
        for (std::size_t i = 0; i < tx.inputs.size(); ++i) tx.add_signature(i, keys_.signing);
        send(msg::FundingSigned{std::move(tx)});
    } else if (const auto* r = m.as<msg::RequestSignTx>()) {
        if (config_.decline_signing) {
            send(msg::Rejected{std::string(to_string(AgentErrc::DeviceDeclinedSignature))});
            return;
        }
        auto txs = r->txs;
        for (auto& tx : txs) {
            if (channel_id_ == 0 || tx.inputs.size() != 1 ||
                channel::channel_id_for(tx.inputs[0].prevout) != channel_id_) {
                send(msg::Rejected{std::string(to_string(AgentErrc::ProtocolViolation))});
                return;
            }
            tx.add_signature(0, keys_.signing);
        }
        send(msg::SignedTx{std::move(txs)});
    } else if (m.as<msg::ChannelOpened>()) {
        channel_id_ = m.channel_id;
        outcome_ = Outcome{m.type(), {}};
    } else if (m.as<msg::ChannelClosed>()) {
        channel_id_ = 0;
        outcome_ = Outcome{m.type(), {}};
    } else if (m.as<msg::PaymentSuccess>()) {
        outcome_ = Outcome{m.type(), {}};
    } else if (const auto* pf = m.as<msg::PaymentFailure>()) {
        outcome_ = Outcome{m.type(), pf->reason};
    } else if (const auto* rj = m.as<msg::Rejected>()) {
        outcome_ = Outcome{m.type(), rj->reason};
    } else if (m.as<msg::OpenChannelAccepted>()) {
        // Informational; the flow continues at the gateway.
    } else {
        incidents_.push_back({world_.now_ms(), AgentErrc::ProtocolViolation, std::string(to_string(m.type()))});
    }
}

// ---------------------------------------------------------------- Gateway

Gateway::Gateway(World& world, std::string name, Identity id, crypto::PubKey device_issuer, std::string device,
                 crypto::PubKey device_enc_pub, std::vector<DirectoryEntry> directory, GatewayConfig config)
    : Agent(world, std::move(name)), id_(std::move(id)), device_issuer_(device_issuer), device_(std::move(device)),
      device_enc_pub_(device_enc_pub), directory_(std::move(directory)), config_(config), rng_(world.fork_rng())
{
    world.add(*this);
}

void Gateway::incident(AgentErrc code, const std::string& detail)
{
    incidents_.push_back({world_.now_ms(), code, detail});
}

void Gateway::arm_timer()
{
    ++timer_tag_;
    world_.set_timer(name_, config_.peer_timeout_ms, timer_tag_);
}

void Gateway::to_device(Body body)
{
    if (!session_) return;
    Message m{channel_ ? channel_->channel_id() : 0, std::move(body)};
    auto env = crypto::seal_envelope(encode(m), *session_, device_enc_pub_, world_.now_ms(), rng_);
    world_.send(name_, device_, m.type(), env.serialize());
}

void Gateway::to_bridge(Body body)
{
    Message m{channel_ ? channel_->channel_id() : 0, std::move(body)};
    world_.send(name_, bridge_.node_id, m.type(), encode(m));
}

void Gateway::on_receive(const std::string& from, const Bytes& wire)
{
    if (from == device_) {
        crypto::OpenedEnvelope opened;
        try {
            auto env = crypto::Envelope::parse(wire);
            opened = crypto::open_envelope(env, id_.encryption.priv, world_.now_ms(),
                                           crypto::OpenPolicy{config_.freshness_window_ms, device_issuer_});
            if (!replay_.check_and_remember(env.mac, env.timestamp_ms))
                throw crypto::EnvelopeError(crypto::EnvelopeErrc::Replayed);
        } catch (const crypto::EnvelopeError& e) {
            incident(AgentErrc::AuthFailure, std::string(to_string(e.code())));
            return;
        }
        if (phase_ != Phase::Idle && opened.cert->subject != device_pub_) {
            incident(AgentErrc::AuthFailure, "unknown device");
            return;
        }
        session_ = opened.session;
        auto m = decode_or_null(opened.payload);
        if (!m || !is_device_facing(m->type())) {
            incident(AgentErrc::ProtocolViolation, "undecodable device message");
            to_device(msg::Rejected{std::string(to_string(AgentErrc::ProtocolViolation))});
            return;
        }
        if (phase_ == Phase::Idle) device_pub_ = opened.cert->subject;
        handle_device(*m);
        return;
    }
    if (bridge_.node_id.empty() || from != bridge_.node_id) {
        incident(AgentErrc::ProtocolViolation, "message from " + from);
        return;
    }
    auto m = decode_or_null(wire);
    if (!m || is_device_facing(m->type())) {
        incident(AgentErrc::ProtocolViolation, "undecodable peer message");
        return;
    }
    if (channel_ && m->channel_id != channel_->channel_id()) {
        incident(AgentErrc::ProtocolViolation, "foreign channel id");
        return;
    }
    handle_peer(*m);
}

void Gateway::handle_device(const Message& m)
{
    auto violation = [&] {
        incident(AgentErrc::ProtocolViolation,
                 std::string(to_string(m.type())) + " while " + std::string(to_string(phase_)));
        to_device(msg::Rejected{std::string(to_string(AgentErrc::ProtocolViolation))});
    };

    if (const auto* r = m.as<msg::OpenChannelRequest>()) {
        if (phase_ != Phase::Idle) return violation();
        on_open_request(device_pub_, *r);
    } else if (const auto* f = m.as<msg::FundingSigned>()) {
        if (phase_ != Phase::Opening || step_ != Step::AwaitDeviceFunding) return violation();
        on_device_funding(*f);
    } else if (const auto* p = m.as<msg::SendPayment>()) {
        if (phase_ != Phase::Operational) return violation();
        on_send_payment(*p);
    } else if (const auto* s = m.as<msg::SignedTx>()) {
        if (step_ == Step::AwaitDeviceSig && phase_ == Phase::Paying) return on_signed_tx(*s);
        if (step_ != Step::AwaitDeviceCloseSig || phase_ != Phase::Closing) return violation();
        if (s->txs.size() != 1 || s->txs[0].txid() != close_tx_.txid() ||
            !signed_correctly(s->txs[0], device_pub_)) {
            incident(AgentErrc::SignatureInvalid, "close");
            to_bridge(msg::PeerError{std::string(to_string(AgentErrc::SignatureInvalid))});
            to_device(msg::Rejected{std::string(to_string(AgentErrc::SignatureInvalid))});
            phase_ = Phase::Operational;
            step_ = Step::None;
            disarm_timer();
            return;
        }
        const auto iot_sig = *signature_by(s->txs[0], device_pub_);
        attach(close_tx_, device_pub_, iot_sig);
        close_tx_.add_signature(0, id_.signing);
        to_bridge(msg::ClosingSigned{{{device_pub_, iot_sig}, {id_.signing.pub, *signature_by(close_tx_, id_.signing.pub)}}});
        step_ = Step::AwaitClosingSigned;
        arm_timer();
    } else if (const auto* rj = m.as<msg::Rejected>()) {
        if (phase_ == Phase::Paying && step_ == Step::AwaitDeviceSig) return abort_payment(AgentErrc::DeviceDeclinedSignature);
        if (phase_ == Phase::Closing && step_ == Step::AwaitDeviceCloseSig) {
            incident(AgentErrc::DeviceDeclinedSignature, "close");
            to_bridge(msg::PeerError{std::string(to_string(AgentErrc::DeviceDeclinedSignature))});
            phase_ = Phase::Operational;
            step_ = Step::None;
            disarm_timer();
            return;
        }
        if (phase_ == Phase::Opening && step_ == Step::AwaitDeviceFunding)
            return abort_open(AgentErrc::SignatureInvalid);
        incident(AgentErrc::ProtocolViolation, "device rejected: " + rj->reason);
    } else if (m.as<msg::CloseChannelRequest>()) {
        if (phase_ != Phase::Operational) return violation();
        if (!channel_->latest().pending_htlcs.empty()) {
            to_device(msg::Rejected{std::string(to_string(AgentErrc::PendingHtlcs))});
            return;
        }
        initiate_close();
    } else {
        violation();
    }
}

void Gateway::handle_peer(const Message& m)
{
    auto violation = [&] {
        incident(AgentErrc::ProtocolViolation,
                 std::string(to_string(m.type())) + " while " + std::string(to_string(phase_)));
    };

    if (const auto* a = m.as<msg::AcceptChannel>()) {
        if (phase_ != Phase::Opening || step_ != Step::AwaitAccept) return violation();
        on_accept(*a);
    } else if (const auto* f = m.as<msg::PeerFundingSigned>()) {
        if (phase_ != Phase::Opening || step_ != Step::AwaitFundingSigned) return violation();
        on_funding_signed(*f);
    } else if (const auto* l = m.as<msg::FundingLocked>()) {
        if (phase_ != Phase::Opening || step_ != Step::AwaitDepth) return violation();
        channel_->set_counterparty_next_point(l->next_revocation_point);
        locked_received_ = true;
        maybe_operational();
    } else if (const auto* r = m.as<msg::RevokeAndAck>()) {
        if (phase_ != Phase::Paying || step_ != Step::AwaitBridgeRevoke) return violation();
        on_revoke(*r);
    } else if (const auto* c = m.as<msg::CommitmentSigned>()) {
        if (phase_ != Phase::Paying || step_ != Step::AwaitBridgeCommit) return violation();
        on_commitment_signed(*c);
    } else if (const auto* u = m.as<msg::UpdateFulfillHtlc>()) {
        if (phase_ != Phase::Paying || step_ != Step::AwaitFulfill) return violation();
        on_fulfill(*u);
    } else if (m.as<msg::Shutdown>()) {
        if (phase_ == Phase::Closing && step_ == Step::AwaitShutdown) return begin_close_signing();
        if (phase_ != Phase::Operational) return violation();
        if (!channel_->latest().pending_htlcs.empty()) {
            to_bridge(msg::PeerError{std::string(to_string(AgentErrc::PendingHtlcs))});
            return;
        }
        phase_ = Phase::Closing;
        to_bridge(msg::Shutdown{});
        begin_close_signing();
    } else if (const auto* cs = m.as<msg::ClosingSigned>()) {
        if (phase_ != Phase::Closing || step_ != Step::AwaitClosingSigned) return violation();
        on_closing_signed(*cs);
    } else if (const auto* e = m.as<msg::PeerError>()) {
        if (phase_ == Phase::Opening && !funding_txid_) return abort_open(AgentErrc::BridgeRejected);
        if (phase_ == Phase::Paying) return abort_payment(AgentErrc::BridgeUnresponsive);
        if (phase_ == Phase::Closing) {
            incident(AgentErrc::BridgeRejected, e->reason);
            to_device(msg::Rejected{std::string(to_string(AgentErrc::BridgeRejected))});
            phase_ = Phase::Operational;
            step_ = Step::None;
            disarm_timer();
            return;
        }
        incident(AgentErrc::BridgeRejected, e->reason);
    } else {
        violation();
    }
}

void Gateway::on_open_request(const crypto::PubKey& device_pub, const msg::OpenChannelRequest& m)
{
    device_pub_ = device_pub;
    capacity_ = m.capacity;
    try {
        bridge_ = select_bridge(directory_);
    } catch (const AgentError& e) {
        incident(e.code(), "select_bridge");
        to_device(msg::Rejected{std::string(to_string(e.code()))});
        return;
    }
    const Amount fee = world_.chain().config().onchain_fee;
    bool funded = false;
    for (const auto& [op, out] : world_.chain().utxos_for(device_pub_)) {
        if (m.capacity > 0 && out.value >= m.capacity + fee && out.value != m.capacity) {
            funding_tx_ = Transaction{};
            funding_tx_.inputs.push_back({op, {}});
            funding_tx_.outputs.push_back({out.value, chain::single_key(device_pub_)});
            funded = true;
            break;
        }
    }
    if (!funded) {
        incident(AgentErrc::GatewayRejected, "insufficient wallet funds");
        to_device(msg::Rejected{std::string(to_string(AgentErrc::GatewayRejected))});
        return;
    }
    phase_ = Phase::Opening;
    step_ = Step::AwaitAccept;
    funding_txid_.reset();
    locked_sent_ = locked_received_ = false;
    to_device(msg::OpenChannelAccepted{});
    to_bridge(msg::OpenChannel{id_.signing.pub, device_pub_, capacity_, config_.to_self_delay,
                               id_.revocation.point(0)});
    arm_timer();
}

void Gateway::on_accept(const msg::AcceptChannel& m)
{
    if (m.funding_pubkey != bridge_.pubkey) return abort_open(AgentErrc::BridgeRejected);
    channel::ChannelParams params;
    params.capacity = capacity_;
    params.iot_pub = device_pub_;
    params.gateway_pub = id_.signing.pub;
    params.bridge_pub = bridge_.pubkey;
    params.to_self_delay = config_.to_self_delay;
    params.htlc_timeout = config_.htlc_timeout;
    params.gateway_fee_percent = config_.gateway_fee_percent;
    params.confirmation_depth = std::max(config_.confirmation_depth, m.minimum_depth);

    // on_open_request parked the chosen wallet coin in funding_tx_.
    const auto wallet = funding_tx_.inputs.at(0).prevout;
    const auto wallet_value = funding_tx_.outputs.at(0).value;
    try {
        funding_tx_ = channel::build_funding_tx(params, wallet, wallet_value, world_.chain().config().onchain_fee);
    } catch (const ChannelError&) {
        return abort_open(AgentErrc::GatewayRejected);
    }
    const chain::OutPoint funding{funding_tx_.txid(), channel::kFundingOutputIndex};
    channel_.emplace(params, channel::Role::Gateway, id_.revocation, funding, m.first_revocation_point);
    staged_pair_ = channel::build_commitments(params, funding, channel_->latest());
    staged_pair_.gateway_held.tx.add_signature(0, id_.signing);
    staged_pair_.bridge_held.tx.add_signature(0, id_.signing);
    step_ = Step::AwaitFundingSigned;
    to_bridge(msg::FundingCreated{funding.txid, funding.index,
                                  *signature_by(staged_pair_.bridge_held.tx, id_.signing.pub)});
    arm_timer();
}

void Gateway::on_funding_signed(const msg::PeerFundingSigned& m)
{
    auto& g = staged_pair_.gateway_held.tx;
    if (!crypto::verify(g.txid(), m.signature, bridge_.pubkey)) return abort_open(AgentErrc::SignatureInvalid);
    attach(g, bridge_.pubkey, m.signature);
    channel_->store_commitments(0, staged_pair_);
    step_ = Step::AwaitDeviceFunding;
    to_device(msg::FundingSignature{funding_tx_});
    arm_timer();
}

void Gateway::on_device_funding(const msg::FundingSigned& m)
{
    const auto& tx = m.signed_funding_tx;
    if (tx.txid() != funding_tx_.txid()) return abort_open(AgentErrc::SignatureInvalid);
    if (!world_.chain().validate_spend(tx, world_.chain().height() + 1).ok())
        return abort_open(AgentErrc::SignatureInvalid);
    try {
        funding_txid_ = world_.chain().submit_tx(tx);
    } catch (const chain::ChainError& e) {
        incident(AgentErrc::SignatureInvalid, e.what());
        return abort_open(AgentErrc::SignatureInvalid);
    }
    funding_tx_ = tx;
    step_ = Step::AwaitDepth;
    depth_wait_blocks_ = 0;
    disarm_timer();
}

void Gateway::maybe_operational()
{
    if (!locked_sent_ || !locked_received_) return;
    phase_ = Phase::Operational;
    step_ = Step::None;
    disarm_timer();
    to_device(msg::ChannelOpened{});
}

void Gateway::abort_open(AgentErrc code)
{
    incident(code, "open aborted");
    phase_ = Phase::Idle;
    step_ = Step::None;
    disarm_timer();
    if (!funding_txid_) channel_.reset();
    to_device(msg::Rejected{std::string(to_string(code))});
}

void Gateway::on_send_payment(const msg::SendPayment& m)
{
    auto fail = [&](std::string reason) { to_device(msg::PaymentFailure{std::move(reason)}); };
    auto it = destinations_.find(m.destination);
    if (it == destinations_.end()) {
        incident(AgentErrc::UnknownDestination, m.destination);
        return fail(std::string(to_string(AgentErrc::UnknownDestination)));
    }
    const auto& params = channel_->params();
    const auto& latest = channel_->latest();
    if (m.amount <= 0) return fail(std::string(channel::to_string(channel::ChannelErrc::ZeroAmount)));
    if (m.amount > latest.iot_balance) return fail(std::string(to_string(AgentErrc::InsufficientChannelBalance)));

    const Amount fee = channel::payment_fee(params, m.amount);
    const auto hash = it->second->invoice(m.amount - fee);
    const auto height = world_.chain().height();
    ChannelState staged;
    try {
        staged = channel::apply_payment(params, latest, m.amount, hash, height + params.htlc_timeout, height,
                                        channel_->next_points());
    } catch (const ChannelError& e) {
        return fail(std::string(channel::to_string(e.code())));
    }
    phase_ = Phase::Paying;
    settling_ = false;
    payment_hash_ = hash;
    const auto& htlc = staged.pending_htlcs.back();
    to_bridge(msg::UpdateAddHtlc{htlc.value, hash, htlc.expiry, htlc.fee});
    start_update(std::move(staged));
}

void Gateway::start_update(ChannelState staged)
{
    staged_pair_ = channel::build_commitments(channel_->params(), channel_->funding(), staged);
    staged_ = std::move(staged);
    bridge_revoke_.reset();
    step_ = Step::AwaitDeviceSig;
    to_device(msg::RequestSignTx{{staged_pair_.gateway_held.tx, staged_pair_.bridge_held.tx}});
    arm_timer();
}

void Gateway::on_signed_tx(const msg::SignedTx& m)
{
    auto& g = staged_pair_.gateway_held.tx;
    auto& b = staged_pair_.bridge_held.tx;
    if (m.txs.size() != 2 || m.txs[0].txid() != g.txid() || m.txs[1].txid() != b.txid() ||
        !signed_correctly(m.txs[0], device_pub_) || !signed_correctly(m.txs[1], device_pub_))
        return abort_payment(AgentErrc::SignatureInvalid);
    attach(g, device_pub_, *signature_by(m.txs[0], device_pub_));
    attach(b, device_pub_, *signature_by(m.txs[1], device_pub_));
    g.add_signature(0, id_.signing);
    b.add_signature(0, id_.signing);
    step_ = Step::AwaitBridgeRevoke;
    to_bridge(msg::CommitmentSigned{{{device_pub_, *signature_by(b, device_pub_)},
                                     {id_.signing.pub, *signature_by(b, id_.signing.pub)}}});
    arm_timer();
}

void Gateway::on_revoke(const msg::RevokeAndAck& m)
{
    const auto& latest = channel_->latest();
    const RevocationReveal reveal{m.state_index, crypto::PrivKey{m.revocation_key}};
    if (m.state_index != latest.index || !reveal.matches(latest.revocation.bridge)) {
        incident(AgentErrc::ProtocolViolation, "bad revocation reveal");
        return abort_payment(AgentErrc::BridgeUnresponsive);
    }
    bridge_revoke_ = m;
    step_ = Step::AwaitBridgeCommit;
}

void Gateway::on_commitment_signed(const msg::CommitmentSigned& m)
{
    auto& g = staged_pair_.gateway_held.tx;
    auto sig = find_sig(m.signatures, g.txid(), bridge_.pubkey);
    if (!sig) return abort_payment(AgentErrc::SignatureInvalid);
    attach(g, bridge_.pubkey, *sig);

    const auto prev = channel_->latest().index;
    channel_->push(*staged_);
    channel_->store_commitments(channel_->latest().index, staged_pair_);
    channel_->accept_reveal(RevocationReveal{bridge_revoke_->state_index, crypto::PrivKey{bridge_revoke_->revocation_key}});
    channel_->set_counterparty_next_point(bridge_revoke_->next_revocation_point);
    const auto reveal = channel_->revoke_state(prev);
    staged_.reset();
    bridge_revoke_.reset();
    to_bridge(msg::RevokeAndAck{prev, reveal.key.seed, channel_->own_point(channel_->latest().index + 1)});

    if (!settling_) {
        step_ = Step::AwaitFulfill;
        arm_timer();
        return;
    }
    phase_ = Phase::Operational;
    step_ = Step::None;
    disarm_timer();
    to_device(msg::PaymentSuccess{});
}

void Gateway::on_fulfill(const msg::UpdateFulfillHtlc& m)
{
    ChannelState staged;
    try {
        staged = channel::settle_htlc(channel_->latest(), m.preimage, channel_->next_points());
    } catch (const ChannelError&) {
        incident(AgentErrc::ProtocolViolation, "unknown preimage");
        return;
    }
    settling_ = true;
    start_update(std::move(staged));
}

void Gateway::abort_payment(AgentErrc code)
{
    incident(code, settling_ ? "settle aborted" : "payment aborted");
    if (staged_) to_bridge(msg::UpdateFailHtlc{std::string(to_string(code))});
    staged_.reset();
    bridge_revoke_.reset();
    phase_ = Phase::Operational;
    step_ = Step::None;
    disarm_timer();
    to_device(msg::PaymentFailure{std::string(to_string(code))});
}

void Gateway::initiate_close()
{
    if (phase_ != Phase::Operational) throw AgentError(AgentErrc::ProtocolViolation, "close while not operational");
    if (!channel_->latest().pending_htlcs.empty()) throw AgentError(AgentErrc::PendingHtlcs);
    phase_ = Phase::Closing;
    step_ = Step::AwaitShutdown;
    to_bridge(msg::Shutdown{});
    arm_timer();
}

void Gateway::begin_close_signing()
{
    try {
        close_tx_ = channel::build_mutual_close(channel_->params(), channel_->funding(), channel_->latest(),
                                                world_.chain().config().onchain_fee);
    } catch (const ChannelError& e) {
        incident(AgentErrc::PendingHtlcs, std::string(channel::to_string(e.code())));
        to_bridge(msg::PeerError{std::string(channel::to_string(e.code()))});
        phase_ = Phase::Operational;
        step_ = Step::None;
        disarm_timer();
        return;
    }
    step_ = Step::AwaitDeviceCloseSig;
    to_device(msg::RequestSignTx{{close_tx_}});
    arm_timer();
}

void Gateway::on_closing_signed(const msg::ClosingSigned& m)
{
    auto sig = find_sig(m.signatures, close_tx_.txid(), bridge_.pubkey);
    if (!sig) {
        incident(AgentErrc::SignatureInvalid, "closing_signed");
        return;
    }
    attach(close_tx_, bridge_.pubkey, *sig);
    try {
        close_txid_ = world_.chain().submit_tx(close_tx_);
    } catch (const chain::ChainError& e) {
        incident(AgentErrc::SignatureInvalid, e.what());
        return;
    }
    step_ = Step::AwaitCloseDepth;
    disarm_timer();
}

void Gateway::on_timer(std::uint64_t tag)
{
    if (tag != timer_tag_) return;
    switch (phase_) {
    case Phase::Opening:
        if (step_ == Step::AwaitAccept) return abort_open(AgentErrc::BridgeRejected);
        if (step_ == Step::AwaitDeviceFunding) return abort_open(AgentErrc::SignatureInvalid);
        if (step_ == Step::AwaitDepth) return abort_open(AgentErrc::BridgeUnresponsive);
        return abort_open(AgentErrc::BridgeUnresponsive);
    case Phase::Paying:
        return abort_payment(step_ == Step::AwaitDeviceSig ? AgentErrc::DeviceDeclinedSignature
                                                           : AgentErrc::BridgeUnresponsive);
    case Phase::Closing:
        incident(AgentErrc::BridgeUnresponsive, "close");
        to_device(msg::Rejected{std::string(to_string(AgentErrc::BridgeUnresponsive))});
        phase_ = Phase::Operational;
        step_ = Step::None;
        return;
    default: return;
    }
}

void Gateway::on_block(std::uint32_t)
{
    auto& chain = world_.chain();
    if (phase_ == Phase::Opening && step_ == Step::AwaitDepth && !locked_sent_) {
        ++depth_wait_blocks_;
        if (chain.confirmations(*funding_txid_) >= channel_->params().confirmation_depth) {
            locked_sent_ = true;
            to_bridge(msg::FundingLocked{channel_->own_point(1)});
            arm_timer();
            maybe_operational();
        } else if (depth_wait_blocks_ > config_.max_confirmation_blocks) {
            abort_open(AgentErrc::ConfirmationTimeout);
        }
    } else if (phase_ == Phase::Closing && step_ == Step::AwaitCloseDepth) {
        if (chain.confirmations(*close_txid_) >= channel_->params().confirmation_depth) {
            phase_ = Phase::Closed;
            step_ = Step::None;
            to_device(msg::ChannelClosed{});
        }
    }
}

bool Gateway::awaiting_blocks() const
{
    return (phase_ == Phase::Opening && step_ == Step::AwaitDepth && !locked_sent_) ||
           (phase_ == Phase::Closing && step_ == Step::AwaitCloseDepth);
}

// ---------------------------------------------------------------- Bridge

Bridge::Bridge(World& world, std::string name, crypto::KeyPair signing, channel::RevocationStore revocation,
               BridgeConfig config)
    : Agent(world, std::move(name)), signing_(signing), revocation_(std::move(revocation)), config_(config)
{
    world.add(*this);
}

void Bridge::incident(AgentErrc code, const std::string& detail)
{
    incidents_.push_back({world_.now_ms(), code, detail});
}

void Bridge::send(Body body)
{
    Message m{channel_ ? channel_->channel_id() : 0, std::move(body)};
    world_.send(name_, gateway_, m.type(), encode(m));
}

void Bridge::on_receive(const std::string& from, const Bytes& wire)
{
    auto m = decode_or_null(wire);
    if (!m || is_device_facing(m->type())) {
        incident(AgentErrc::ProtocolViolation, "undecodable");
        return;
    }
    if (phase_ == Phase::Idle && m->as<msg::OpenChannel>()) gateway_ = from;
    if (from != gateway_) {
        incident(AgentErrc::ProtocolViolation, "message from " + from);
        return;
    }
    handle(*m);
}

void Bridge::handle(const Message& m)
{
    auto violation = [&] {
        incident(AgentErrc::ProtocolViolation,
                 std::string(to_string(m.type())) + " while " + std::string(to_string(phase_)));
    };

    if (const auto* o = m.as<msg::OpenChannel>()) {
        if (phase_ != Phase::Idle) return violation();
        if (config_.reject_open) {
            send(msg::PeerError{std::string(to_string(AgentErrc::BridgeRejected))});
            return;
        }
        open_ = *o;
        phase_ = Phase::Opening;
        send(msg::AcceptChannel{signing_.pub, config_.minimum_depth, revocation_.point(0)});
    } else if (const auto* fc = m.as<msg::FundingCreated>()) {
        if (phase_ != Phase::Opening || channel_) return violation();
        channel::ChannelParams params;
        params.capacity = open_->capacity;
        params.iot_pub = open_->iot_pubkey;
        params.gateway_pub = open_->funding_pubkey;
        params.bridge_pub = signing_.pub;
        params.to_self_delay = open_->to_self_delay;
        params.confirmation_depth = config_.minimum_depth;
        const chain::OutPoint funding{fc->funding_txid, fc->funding_output_index};
        try {
            channel_.emplace(params, channel::Role::Bridge, revocation_, funding, open_->first_revocation_point);
        } catch (const ChannelError&) {
            phase_ = Phase::Idle;
            send(msg::PeerError{std::string(to_string(AgentErrc::ProtocolViolation))});
            return;
        }
        auto pair = channel::build_commitments(params, funding, channel_->latest());
        if (!crypto::verify(pair.bridge_held.tx.txid(), fc->signature, params.gateway_pub)) {
            channel_.reset();
            phase_ = Phase::Idle;
            send(msg::PeerError{std::string(to_string(AgentErrc::SignatureInvalid))});
            return;
        }
        attach(pair.bridge_held.tx, params.gateway_pub, fc->signature);
        pair.bridge_held.tx.add_signature(0, signing_);
        pair.gateway_held.tx.add_signature(0, signing_);
        channel_->store_commitments(0, pair);
        funding_txid_ = fc->funding_txid;
        send(msg::PeerFundingSigned{*signature_by(pair.gateway_held.tx, signing_.pub)});
    } else if (const auto* fl = m.as<msg::FundingLocked>()) {
        if (phase_ != Phase::Opening || !channel_) return violation();
        channel_->set_counterparty_next_point(fl->next_revocation_point);
        locked_received_ = true;
        if (locked_sent_) phase_ = Phase::Operational;
    } else if (const auto* add = m.as<msg::UpdateAddHtlc>()) {
        if (phase_ != Phase::Operational || staged_) return violation();
        try {
            staged_ = channel::add_htlc(channel_->latest(),
                                        channel::Htlc{add->value, add->gateway_fee, add->payment_hash, add->expiry,
                                                      channel::HtlcDirection::Outgoing},
                                        world_.chain().height(), channel_->next_points());
        } catch (const ChannelError& e) {
            incident(AgentErrc::ProtocolViolation, std::string(channel::to_string(e.code())));
            send(msg::PeerError{std::string(channel::to_string(e.code()))});
        }
    } else if (m.as<msg::UpdateFailHtlc>()) {
        staged_.reset();
    } else if (const auto* cs = m.as<msg::CommitmentSigned>()) {
        if (phase_ != Phase::Operational || !staged_) return violation();
        on_commitment_signed(*cs);
    } else if (const auto* ra = m.as<msg::RevokeAndAck>()) {
        if (phase_ != Phase::Operational) return violation();
        on_revoke(*ra);
    } else if (m.as<msg::Shutdown>()) {
        if (phase_ == Phase::Closing && shutdown_sent_) return;
        if (phase_ != Phase::Operational) return violation();
        if (staged_ || !channel_->latest().pending_htlcs.empty()) {
            send(msg::PeerError{std::string(to_string(AgentErrc::PendingHtlcs))});
            return;
        }
        phase_ = Phase::Closing;
        shutdown_sent_ = true;
        send(msg::Shutdown{});
    } else if (const auto* cl = m.as<msg::ClosingSigned>()) {
        if (phase_ != Phase::Closing) return violation();
        const auto& p = channel_->params();
        auto tx = channel::build_mutual_close(p, channel_->funding(), channel_->latest(),
                                              world_.chain().config().onchain_fee);
        const auto id = tx.txid();
        auto iot = find_sig(cl->signatures, id, p.iot_pub);
        auto gw = find_sig(cl->signatures, id, p.gateway_pub);
        if (!iot || !gw) {
            incident(AgentErrc::SignatureInvalid, "closing_signed");
            send(msg::PeerError{std::string(to_string(AgentErrc::SignatureInvalid))});
            return;
        }
        tx.add_signature(0, signing_);
        phase_ = Phase::Closed;
        send(msg::ClosingSigned{{{signing_.pub, *signature_by(tx, signing_.pub)}}});
    } else if (m.as<msg::PeerError>()) {
        staged_.reset();
        if (phase_ == Phase::Closing) {
            phase_ = Phase::Operational;
            shutdown_sent_ = false;
        }
    } else {
        violation();
    }
}

void Bridge::on_commitment_signed(const msg::CommitmentSigned& m)
{
    const auto& p = channel_->params();
    auto pair = channel::build_commitments(p, channel_->funding(), *staged_);
    auto& b = pair.bridge_held.tx;
    const auto id = b.txid();
    auto iot = find_sig(m.signatures, id, p.iot_pub);
    auto gw = find_sig(m.signatures, id, p.gateway_pub);
    if (!iot || !gw) {
        incident(AgentErrc::SignatureInvalid, "commitment_signed");
        staged_.reset();
        send(msg::PeerError{std::string(to_string(AgentErrc::SignatureInvalid))});
        return;
    }
    if (config_.stall_updates) return;
    attach(b, p.iot_pub, *iot);
    attach(b, p.gateway_pub, *gw);
    b.add_signature(0, signing_);
    pair.gateway_held.tx.add_signature(0, signing_);

    const auto prev = channel_->latest().index;
    channel_->push(*staged_);
    staged_.reset();
    channel_->store_commitments(channel_->latest().index, pair);
    const auto reveal = channel_->revoke_state(prev);
    send(msg::RevokeAndAck{prev, reveal.key.seed, channel_->own_point(channel_->latest().index + 1)});
    send(msg::CommitmentSigned{{{signing_.pub, *signature_by(pair.gateway_held.tx, signing_.pub)}}});
}

void Bridge::on_revoke(const msg::RevokeAndAck& m)
{
    try {
        channel_->accept_reveal(RevocationReveal{m.state_index, crypto::PrivKey{m.revocation_key}});
    } catch (const ChannelError& e) {
        incident(AgentErrc::ProtocolViolation, std::string(channel::to_string(e.code())));
        return;
    }
    channel_->set_counterparty_next_point(m.next_revocation_point);
    forward_htlcs();
}

void Bridge::forward_htlcs()
{
    for (const auto& h : channel_->latest().pending_htlcs) {
        if (forwarded_.contains(h.payment_hash)) continue;
        auto it = std::find_if(destinations_.begin(), destinations_.end(),
                               [&](const Destination* d) { return d->knows(h.payment_hash); });
        forwarded_.insert(h.payment_hash);
        if (it == destinations_.end()) {
            incident(AgentErrc::UnknownDestination, to_hex(h.payment_hash));
            continue;
        }
        auto preimage = (*it)->claim(h.payment_hash, h.value);
        if (!preimage) continue;
        preimages_.push_back(*preimage);
        staged_ = channel::settle_htlc(channel_->latest(), *preimage, channel_->next_points());
        send(msg::UpdateFulfillHtlc{*preimage});
        return;
    }
}

void Bridge::on_block(std::uint32_t)
{
    if (phase_ != Phase::Opening || !funding_txid_ || locked_sent_) return;
    const auto& chain = world_.chain();
    if (chain.confirmations(*funding_txid_) < config_.minimum_depth) return;
    const auto* tx = chain.find_tx(*funding_txid_);
    const auto& f = channel_->funding();
    if (tx == nullptr || f.index >= tx->outputs.size() || tx->outputs[f.index].value != channel_->params().capacity ||
        tx->outputs[f.index].condition.describe() != channel_->params().funding_condition().describe()) {
        incident(AgentErrc::ProtocolViolation, "funding output mismatch");
        return;
    }
    locked_sent_ = true;
    send(msg::FundingLocked{channel_->own_point(1)});
    if (locked_received_) phase_ = Phase::Operational;
}

bool Bridge::awaiting_blocks() const { return phase_ == Phase::Opening && funding_txid_ && !locked_sent_; }

void Bridge::initiate_close()
{
    if (phase_ != Phase::Operational) throw AgentError(AgentErrc::ProtocolViolation, "close while not operational");
    if (staged_ || !channel_->latest().pending_htlcs.empty()) throw AgentError(AgentErrc::PendingHtlcs);
    phase_ = Phase::Closing;
    shutdown_sent_ = true;
    send(msg::Shutdown{});
}

} // namespace iotln::agents

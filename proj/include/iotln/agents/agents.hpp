// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_AGENTS_AGENTS_HPP
#define IOTLN_AGENTS_AGENTS_HPP

#include <iotln/agents/world.hpp>
#include <iotln/channel/channel.hpp>
#include <iotln/crypto/envelope.hpp>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace iotln::agents {

enum class AgentErrc {
    ProtocolViolation,
    AuthFailure,
    GatewayRejected,
    BridgeRejected,
    SignatureInvalid,
    ConfirmationTimeout,
    InsufficientChannelBalance,
    DeviceDeclinedSignature,
    BridgeUnresponsive,
    PendingHtlcs,
    EmptyDirectory,
    UnknownDestination,
};

std::string_view to_string(AgentErrc code);
std::optional<AgentErrc> agent_errc_from_string(std::string_view s);

class AgentError : public std::runtime_error {
public:
    explicit AgentError(AgentErrc code, const std::string& detail = {});
    AgentErrc code() const noexcept { return code_; }

private:
    AgentErrc code_;
};

/// An error an agent recorded instead of acting on a message.
struct Incident {
    std::uint64_t time_ms = 0;
    AgentErrc code{};
    std::string detail;
};

struct DirectoryEntry {
    std::string node_id;
    crypto::PubKey pubkey{};
    std::uint32_t active_channels = 0;
};

/// Most active channels wins; ties go to the smallest node id.
const DirectoryEntry& select_bridge(std::span<const DirectoryEntry> directory);

/// Payee stub: issues invoices and releases the preimage when paid.
class Destination {
public:
    Destination(std::string name, crypto::Rng rng) : name_(std::move(name)), rng_(std::move(rng)) {}

    const std::string& name() const { return name_; }
    crypto::Hash256 invoice(Amount amount);
    bool knows(const crypto::Hash256& hash) const { return invoices_.contains(hash); }
    /// Releases the preimage if `value` covers the invoice, once.
    std::optional<crypto::Preimage> claim(const crypto::Hash256& hash, Amount value);
    Amount received() const { return received_; }
    std::size_t payments() const { return payments_; }

private:
    struct Invoice {
        crypto::PaymentSecret secret;
        Amount amount = 0;
        bool paid = false;
    };
    std::string name_;
    crypto::Rng rng_;
    std::map<crypto::Hash256, Invoice> invoices_;
    Amount received_ = 0;
    std::size_t payments_ = 0;
};

struct DeviceConfig {
    std::string default_destination = "destination";
    std::uint64_t freshness_window_ms = crypto::kDefaultFreshnessMs;
    /// Test hooks for the withheld-consent paths.
    bool withhold_funding_signature = false;
    bool decline_signing = false;
};

/*
 * IoT device. Persists only its keys, certificate and channel id; never
 * stores a transaction. Everything it sends is sealed for the gateway.
 */
class Device : public Agent {
public:
    struct Keys {
        crypto::KeyPair signing;
        crypto::EncryptionKeyPair encryption;
        crypto::Certificate certificate;
    };

    Device(World& world, std::string name, Keys keys, std::string gateway, crypto::PubKey gateway_enc_pub,
           DeviceConfig config = {});

    void request_open(Amount capacity);
    void request_payment(Amount amount, std::optional<std::string> destination = std::nullopt);
    void request_close();

    std::uint64_t channel_id() const { return channel_id_; }
    const crypto::PubKey& pubkey() const { return keys_.signing.pub; }
    DeviceConfig& config() { return config_; }

    /// Last terminal reply from the gateway, cleared by each request.
    struct Outcome {
        MsgType type{};
        std::string reason;
    };
    const std::optional<Outcome>& outcome() const { return outcome_; }
    const std::vector<Incident>& incidents() const { return incidents_; }
    /// Sealed bytes of every message this device sent, in order.
    const std::vector<Bytes>& sent_envelopes() const { return sent_; }

    /// Everything the device keeps across power cycles.
    nlohmann::json persistent_state() const;

    void on_receive(const std::string& from, const Bytes& wire) override;

private:
    void send(Body body);
    void handle(const Message& m);

    Keys keys_;
    std::string gateway_;
    crypto::PubKey gateway_enc_pub_;
    DeviceConfig config_;
    crypto::Rng rng_;
    crypto::SessionKeys session_;
    crypto::ReplayGuard replay_;
    std::uint64_t channel_id_ = 0;
    Amount requested_capacity_ = 0;
    std::optional<Outcome> outcome_;
    std::vector<Incident> incidents_;
    std::vector<Bytes> sent_;
};

struct GatewayConfig {
    std::uint32_t to_self_delay = 6;
    std::uint32_t htlc_timeout = 40;
    std::uint32_t gateway_fee_percent = 10;
    std::uint32_t confirmation_depth = 3;
    std::uint64_t peer_timeout_ms = 5'000;
    std::uint32_t max_confirmation_blocks = 50;
    std::uint64_t freshness_window_ms = crypto::kDefaultFreshnessMs;
};

enum class Phase { Idle, Opening, Operational, Paying, Closing, Closed };
std::string_view to_string(Phase p);

/*
 * LN gateway for one device. Runs the chain-facing side of every flow and
 * holds the gateway's channel view. State changes for a message happen
 * only after the whole message has been checked.
 */
class Gateway : public Agent {
public:
    struct Identity {
        crypto::KeyPair signing;
        crypto::EncryptionKeyPair encryption;
        channel::RevocationStore revocation;
    };

    Gateway(World& world, std::string name, Identity id, crypto::PubKey device_issuer,
            std::string device, crypto::PubKey device_enc_pub, std::vector<DirectoryEntry> directory,
            GatewayConfig config = {});

    void add_destination(Destination& d) { destinations_[d.name()] = &d; }
    /// Gateway-initiated cooperative close.
    void initiate_close();

    Phase phase() const { return phase_; }
    const std::optional<channel::Channel>& channel() const { return channel_; }
    channel::Channel* mutable_channel() { return channel_ ? &*channel_ : nullptr; }
    const crypto::KeyPair& signing() const { return id_.signing; }
    const std::string& bridge_name() const { return bridge_.node_id; }
    const std::vector<Incident>& incidents() const { return incidents_; }
    std::optional<chain::Txid> funding_txid() const { return funding_txid_; }
    std::optional<chain::Txid> close_txid() const { return close_txid_; }
    const GatewayConfig& config() const { return config_; }

    void on_receive(const std::string& from, const Bytes& wire) override;
    void on_timer(std::uint64_t tag) override;
    void on_block(std::uint32_t height) override;
    bool awaiting_blocks() const override;

private:
    enum class Step {
        None,
        AwaitAccept,
        AwaitFundingSigned,
        AwaitDeviceFunding,
        AwaitDepth,
        AwaitDeviceSig,
        AwaitBridgeRevoke,
        AwaitBridgeCommit,
        AwaitFulfill,
        AwaitShutdown,
        AwaitDeviceCloseSig,
        AwaitClosingSigned,
        AwaitCloseDepth,
    };

    void handle_device(const Message& m);
    void handle_peer(const Message& m);
    void to_device(Body body);
    void to_bridge(Body body);
    void incident(AgentErrc code, const std::string& detail);
    void arm_timer();
    void disarm_timer() { ++timer_tag_; }

    void on_open_request(const crypto::PubKey& device_pub, const msg::OpenChannelRequest& m);
    void on_accept(const msg::AcceptChannel& m);
    void on_funding_signed(const msg::PeerFundingSigned& m);
    void on_device_funding(const msg::FundingSigned& m);
    void on_send_payment(const msg::SendPayment& m);
    void on_signed_tx(const msg::SignedTx& m);
    void on_revoke(const msg::RevokeAndAck& m);
    void on_commitment_signed(const msg::CommitmentSigned& m);
    void on_fulfill(const msg::UpdateFulfillHtlc& m);
    void start_update(channel::ChannelState staged);
    void begin_close_signing();
    void on_closing_signed(const msg::ClosingSigned& m);
    void maybe_operational();
    void abort_open(AgentErrc code);
    void abort_payment(AgentErrc code);

    Identity id_;
    crypto::PubKey device_issuer_;
    std::string device_;
    crypto::PubKey device_enc_pub_;
    std::vector<DirectoryEntry> directory_;
    GatewayConfig config_;
    crypto::Rng rng_;
    crypto::ReplayGuard replay_;
    std::map<std::string, Destination*> destinations_;
    std::optional<crypto::SessionKeys> session_;

    Phase phase_ = Phase::Idle;
    Step step_ = Step::None;
    std::uint64_t timer_tag_ = 0;
    std::vector<Incident> incidents_;

    DirectoryEntry bridge_;
    crypto::PubKey device_pub_{};
    Amount capacity_ = 0;
    chain::Transaction funding_tx_;
    std::optional<chain::Txid> funding_txid_;
    std::uint32_t depth_wait_blocks_ = 0;
    bool locked_sent_ = false;
    bool locked_received_ = false;
    std::optional<channel::Channel> channel_;

    // In-flight update.
    std::optional<channel::ChannelState> staged_;
    channel::CommitmentPair staged_pair_;
    std::optional<msg::RevokeAndAck> bridge_revoke_;
    bool settling_ = false;
    std::optional<crypto::Hash256> payment_hash_;

    chain::Transaction close_tx_;
    std::optional<chain::Txid> close_txid_;
};

struct BridgeConfig {
    std::uint32_t minimum_depth = 3;
    bool reject_open = false;
    /// Test hook: never answer commitment_signed.
    bool stall_updates = false;
};

/// Bridge LN node: the channel counterparty, holding a replica of the state.
class Bridge : public Agent {
public:
    Bridge(World& world, std::string name, crypto::KeyPair signing, channel::RevocationStore revocation,
           BridgeConfig config = {});

    void add_destination(Destination& d) { destinations_.push_back(&d); }
    /// Bridge-initiated cooperative close.
    void initiate_close();

    const crypto::KeyPair& signing() const { return signing_; }
    Phase phase() const { return phase_; }
    const std::optional<channel::Channel>& channel() const { return channel_; }
    channel::Channel* mutable_channel() { return channel_ ? &*channel_ : nullptr; }
    const std::vector<Incident>& incidents() const { return incidents_; }
    BridgeConfig& config() { return config_; }
    /// Preimages learned from destinations, in claim order.
    const std::vector<crypto::Preimage>& known_preimages() const { return preimages_; }

    void on_receive(const std::string& from, const Bytes& wire) override;
    void on_block(std::uint32_t height) override;
    bool awaiting_blocks() const override;

private:
    void send(Body body);
    void incident(AgentErrc code, const std::string& detail);
    void handle(const Message& m);
    void on_commitment_signed(const msg::CommitmentSigned& m);
    void on_revoke(const msg::RevokeAndAck& m);
    void forward_htlcs();

    crypto::KeyPair signing_;
    channel::RevocationStore revocation_;
    BridgeConfig config_;
    std::vector<Destination*> destinations_;
    std::string gateway_;
    Phase phase_ = Phase::Idle;
    std::vector<Incident> incidents_;

    std::optional<msg::OpenChannel> open_;
    std::optional<channel::Channel> channel_;
    std::optional<chain::Txid> funding_txid_;
    bool locked_sent_ = false;
    bool locked_received_ = false;
    std::optional<channel::ChannelState> staged_;
    std::set<crypto::Hash256> forwarded_;
    std::vector<crypto::Preimage> preimages_;
    bool shutdown_sent_ = false;
};

} // namespace iotln::agents

#endif // IOTLN_AGENTS_AGENTS_HPP

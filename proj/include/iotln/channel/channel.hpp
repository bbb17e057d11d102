// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_CHANNEL_CHANNEL_HPP
#define IOTLN_CHANNEL_CHANNEL_HPP

#include <iotln/chain/transaction.hpp>
#include <iotln/channel/revocation.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace iotln::channel {

using chain::OutPoint;
using chain::Transaction;
using crypto::Hash256;
using crypto::PubKey;

enum class ChannelErrc {
    InvalidParams,
    InsufficientFunds,
    ConservationViolation,
    InsufficientChannelBalance,
    ZeroAmount,
    InvalidExpiry,
    UnknownPreimage,
    NotExpired,
    CannotRevokeLatest,
    PendingHtlcs,
    UnknownState,
    BadRevocationReveal,
};

std::string_view to_string(ChannelErrc code);

class ChannelError : public std::runtime_error {
public:
    explicit ChannelError(ChannelErrc code);
    ChannelErrc code() const noexcept { return code_; }

private:
    ChannelErrc code_;
};

/// Static parameters of one 3-of-3 channel. The timelock (to_self_delay)
/// and the service fee percent are distinct quantities.
struct ChannelParams {
    Amount capacity = 0;
    PubKey iot_pub{};
    PubKey gateway_pub{};
    PubKey bridge_pub{};
    std::uint32_t to_self_delay = 6;
    /// HTLC expiry = creation height + htlc_timeout.
    std::uint32_t htlc_timeout = 40;
    std::uint32_t gateway_fee_percent = 10;
    std::uint32_t confirmation_depth = 3;

    /// Throws ChannelError(InvalidParams).
    void validate() const;
    chain::SpendCondition funding_condition() const;
};

enum class HtlcDirection { Outgoing };

struct Htlc {
    Amount value = 0;
    /// Gateway fee charged for this payment; refunded if the HTLC times out.
    Amount fee = 0;
    Hash256 payment_hash{};
    std::uint32_t expiry = 0;
    HtlcDirection direction = HtlcDirection::Outgoing;

    bool operator==(const Htlc&) const = default;
};

/// Revocation public keys for one state: one per broadcasting party.
struct RevocationPoints {
    PubKey gateway{};
    PubKey bridge{};

    bool operator==(const RevocationPoints&) const = default;
};

struct ChannelState {
    std::uint64_t index = 0;
    Amount iot_balance = 0;
    Amount bridge_balance = 0;
    Amount gateway_fee_accrued = 0;
    std::vector<Htlc> pending_htlcs;
    RevocationPoints revocation;

    Amount htlc_total() const;
    Amount total() const { return iot_balance + bridge_balance + gateway_fee_accrued + htlc_total(); }

    bool operator==(const ChannelState&) const = default;
};

/// floor(amount * percent / 100): never over-charges the device.
Amount payment_fee(const ChannelParams& params, Amount amount);

ChannelState initial_state(const ChannelParams& params, const RevocationPoints& points);

/// Moves `amount` out of the device balance: fee to the gateway, the rest
/// into a new outgoing HTLC.
ChannelState apply_payment(const ChannelParams& params, const ChannelState& state, Amount amount,
                           const Hash256& payment_hash, std::uint32_t expiry, std::uint32_t current_height,
                           const RevocationPoints& next);

/// Lower-level form used by a replica that is told the split: value plus
/// fee leave the device balance.
ChannelState add_htlc(const ChannelState& state, const Htlc& htlc, std::uint32_t current_height,
                      const RevocationPoints& next);

ChannelState settle_htlc(const ChannelState& state, const crypto::Preimage& preimage, const RevocationPoints& next);

/// Refunds every HTLC with expiry <= current_height, including its fee.
ChannelState timeout_htlc(const ChannelState& state, std::uint32_t current_height, const RevocationPoints& next);

/// Funding: capacity under 3-of-3, change back to the device wallet key.
Transaction build_funding_tx(const ChannelParams& params, const OutPoint& wallet_outpoint, Amount wallet_value,
                             Amount onchain_fee);

inline constexpr std::uint32_t kFundingOutputIndex = 0;

enum class OutputRole { ToIot, ToBridge, Htlc, GatewayFee };

std::string_view to_string(OutputRole role);

struct CommitmentTx {
    Transaction tx;
    std::vector<OutputRole> roles;

    /// Index of the first output with `role`, if present.
    std::optional<std::uint32_t> find(OutputRole role) const;
};

struct CommitmentPair {
    CommitmentTx gateway_held;
    CommitmentTx bridge_held;
};

/*
 * Gateway-held commitment (the broadcaster's revocation key is the
 * gateway's):
 *   IoT    or(after_blocks(k, iot), revocation(gw_rev))
 *   bridge bridge
 *   HTLC   or(hashlock(H, bridge), after_height(w, iot), revocation(gw_rev))
 *   fee    or(after_blocks(k, gateway), revocation(gw_rev))
 *
 * Bridge-held commitment mirrors it with the bridge's revocation key:
 *   IoT    iot
 *   bridge or(after_blocks(k, bridge), revocation(br_rev))
 *   HTLC   or(hashlock(H, after_blocks(k, bridge)), after_height(w, iot), revocation(br_rev))
 *   fee    or(gateway, revocation(br_rev))
 *
 * Zero-value outputs are omitted. No on-chain fee on commitments.
 */
CommitmentPair build_commitments(const ChannelParams& params, const OutPoint& funding, const ChannelState& state);

/// Cooperative close with no timelocks. The device, as funder, pays the
/// on-chain fee out of its own output.
Transaction build_mutual_close(const ChannelParams& params, const OutPoint& funding, const ChannelState& state,
                               Amount onchain_fee);

enum class Role { Gateway, Bridge };

/// One party's view of a channel: the state history, the commitments it
/// holds signatures for, its own revocation secrets, and the counterparty's
/// revealed secrets. All mutations go through the owning agent.
class Channel {
public:
    Channel(ChannelParams params, Role role, RevocationStore own_revocation, OutPoint funding,
            const PubKey& counterparty_first_point);

    const ChannelParams& params() const { return params_; }
    Role role() const { return role_; }
    const OutPoint& funding() const { return funding_; }
    std::uint64_t channel_id() const;

    const ChannelState& latest() const { return states_.back(); }
    const std::vector<ChannelState>& history() const { return states_; }
    const ChannelState& state(std::uint64_t index) const;

    /// Revocation points the next state must carry.
    RevocationPoints next_points() const;
    void set_counterparty_next_point(const PubKey& point) { counterparty_next_ = point; }
    const PubKey& counterparty_next_point() const { return counterparty_next_; }
    PubKey own_point(std::uint64_t index) const { return own_revocation_.point(index); }

    /// Appends the next state; index must be latest().index + 1 and
    /// conservation must hold.
    void push(ChannelState next);

    /// Stores the (possibly partially) signed commitments for a state.
    void store_commitments(std::uint64_t index, CommitmentPair pair);
    const CommitmentPair* commitments(std::uint64_t index) const;

    /// Reveals this party's revocation secret for a superseded state.
    RevocationReveal revoke_state(std::uint64_t index);
    bool is_revoked(std::uint64_t index) const { return own_revocation_.is_revoked(index); }

    /// Verifies and stores the counterparty's secret for one of its states.
    void accept_reveal(const RevocationReveal& reveal);
    const std::map<std::uint64_t, RevocationReveal>& counterparty_reveals() const { return reveals_; }

    nlohmann::json to_json() const;
    static Channel from_json(const nlohmann::json& j);

private:
    PubKey counterparty_point(const ChannelState& s) const;

    ChannelParams params_;
    Role role_;
    RevocationStore own_revocation_;
    OutPoint funding_;
    PubKey counterparty_next_{};
    std::vector<ChannelState> states_;
    std::map<std::uint64_t, CommitmentPair> commitments_;
    std::map<std::uint64_t, RevocationReveal> reveals_;
};

std::uint64_t channel_id_for(const OutPoint& funding);

} // namespace iotln::channel

#endif // IOTLN_CHANNEL_CHANNEL_HPP

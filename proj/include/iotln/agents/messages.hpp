// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_AGENTS_MESSAGES_HPP
#define IOTLN_AGENTS_MESSAGES_HPP

#include <iotln/amount.hpp>
#include <iotln/bytes.hpp>
#include <iotln/chain/transaction.hpp>
#include <iotln/crypto/preimage.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace iotln::agents {

/*
 * Wire encoding shared by every message:
 *
 *   [type:1][channel_id:8][field]*      field = [len:2][bytes]
 *
 * Fields appear in the order they are declared below. Amounts and heights
 * are big-endian integers of their natural width, keys and hashes are raw,
 * transactions use Transaction::serialize, lists are [count:2][len:4 item]*,
 * strings are raw UTF-8. channel_id is zero until the funding outpoint is
 * known. Device-facing types (below 0x20) only ever travel sealed.
 */
enum class MsgType : std::uint8_t {
    OpenChannelRequest = 0x01,
    OpenChannelAccepted = 0x02,
    FundingSignature = 0x03,
    FundingSigned = 0x04,
    ChannelOpened = 0x05,
    SendPayment = 0x06,
    RequestSignTx = 0x07,
    SignedTx = 0x08,
    PaymentSuccess = 0x09,
    PaymentFailure = 0x0a,
    CloseChannelRequest = 0x0b,
    ChannelClosed = 0x0c,
    Rejected = 0x0d,

    OpenChannel = 0x20,
    AcceptChannel = 0x21,
    FundingCreated = 0x22,
    PeerFundingSigned = 0x23,
    FundingLocked = 0x24,
    UpdateAddHtlc = 0x25,
    CommitmentSigned = 0x26,
    RevokeAndAck = 0x27,
    UpdateFulfillHtlc = 0x28,
    UpdateFailHtlc = 0x29,
    Shutdown = 0x2a,
    ClosingSigned = 0x2b,
    PeerError = 0x2c,
};

std::string_view to_string(MsgType type);
bool is_device_facing(MsgType type);

namespace msg {

struct OpenChannelRequest {
    static constexpr MsgType kType = MsgType::OpenChannelRequest;
    Amount capacity = 0;
};
struct OpenChannelAccepted {
    static constexpr MsgType kType = MsgType::OpenChannelAccepted;
};
struct FundingSignature {
    static constexpr MsgType kType = MsgType::FundingSignature;
    chain::Transaction unsigned_funding_tx;
};
struct FundingSigned {
    static constexpr MsgType kType = MsgType::FundingSigned;
    chain::Transaction signed_funding_tx;
};
struct ChannelOpened {
    static constexpr MsgType kType = MsgType::ChannelOpened;
};
struct SendPayment {
    static constexpr MsgType kType = MsgType::SendPayment;
    Amount amount = 0;
    std::string destination;
};
/// One tx for a close, the gateway-held then bridge-held commitment otherwise.
struct RequestSignTx {
    static constexpr MsgType kType = MsgType::RequestSignTx;
    std::vector<chain::Transaction> txs;
};
struct SignedTx {
    static constexpr MsgType kType = MsgType::SignedTx;
    std::vector<chain::Transaction> txs;
};
struct PaymentSuccess {
    static constexpr MsgType kType = MsgType::PaymentSuccess;
};
struct PaymentFailure {
    static constexpr MsgType kType = MsgType::PaymentFailure;
    std::string reason;
};
struct CloseChannelRequest {
    static constexpr MsgType kType = MsgType::CloseChannelRequest;
};
struct ChannelClosed {
    static constexpr MsgType kType = MsgType::ChannelClosed;
};
struct Rejected {
    static constexpr MsgType kType = MsgType::Rejected;
    std::string reason;
};

struct OpenChannel {
    static constexpr MsgType kType = MsgType::OpenChannel;
    crypto::PubKey funding_pubkey{};
    crypto::PubKey iot_pubkey{};
    Amount capacity = 0;
    std::uint32_t to_self_delay = 0;
    crypto::PubKey first_revocation_point{};
};
struct AcceptChannel {
    static constexpr MsgType kType = MsgType::AcceptChannel;
    crypto::PubKey funding_pubkey{};
    std::uint32_t minimum_depth = 0;
    crypto::PubKey first_revocation_point{};
};
struct FundingCreated {
    static constexpr MsgType kType = MsgType::FundingCreated;
    chain::Txid funding_txid{};
    std::uint32_t funding_output_index = 0;
    crypto::Signature signature{};
};
struct PeerFundingSigned {
    static constexpr MsgType kType = MsgType::PeerFundingSigned;
    crypto::Signature signature{};
};
struct FundingLocked {
    static constexpr MsgType kType = MsgType::FundingLocked;
    crypto::PubKey next_revocation_point{};
};
struct UpdateAddHtlc {
    static constexpr MsgType kType = MsgType::UpdateAddHtlc;
    Amount value = 0;
    crypto::Hash256 payment_hash{};
    std::uint32_t expiry = 0;
    Amount gateway_fee = 0;
};
struct CommitmentSigned {
    static constexpr MsgType kType = MsgType::CommitmentSigned;
    std::vector<chain::KeySignature> signatures;
};
struct RevokeAndAck {
    static constexpr MsgType kType = MsgType::RevokeAndAck;
    std::uint64_t state_index = 0;
    std::array<std::uint8_t, 32> revocation_key{};
    crypto::PubKey next_revocation_point{};
};
struct UpdateFulfillHtlc {
    static constexpr MsgType kType = MsgType::UpdateFulfillHtlc;
    crypto::Preimage preimage{};
};
struct UpdateFailHtlc {
    static constexpr MsgType kType = MsgType::UpdateFailHtlc;
    std::string reason;
};
struct Shutdown {
    static constexpr MsgType kType = MsgType::Shutdown;
};
struct ClosingSigned {
    static constexpr MsgType kType = MsgType::ClosingSigned;
    std::vector<chain::KeySignature> signatures;
};
struct PeerError {
    static constexpr MsgType kType = MsgType::PeerError;
    std::string reason;
};

} // namespace msg

using Body = std::variant<msg::OpenChannelRequest, msg::OpenChannelAccepted, msg::FundingSignature,
                          msg::FundingSigned, msg::ChannelOpened, msg::SendPayment, msg::RequestSignTx,
                          msg::SignedTx, msg::PaymentSuccess, msg::PaymentFailure, msg::CloseChannelRequest,
                          msg::ChannelClosed, msg::Rejected, msg::OpenChannel, msg::AcceptChannel,
                          msg::FundingCreated, msg::PeerFundingSigned, msg::FundingLocked, msg::UpdateAddHtlc,
                          msg::CommitmentSigned, msg::RevokeAndAck, msg::UpdateFulfillHtlc, msg::UpdateFailHtlc,
                          msg::Shutdown, msg::ClosingSigned, msg::PeerError>;

struct Message {
    std::uint64_t channel_id = 0;
    Body body;

    MsgType type() const;
    template <typename T>
    const T* as() const { return std::get_if<T>(&body); }
};

Bytes encode(const Message& m);
/// Throws DecodeError on unknown types, short input or trailing bytes.
Message decode(ByteView wire);

} // namespace iotln::agents

#endif // IOTLN_AGENTS_MESSAGES_HPP

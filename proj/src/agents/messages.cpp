// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/agents/messages.hpp>

#include <limits>

namespace iotln::agents {

std::string_view to_string(MsgType type)
{
    switch (type) {
    case MsgType::OpenChannelRequest: return "OpenChannelRequest";
    case MsgType::OpenChannelAccepted: return "OpenChannelAccepted";
    case MsgType::FundingSignature: return "FundingSignature";
    case MsgType::FundingSigned: return "FundingSigned";
    case MsgType::ChannelOpened: return "ChannelOpened";
    case MsgType::SendPayment: return "SendPayment";
    case MsgType::RequestSignTx: return "RequestSignTx";
    case MsgType::SignedTx: return "SignedTx";
    case MsgType::PaymentSuccess: return "PaymentSuccess";
    case MsgType::PaymentFailure: return "PaymentFailure";
    case MsgType::CloseChannelRequest: return "CloseChannelRequest";
    case MsgType::ChannelClosed: return "ChannelClosed";
    case MsgType::Rejected: return "Rejected";
    case MsgType::OpenChannel: return "open_channel";
    case MsgType::AcceptChannel: return "accept_channel";
    case MsgType::FundingCreated: return "funding_created";
    case MsgType::PeerFundingSigned: return "funding_signed";
    case MsgType::FundingLocked: return "funding_locked";
    case MsgType::UpdateAddHtlc: return "update_add_htlc";
    case MsgType::CommitmentSigned: return "commitment_signed";
    case MsgType::RevokeAndAck: return "revoke_and_ack";
    case MsgType::UpdateFulfillHtlc: return "update_fulfill_htlc";
    case MsgType::UpdateFailHtlc: return "update_fail_htlc";
    case MsgType::Shutdown: return "shutdown";
    case MsgType::ClosingSigned: return "closing_signed";
    case MsgType::PeerError: return "error";
    }
    return "unknown";
}

bool is_device_facing(MsgType type) { return static_cast<std::uint8_t>(type) < 0x20; }

MsgType Message::type() const
{
    return std::visit([](const auto& m) { return std::decay_t<decltype(m)>::kType; }, body);
}

namespace {

class FieldOut {
public:
    explicit FieldOut(ByteWriter& w) : w_(w) {}

    void operator()(const Amount& v) { put([&](ByteWriter& f) { f.i64(v); }); }
    void operator()(const std::uint32_t& v) { put([&](ByteWriter& f) { f.u32(v); }); }
    void operator()(const std::uint64_t& v) { put([&](ByteWriter& f) { f.u64(v); }); }
    template <std::size_t N>
    void operator()(const std::array<std::uint8_t, N>& v)
    {
        put([&](ByteWriter& f) { f.raw(v); });
    }
    void operator()(const std::string& v) { put([&](ByteWriter& f) { f.raw(as_bytes(v)); }); }
    void operator()(const chain::Transaction& tx) { put([&](ByteWriter& f) { f.raw(tx.serialize()); }); }
    void operator()(const std::vector<chain::Transaction>& txs)
    {
        put([&](ByteWriter& f) {
            f.u16(count(txs.size()));
            for (const auto& tx : txs) f.var(tx.serialize());
        });
    }
    void operator()(const std::vector<chain::KeySignature>& sigs)
    {
        put([&](ByteWriter& f) {
            f.u16(count(sigs.size()));
            for (const auto& s : sigs) {
                f.raw(s.key);
                f.raw(s.sig);
            }
        });
    }

private:
    static std::uint16_t count(std::size_t n)
    {
        if (n > std::numeric_limits<std::uint16_t>::max()) throw DecodeError("field too long");
        return static_cast<std::uint16_t>(n);
    }

    template <typename Fn>
    void put(Fn&& fn)
    {
        ByteWriter f;
        fn(f);
        w_.u16(count(f.bytes().size()));
        w_.raw(f.bytes());
    }

    ByteWriter& w_;
};

class FieldIn {
public:
    explicit FieldIn(ByteReader& r) : r_(r) {}

    void operator()(Amount& v) { v = next(8).i64(); }
    void operator()(std::uint32_t& v) { v = next(4).u32(); }
    void operator()(std::uint64_t& v) { v = next(8).u64(); }
    template <std::size_t N>
    void operator()(std::array<std::uint8_t, N>& v)
    {
        auto f = next(N);
        v = f.template fixed<N>();
    }
    void operator()(std::string& v)
    {
        auto raw = field();
        v.assign(raw.begin(), raw.end());
    }
    void operator()(chain::Transaction& tx) { tx = chain::Transaction::parse(field()); }
    void operator()(std::vector<chain::Transaction>& txs)
    {
        auto raw = field();
        ByteReader f(raw);
        const auto n = f.u16();
        txs.clear();
        for (std::uint16_t i = 0; i < n; ++i) txs.push_back(chain::Transaction::parse(f.var()));
        f.expect_end();
    }
    void operator()(std::vector<chain::KeySignature>& sigs)
    {
        auto raw = field();
        ByteReader f(raw);
        const auto n = f.u16();
        sigs.clear();
        for (std::uint16_t i = 0; i < n; ++i) {
            chain::KeySignature s;
            s.key = f.fixed<32>();
            s.sig = f.fixed<64>();
            sigs.push_back(s);
        }
        f.expect_end();
    }

private:
    ByteView field() { return r_.raw(r_.u16()); }

    // A fixed-width field; the reader is checked to hold exactly `width` bytes.
    struct Fixed {
        ByteReader reader;
        std::int64_t i64() { return done(reader.i64()); }
        std::uint32_t u32() { return done(reader.u32()); }
        std::uint64_t u64() { return done(reader.u64()); }
        template <std::size_t N>
        std::array<std::uint8_t, N> fixed() { return done(reader.fixed<N>()); }
        template <typename T>
        T done(T v)
        {
            reader.expect_end();
            return v;
        }
    };

    Fixed next(std::size_t width)
    {
        auto raw = field();
        if (raw.size() != width) throw DecodeError("bad field width");
        return Fixed{ByteReader(raw)};
    }

    ByteReader& r_;
};

// Field order per message type. Shared by encoder and decoder.
template <typename C> void fields(C&, msg::OpenChannelAccepted&) {}
template <typename C> void fields(C&, msg::ChannelOpened&) {}
template <typename C> void fields(C&, msg::PaymentSuccess&) {}
template <typename C> void fields(C&, msg::CloseChannelRequest&) {}
template <typename C> void fields(C&, msg::ChannelClosed&) {}
template <typename C> void fields(C&, msg::Shutdown&) {}
template <typename C> void fields(C& c, msg::OpenChannelRequest& m) { c(m.capacity); }
template <typename C> void fields(C& c, msg::FundingSignature& m) { c(m.unsigned_funding_tx); }
template <typename C> void fields(C& c, msg::FundingSigned& m) { c(m.signed_funding_tx); }
template <typename C>
void fields(C& c, msg::SendPayment& m)
{
    c(m.amount);
    c(m.destination);
}
template <typename C> void fields(C& c, msg::RequestSignTx& m) { c(m.txs); }
template <typename C> void fields(C& c, msg::SignedTx& m) { c(m.txs); }
template <typename C> void fields(C& c, msg::PaymentFailure& m) { c(m.reason); }
template <typename C> void fields(C& c, msg::Rejected& m) { c(m.reason); }
template <typename C>
void fields(C& c, msg::OpenChannel& m)
{
    c(m.funding_pubkey);
    c(m.iot_pubkey);
    c(m.capacity);
    c(m.to_self_delay);
    c(m.first_revocation_point);
}
template <typename C>
void fields(C& c, msg::AcceptChannel& m)
{
    c(m.funding_pubkey);
    c(m.minimum_depth);
    c(m.first_revocation_point);
}
template <typename C>
void fields(C& c, msg::FundingCreated& m)
{
    c(m.funding_txid);
    c(m.funding_output_index);
    c(m.signature);
}
template <typename C> void fields(C& c, msg::PeerFundingSigned& m) { c(m.signature); }
template <typename C> void fields(C& c, msg::FundingLocked& m) { c(m.next_revocation_point); }
template <typename C>
void fields(C& c, msg::UpdateAddHtlc& m)
{
    c(m.value);
    c(m.payment_hash);
    c(m.expiry);
    c(m.gateway_fee);
}
template <typename C> void fields(C& c, msg::CommitmentSigned& m) { c(m.signatures); }
template <typename C>
void fields(C& c, msg::RevokeAndAck& m)
{
    c(m.state_index);
    c(m.revocation_key);
    c(m.next_revocation_point);
}
template <typename C> void fields(C& c, msg::UpdateFulfillHtlc& m) { c(m.preimage); }
template <typename C> void fields(C& c, msg::UpdateFailHtlc& m) { c(m.reason); }
template <typename C> void fields(C& c, msg::ClosingSigned& m) { c(m.signatures); }
template <typename C> void fields(C& c, msg::PeerError& m) { c(m.reason); }

template <typename T>
Body read_body(ByteReader& r)
{
    T m;
    FieldIn in(r);
    fields(in, m);
    return m;
}

template <std::size_t I = 0>
Body read_by_type(MsgType type, ByteReader& r)
{
    if constexpr (I == std::variant_size_v<Body>) {
        throw DecodeError("unknown message type");
    } else {
        using T = std::variant_alternative_t<I, Body>;
        if (T::kType == type) return read_body<T>(r);
        return read_by_type<I + 1>(type, r);
    }
}

} // namespace

Bytes encode(const Message& m)
{
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(m.type()));
    w.u64(m.channel_id);
    FieldOut out(w);
    std::visit(
        [&](const auto& body) {
            auto copy = body;
            fields(out, copy);
        },
        m.body);
    return std::move(w).take();
}

Message decode(ByteView wire)
{
    ByteReader r(wire);
    const auto type = static_cast<MsgType>(r.u8());
    Message m;
    m.channel_id = r.u64();
    m.body = read_by_type(type, r);
    r.expect_end();
    return m;
}

} // namespace iotln::agents

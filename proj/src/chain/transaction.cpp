// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/chain/transaction.hpp>

#include <algorithm>
#include <set>
#include <stdexcept>

namespace iotln::chain {

namespace {

enum ConditionTag : std::uint8_t {
    kTagMultiSig = 1,
    kTagRelative = 2,
    kTagAbsolute = 3,
    kTagHashLock = 4,
    kTagOr = 5,
    kTagRevocation = 6,
};

constexpr std::uint32_t kTxVersion = 1;
constexpr std::uint32_t kMaxListLen = 10'000;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ConditionPtr share(SpendCondition c) { return std::make_shared<const SpendCondition>(std::move(c)); }

SpendCondition checked(SpendCondition c)
{
    if (!c.well_formed()) throw std::invalid_argument("malformed spend condition: " + c.describe());
    return c;
}

std::uint32_t read_count(ByteReader& r)
{
    auto n = r.u32();
    if (n > kMaxListLen) throw DecodeError("list too long");
    return n;
}

} // namespace

int SpendCondition::depth() const
{
    return std::visit(overloaded{
                          [](const MultiSig&) { return 1; },
                          [](const RevocationKey&) { return 1; },
                          [](const RelativeTimelock& t) { return 1 + (t.inner ? t.inner->depth() : 0); },
                          [](const AbsoluteTimelock& t) { return 1 + (t.inner ? t.inner->depth() : 0); },
                          [](const HashLock& h) { return 1 + (h.inner ? h.inner->depth() : 0); },
                          [](const Or& o) {
                              int d = 0;
                              for (const auto& b : o.branches) d = std::max(d, b.depth());
                              return 1 + d;
                          },
                      },
                      node);
}

bool SpendCondition::well_formed() const
{
    if (depth() > kMaxConditionDepth) return false;
    return std::visit(overloaded{
                          [](const MultiSig& m) {
                              if (m.threshold == 0 || m.threshold > m.keys.size()) return false;
                              std::set<PubKey> unique(m.keys.begin(), m.keys.end());
                              return unique.size() == m.keys.size();
                          },
                          [](const RevocationKey&) { return true; },
                          [](const RelativeTimelock& t) { return t.blocks >= 1 && t.inner && t.inner->well_formed(); },
                          [](const AbsoluteTimelock& t) { return t.inner && t.inner->well_formed(); },
                          [](const HashLock& h) { return h.inner && h.inner->well_formed(); },
                          [](const Or& o) {
                              return o.branches.size() >= 2 &&
                                     std::all_of(o.branches.begin(), o.branches.end(),
                                                 [](const SpendCondition& b) { return b.well_formed(); });
                          },
                      },
                      node);
}

void SpendCondition::serialize(ByteWriter& w) const
{
    std::visit(overloaded{
                   [&](const MultiSig& m) {
                       w.u8(kTagMultiSig);
                       w.u32(m.threshold);
                       w.u32(static_cast<std::uint32_t>(m.keys.size()));
                       for (const auto& k : m.keys) w.raw(k);
                   },
                   [&](const RelativeTimelock& t) {
                       w.u8(kTagRelative);
                       w.u32(t.blocks);
                       t.inner->serialize(w);
                   },
                   [&](const AbsoluteTimelock& t) {
                       w.u8(kTagAbsolute);
                       w.u32(t.height);
                       t.inner->serialize(w);
                   },
                   [&](const HashLock& h) {
                       w.u8(kTagHashLock);
                       w.raw(h.hash);
                       h.inner->serialize(w);
                   },
                   [&](const Or& o) {
                       w.u8(kTagOr);
                       w.u32(static_cast<std::uint32_t>(o.branches.size()));
                       for (const auto& b : o.branches) b.serialize(w);
                   },
                   [&](const RevocationKey& r) {
                       w.u8(kTagRevocation);
                       w.raw(r.key);
                   },
               },
               node);
}

SpendCondition SpendCondition::parse(ByteReader& r, int depth)
{
    if (depth > kMaxConditionDepth) throw DecodeError("spend condition nested too deeply");
    switch (r.u8()) {
    case kTagMultiSig: {
        MultiSig m;
        m.threshold = r.u32();
        auto n = read_count(r);
        for (std::uint32_t i = 0; i < n; ++i) m.keys.push_back(r.fixed<32>());
        return {m};
    }
    case kTagRelative: {
        RelativeTimelock t;
        t.blocks = r.u32();
        t.inner = share(parse(r, depth + 1));
        return {t};
    }
    case kTagAbsolute: {
        AbsoluteTimelock t;
        t.height = r.u32();
        t.inner = share(parse(r, depth + 1));
        return {t};
    }
    case kTagHashLock: {
        HashLock h;
        h.hash = r.fixed<32>();
        h.inner = share(parse(r, depth + 1));
        return {h};
    }
    case kTagOr: {
        Or o;
        auto n = read_count(r);
        for (std::uint32_t i = 0; i < n; ++i) o.branches.push_back(parse(r, depth + 1));
        return {o};
    }
    case kTagRevocation:
        return {RevocationKey{r.fixed<32>()}};
    default:
        throw DecodeError("unknown spend condition tag");
    }
}

std::string SpendCondition::describe() const
{
    auto short_key = [](const PubKey& k) { return to_hex(ByteView{k}.first(4)); };
    return std::visit(overloaded{
                          [&](const MultiSig& m) {
                              std::string s = "multisig(" + std::to_string(m.threshold);
                              for (const auto& k : m.keys) s += "," + short_key(k);
                              return s + ")";
                          },
                          [](const RelativeTimelock& t) {
                              return "after_blocks(" + std::to_string(t.blocks) + "," + t.inner->describe() + ")";
                          },
                          [](const AbsoluteTimelock& t) {
                              return "after_height(" + std::to_string(t.height) + "," + t.inner->describe() + ")";
                          },
                          [](const HashLock& h) {
                              return "hashlock(" + to_hex(ByteView{h.hash}.first(4)) + "," + h.inner->describe() + ")";
                          },
                          [](const Or& o) {
                              std::string s = "or(";
                              for (std::size_t i = 0; i < o.branches.size(); ++i)
                                  s += (i ? "," : "") + o.branches[i].describe();
                              return s + ")";
                          },
                          [&](const RevocationKey& r) { return "revocation(" + short_key(r.key) + ")"; },
                      },
                      node);
}

SpendCondition single_key(const PubKey& key) { return checked({MultiSig{1, {key}}}); }

SpendCondition multisig(std::uint32_t threshold, std::vector<PubKey> keys)
{
    return checked({MultiSig{threshold, std::move(keys)}});
}

SpendCondition after_blocks(std::uint32_t blocks, SpendCondition inner)
{
    return checked({RelativeTimelock{blocks, share(std::move(inner))}});
}

SpendCondition after_height(std::uint32_t height, SpendCondition inner)
{
    return checked({AbsoluteTimelock{height, share(std::move(inner))}});
}

SpendCondition hash_locked(const Hash256& hash, SpendCondition inner)
{
    return checked({HashLock{hash, share(std::move(inner))}});
}

SpendCondition any_of(std::vector<SpendCondition> branches) { return checked({Or{std::move(branches)}}); }

SpendCondition revocation(const PubKey& key) { return {RevocationKey{key}}; }

std::optional<PubKey> sole_key(const SpendCondition& c)
{
    if (const auto* m = std::get_if<MultiSig>(&c.node); m && m->threshold == 1 && m->keys.size() == 1)
        return m->keys.front();
    return std::nullopt;
}

bool has_revocation_branch(const SpendCondition& c, const PubKey& key)
{
    return std::visit(overloaded{
                          [](const MultiSig&) { return false; },
                          [&](const RevocationKey& r) { return r.key == key; },
                          [&](const RelativeTimelock& t) { return has_revocation_branch(*t.inner, key); },
                          [&](const AbsoluteTimelock& t) { return has_revocation_branch(*t.inner, key); },
                          [&](const HashLock& h) { return has_revocation_branch(*h.inner, key); },
                          [&](const Or& o) {
                              return std::any_of(o.branches.begin(), o.branches.end(),
                                                 [&](const SpendCondition& b) { return has_revocation_branch(b, key); });
                          },
                      },
                      c.node);
}

bool Witness::signed_by(const PubKey& key) const
{
    return std::any_of(signatures.begin(), signatures.end(), [&](const KeySignature& s) { return s.key == key; });
}

Bytes Transaction::serialize_unsigned() const
{
    ByteWriter w;
    w.u32(kTxVersion);
    w.u32(static_cast<std::uint32_t>(inputs.size()));
    for (const auto& in : inputs) {
        w.raw(in.prevout.txid);
        w.u32(in.prevout.index);
    }
    w.u32(static_cast<std::uint32_t>(outputs.size()));
    for (const auto& out : outputs) {
        w.i64(out.value);
        out.condition.serialize(w);
    }
    return std::move(w).take();
}

Bytes Transaction::serialize() const
{
    ByteWriter w;
    w.raw(serialize_unsigned());
    for (const auto& in : inputs) {
        w.u32(static_cast<std::uint32_t>(in.witness.signatures.size()));
        for (const auto& s : in.witness.signatures) {
            w.raw(s.key);
            w.raw(s.sig);
        }
        w.u32(static_cast<std::uint32_t>(in.witness.preimages.size()));
        for (const auto& p : in.witness.preimages) w.raw(p);
    }
    return std::move(w).take();
}

Transaction Transaction::parse(ByteView data)
{
    ByteReader r(data);
    if (r.u32() != kTxVersion) throw DecodeError("unknown transaction version");
    Transaction tx;
    auto n_in = read_count(r);
    tx.inputs.resize(n_in);
    for (auto& in : tx.inputs) {
        in.prevout.txid = r.fixed<32>();
        in.prevout.index = r.u32();
    }
    auto n_out = read_count(r);
    for (std::uint32_t i = 0; i < n_out; ++i) {
        Output out;
        out.value = r.i64();
        out.condition = SpendCondition::parse(r);
        tx.outputs.push_back(std::move(out));
    }
    for (auto& in : tx.inputs) {
        auto n_sig = read_count(r);
        for (std::uint32_t i = 0; i < n_sig; ++i) {
            KeySignature s;
            s.key = r.fixed<32>();
            s.sig = r.fixed<64>();
            in.witness.signatures.push_back(s);
        }
        auto n_pre = read_count(r);
        for (std::uint32_t i = 0; i < n_pre; ++i) in.witness.preimages.push_back(r.fixed<32>());
    }
    r.expect_end();
    return tx;
}

Txid Transaction::txid() const { return crypto::sha256(serialize_unsigned()); }

Amount Transaction::total_out() const
{
    Amount sum = 0;
    for (const auto& o : outputs) sum += o.value;
    return sum;
}

void Transaction::add_signature(std::size_t index, const crypto::KeyPair& key)
{
    auto id = txid();
    auto& sigs = inputs.at(index).witness.signatures;
    std::erase_if(sigs, [&](const KeySignature& s) { return s.key == key.pub; });
    sigs.push_back({key.pub, crypto::sign(id, key.priv)});
}

} // namespace iotln::chain

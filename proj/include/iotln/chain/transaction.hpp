// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_CHAIN_TRANSACTION_HPP
#define IOTLN_CHAIN_TRANSACTION_HPP

#include <iotln/amount.hpp>
#include <iotln/bytes.hpp>
#include <iotln/crypto/hash.hpp>
#include <iotln/crypto/keys.hpp>
#include <iotln/crypto/preimage.hpp>

#include <compare>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace iotln::chain {

using crypto::Hash256;
using crypto::PubKey;
using crypto::Signature;
using Txid = Hash256;

struct OutPoint {
    Txid txid{};
    std::uint32_t index = 0;

    auto operator<=>(const OutPoint&) const = default;
};

struct SpendCondition;
using ConditionPtr = std::shared_ptr<const SpendCondition>;

/*
 * Spend predicates standing in for Bitcoin Script. Five families cover every
 * script a channel needs:
 *
 *   MultiSig(m, keys)          m distinct valid signatures from keys
 *   RelativeTimelock(k, c)     spending block is >= k blocks after the
 *                              spent output confirmed, and c holds
 *   AbsoluteTimelock(h, c)     spending block height >= h, and c holds
 *   HashLock(H, c)             witness reveals x with sha256(x) == H, and c holds
 *   Or(c1..cn)                 exactly one branch holds
 *   RevocationKey(key)         a signature under the revocation key
 */
struct MultiSig {
    std::uint32_t threshold = 0;
    std::vector<PubKey> keys;
};

struct RelativeTimelock {
    std::uint32_t blocks = 0;
    ConditionPtr inner;
};

struct AbsoluteTimelock {
    std::uint32_t height = 0;
    ConditionPtr inner;
};

struct HashLock {
    Hash256 hash{};
    ConditionPtr inner;
};

struct Or {
    std::vector<SpendCondition> branches;
};

struct RevocationKey {
    PubKey key{};
};

inline constexpr int kMaxConditionDepth = 4;

struct SpendCondition {
    std::variant<MultiSig, RelativeTimelock, AbsoluteTimelock, HashLock, Or, RevocationKey> node;

    /// Structural checks: threshold bounds, Or arity, nesting depth.
    bool well_formed() const;
    int depth() const;
    void serialize(ByteWriter& w) const;
    static SpendCondition parse(ByteReader& r, int depth = 1);
    std::string describe() const;
};

// Builders. Each returns a validated condition.
SpendCondition single_key(const PubKey& key);
SpendCondition multisig(std::uint32_t threshold, std::vector<PubKey> keys);
SpendCondition after_blocks(std::uint32_t blocks, SpendCondition inner);
SpendCondition after_height(std::uint32_t height, SpendCondition inner);
SpendCondition hash_locked(const Hash256& hash, SpendCondition inner);
SpendCondition any_of(std::vector<SpendCondition> branches);
SpendCondition revocation(const PubKey& key);

/// The key if the condition is exactly MultiSig(1, {key}).
std::optional<PubKey> sole_key(const SpendCondition& c);

/// True if any node in the tree is RevocationKey(key).
bool has_revocation_branch(const SpendCondition& c, const PubKey& key);

struct Output {
    Amount value = 0;
    SpendCondition condition;
};

struct KeySignature {
    PubKey key{};
    Signature sig{};
};

/// Witness material for one input. Signatures are over the spending txid.
struct Witness {
    std::vector<KeySignature> signatures;
    std::vector<crypto::Preimage> preimages;

    bool signed_by(const PubKey& key) const;
};

struct TxIn {
    OutPoint prevout;
    Witness witness;
};

struct Transaction {
    std::vector<TxIn> inputs;
    std::vector<Output> outputs;

    /// sha256 over the witness-free serialization.
    Txid txid() const;
    Amount total_out() const;

    Bytes serialize_unsigned() const;
    Bytes serialize() const;
    static Transaction parse(ByteView data);

    /// Signs the txid with `key` and attaches the signature to input `index`.
    void add_signature(std::size_t index, const crypto::KeyPair& key);
};

} // namespace iotln::chain

#endif // IOTLN_CHAIN_TRANSACTION_HPP

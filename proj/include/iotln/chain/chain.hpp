// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_CHAIN_CHAIN_HPP
#define IOTLN_CHAIN_CHAIN_HPP

#include <iotln/chain/transaction.hpp>

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace iotln::chain {

enum class TxErrc {
    Ok,
    Malformed,
    InvalidOutput,
    DoubleSpend,
    NegativeFee,
    InvalidWitness,
    // Predicate failures; reported as the cause of InvalidWitness.
    ThresholdNotMet,
    TimelockNotElapsed,
    BadPreimage,
    BadRevocationSig,
    AmbiguousBranch,
};

std::string_view to_string(TxErrc code);

struct SpendVerdict {
    TxErrc code = TxErrc::Ok;
    std::size_t input = 0;

    bool ok() const { return code == TxErrc::Ok; }
};

class ChainError : public std::runtime_error {
public:
    ChainError(TxErrc code, TxErrc cause = TxErrc::Ok);
    TxErrc code() const noexcept { return code_; }
    /// For InvalidWitness, the failing predicate.
    TxErrc cause() const noexcept { return cause_; }

private:
    TxErrc code_;
    TxErrc cause_;
};

struct ChainConfig {
    /// Flat fee every transaction builder in this project pays. The chain
    /// itself only demands fee >= 0.
    Amount onchain_fee = 1'000;
    /// Blocks before funding_locked.
    std::uint32_t confirmation_depth = 3;
};

struct Block {
    std::uint32_t height = 0;
    std::vector<Txid> txids;
};

/// Deterministic mock blockchain. FIFO mempool, one block per mine step,
/// no reorgs. Not thread-safe; one owner at a time.
class Chain {
public:
    using SubmitObserver = std::function<void(const Transaction&)>;

    explicit Chain(ChainConfig config = {}, const crypto::SignatureScheme& scheme = crypto::ed25519());

    const ChainConfig& config() const { return config_; }
    std::uint32_t height() const { return height_; }

    /// Creates a confirmed coin out of thin air at the current height
    /// (genesis allocations, wallet top-ups in tests).
    OutPoint credit(const SpendCondition& condition, Amount value);

    /// Validates against the next block height and queues the tx. Throws
    /// ChainError(DoubleSpend | NegativeFee | InvalidWitness | ...).
    Txid submit_tx(const Transaction& tx);

    /// Mines n blocks; the first one includes every queued tx still valid,
    /// in submission order. Returns the new height.
    std::uint32_t mine_block(std::uint32_t n = 1);

    /// Pure check of every input's witness against the output it spends,
    /// as if included in a block at `at_height`.
    SpendVerdict validate_spend(const Transaction& tx, std::uint32_t at_height) const;

    /// Sum of unspent outputs locked to exactly MultiSig(1, {key}).
    Amount balance(const PubKey& key) const;

    std::optional<Output> utxo(const OutPoint& op) const;
    std::vector<std::pair<OutPoint, Output>> utxos_for(const PubKey& key) const;
    /// Confirmed txid that spent `op`, if any.
    std::optional<Txid> spender(const OutPoint& op) const;
    const Transaction* find_tx(const Txid& id) const;
    std::optional<std::uint32_t> confirmed_height(const Txid& id) const;
    /// Depth: 1 in the block that included it, 0 if unconfirmed.
    std::uint32_t confirmations(const Txid& id) const;
    bool in_mempool(const Txid& id) const;

    const std::vector<Block>& blocks() const { return blocks_; }
    /// Txs dropped at inclusion because they had become invalid.
    const std::vector<Txid>& dropped() const { return dropped_; }

    void add_submit_observer(SubmitObserver obs) { observers_.push_back(std::move(obs)); }

    /// Snapshot in the documented JSON schema (see README).
    nlohmann::json dump() const;

private:
    struct Coin {
        Output output;
        std::uint32_t height = 0;
    };

    SpendVerdict check_inputs(const Transaction& tx, std::uint32_t at_height) const;
    void apply(const Transaction& tx, const Txid& id);

    ChainConfig config_;
    const crypto::SignatureScheme* scheme_;
    std::uint32_t height_ = 0;
    std::uint64_t credit_counter_ = 0;
    std::vector<Block> blocks_;
    std::map<OutPoint, Coin> utxos_;
    std::map<OutPoint, Txid> spent_by_;
    std::map<Txid, Transaction> txs_;
    std::map<Txid, std::uint32_t> tx_height_;
    std::vector<std::pair<Txid, Transaction>> mempool_;
    std::vector<Txid> dropped_;
    std::vector<SubmitObserver> observers_;
};

} // namespace iotln::chain

#endif // IOTLN_CHAIN_CHAIN_HPP

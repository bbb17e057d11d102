// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/chain/chain.hpp>

#include <algorithm>
#include <set>

namespace iotln::chain {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct EvalContext {
    const std::set<PubKey>& valid_keys;
    const std::vector<crypto::Preimage>& preimages;
    std::uint32_t coin_height;
    std::uint32_t at_height;
};

struct Eval {
    TxErrc code = TxErrc::Ok;
    // The signature part of the branch was satisfied; only a lock failed.
    bool keys_ok = false;
};

Eval evaluate(const SpendCondition& c, const EvalContext& ctx)
{
    return std::visit(
        overloaded{
            [&](const MultiSig& m) {
                std::uint32_t have = 0;
                for (const auto& k : m.keys) have += ctx.valid_keys.contains(k) ? 1 : 0;
                return have >= m.threshold ? Eval{TxErrc::Ok, true} : Eval{TxErrc::ThresholdNotMet, false};
            },
            [&](const RevocationKey& r) {
                return ctx.valid_keys.contains(r.key) ? Eval{TxErrc::Ok, true} : Eval{TxErrc::BadRevocationSig, false};
            },
            [&](const RelativeTimelock& t) {
                auto inner = evaluate(*t.inner, ctx);
                if (inner.code != TxErrc::Ok) return inner;
                if (ctx.at_height < ctx.coin_height || ctx.at_height - ctx.coin_height < t.blocks)
                    return Eval{TxErrc::TimelockNotElapsed, true};
                return inner;
            },
            [&](const AbsoluteTimelock& t) {
                auto inner = evaluate(*t.inner, ctx);
                if (inner.code != TxErrc::Ok) return inner;
                if (ctx.at_height < t.height) return Eval{TxErrc::TimelockNotElapsed, true};
                return inner;
            },
            [&](const HashLock& h) {
                auto inner = evaluate(*h.inner, ctx);
                if (inner.code != TxErrc::Ok) return inner;
                bool revealed = std::any_of(ctx.preimages.begin(), ctx.preimages.end(),
                                            [&](const crypto::Preimage& p) { return crypto::check_preimage(p, h.hash); });
                return revealed ? inner : Eval{TxErrc::BadPreimage, true};
            },
            [&](const Or& o) {
                int satisfied = 0;
                std::optional<Eval> first;
                std::optional<Eval> first_keyed;
                for (const auto& b : o.branches) {
                    auto e = evaluate(b, ctx);
                    if (e.code == TxErrc::Ok) {
                        ++satisfied;
                        continue;
                    }
                    if (!first) first = e;
                    if (e.keys_ok && !first_keyed) first_keyed = e;
                }
                if (satisfied == 1) return Eval{TxErrc::Ok, true};
                if (satisfied > 1) return Eval{TxErrc::AmbiguousBranch, true};
                return first_keyed ? *first_keyed : *first;
            },
        },
        c.node);
}

nlohmann::json condition_json(const SpendCondition& c)
{
    using nlohmann::json;
    return std::visit(overloaded{
                          [](const MultiSig& m) {
                              json keys = json::array();
                              for (const auto& k : m.keys) keys.push_back(to_hex(k));
                              return json{{"type", "multisig"}, {"threshold", m.threshold}, {"keys", keys}};
                          },
                          [](const RelativeTimelock& t) {
                              return json{{"type", "relative_timelock"}, {"blocks", t.blocks}, {"inner", condition_json(*t.inner)}};
                          },
                          [](const AbsoluteTimelock& t) {
                              return json{{"type", "absolute_timelock"}, {"height", t.height}, {"inner", condition_json(*t.inner)}};
                          },
                          [](const HashLock& h) {
                              return json{{"type", "hashlock"}, {"hash", to_hex(h.hash)}, {"inner", condition_json(*h.inner)}};
                          },
                          [](const Or& o) {
                              json branches = json::array();
                              for (const auto& b : o.branches) branches.push_back(condition_json(b));
                              return json{{"type", "or"}, {"branches", branches}};
                          },
                          [](const RevocationKey& r) { return json{{"type", "revocation"}, {"key", to_hex(r.key)}}; },
                      },
                      c.node);
}

} // namespace

std::string_view to_string(TxErrc code)
{
    switch (code) {
    case TxErrc::Ok: return "Ok";
    case TxErrc::Malformed: return "Malformed";
    case TxErrc::InvalidOutput: return "InvalidOutput";
    case TxErrc::DoubleSpend: return "DoubleSpend";
    case TxErrc::NegativeFee: return "NegativeFee";
    case TxErrc::InvalidWitness: return "InvalidWitness";
    case TxErrc::ThresholdNotMet: return "ThresholdNotMet";
    case TxErrc::TimelockNotElapsed: return "TimelockNotElapsed";
    case TxErrc::BadPreimage: return "BadPreimage";
    case TxErrc::BadRevocationSig: return "BadRevocationSig";
    case TxErrc::AmbiguousBranch: return "AmbiguousBranch";
    }
    return "Unknown";
}

ChainError::ChainError(TxErrc code, TxErrc cause)
    : std::runtime_error("transaction rejected: " + std::string(to_string(code)) +
                         (cause != TxErrc::Ok ? " (" + std::string(to_string(cause)) + ")" : std::string())),
      code_(code), cause_(cause)
{
}

Chain::Chain(ChainConfig config, const crypto::SignatureScheme& scheme) : config_(config), scheme_(&scheme) {}

OutPoint Chain::credit(const SpendCondition& condition, Amount value)
{
    if (value <= 0 || !condition.well_formed()) throw std::invalid_argument("invalid credit output");
    Transaction tx;
    // Coinbase-style marker input: all-zero txid, never a real coin.
    tx.inputs.push_back(TxIn{OutPoint{Txid{}, static_cast<std::uint32_t>(credit_counter_++)}, {}});
    tx.outputs.push_back(Output{value, condition});
    auto id = tx.txid();
    utxos_[OutPoint{id, 0}] = Coin{tx.outputs[0], height_};
    tx_height_[id] = height_;
    txs_.emplace(id, std::move(tx));
    return OutPoint{id, 0};
}

SpendVerdict Chain::check_inputs(const Transaction& tx, std::uint32_t at_height) const
{
    if (tx.inputs.empty() || tx.outputs.empty()) return {TxErrc::Malformed, 0};
    for (const auto& out : tx.outputs)
        if (out.value <= 0 || !out.condition.well_formed()) return {TxErrc::InvalidOutput, 0};

    std::set<OutPoint> seen;
    Amount in_sum = 0;
    for (std::size_t i = 0; i < tx.inputs.size(); ++i) {
        const auto& op = tx.inputs[i].prevout;
        auto it = utxos_.find(op);
        if (it == utxos_.end() || !seen.insert(op).second) return {TxErrc::DoubleSpend, i};
        in_sum += it->second.output.value;
    }
    if (tx.total_out() > in_sum) return {TxErrc::NegativeFee, 0};
    return validate_spend(tx, at_height);
}

SpendVerdict Chain::validate_spend(const Transaction& tx, std::uint32_t at_height) const
{
    const auto id = tx.txid();
    for (std::size_t i = 0; i < tx.inputs.size(); ++i) {
        const auto& in = tx.inputs[i];
        auto it = utxos_.find(in.prevout);
        if (it == utxos_.end()) return {TxErrc::DoubleSpend, i};

        std::set<PubKey> valid;
        for (const auto& s : in.witness.signatures)
            if (scheme_->verify(id, s.sig, s.key)) valid.insert(s.key);

        EvalContext ctx{valid, in.witness.preimages, it->second.height, at_height};
        auto e = evaluate(it->second.output.condition, ctx);
        if (e.code != TxErrc::Ok) return {e.code, i};
    }
    return {};
}

Txid Chain::submit_tx(const Transaction& tx)
{
    for (const auto& obs : observers_) obs(tx);

    auto id = tx.txid();
    if (txs_.contains(id) || in_mempool(id)) throw ChainError(TxErrc::DoubleSpend);
    for (const auto& [_, queued] : mempool_)
        for (const auto& qin : queued.inputs)
            for (const auto& in : tx.inputs)
                if (qin.prevout == in.prevout) throw ChainError(TxErrc::DoubleSpend);

    auto verdict = check_inputs(tx, height_ + 1);
    switch (verdict.code) {
    case TxErrc::Ok: break;
    case TxErrc::Malformed:
    case TxErrc::InvalidOutput:
    case TxErrc::DoubleSpend:
    case TxErrc::NegativeFee: throw ChainError(verdict.code);
    default: throw ChainError(TxErrc::InvalidWitness, verdict.code);
    }
    mempool_.emplace_back(id, tx);
    return id;
}

void Chain::apply(const Transaction& tx, const Txid& id)
{
    for (const auto& in : tx.inputs) {
        utxos_.erase(in.prevout);
        spent_by_[in.prevout] = id;
    }
    for (std::uint32_t i = 0; i < tx.outputs.size(); ++i) utxos_[OutPoint{id, i}] = Coin{tx.outputs[i], height_};
    tx_height_[id] = height_;
    txs_.emplace(id, tx);
}

std::uint32_t Chain::mine_block(std::uint32_t n)
{
    if (n == 0) throw std::invalid_argument("mine_block needs n >= 1");
    for (std::uint32_t b = 0; b < n; ++b) {
        ++height_;
        Block block{height_, {}};
        auto queued = std::move(mempool_);
        mempool_.clear();
        for (auto& [id, tx] : queued) {
            if (check_inputs(tx, height_).ok()) {
                apply(tx, id);
                block.txids.push_back(id);
            } else {
                dropped_.push_back(id);
            }
        }
        blocks_.push_back(std::move(block));
    }
    return height_;
}

Amount Chain::balance(const PubKey& key) const
{
    Amount sum = 0;
    for (const auto& [_, coin] : utxos_)
        if (auto k = sole_key(coin.output.condition); k && *k == key) sum += coin.output.value;
    return sum;
}

std::optional<Output> Chain::utxo(const OutPoint& op) const
{
    if (auto it = utxos_.find(op); it != utxos_.end()) return it->second.output;
    return std::nullopt;
}

std::vector<std::pair<OutPoint, Output>> Chain::utxos_for(const PubKey& key) const
{
    std::vector<std::pair<OutPoint, Output>> out;
    for (const auto& [op, coin] : utxos_)
        if (auto k = sole_key(coin.output.condition); k && *k == key) out.emplace_back(op, coin.output);
    return out;
}

std::optional<Txid> Chain::spender(const OutPoint& op) const
{
    if (auto it = spent_by_.find(op); it != spent_by_.end()) return it->second;
    return std::nullopt;
}

const Transaction* Chain::find_tx(const Txid& id) const
{
    auto it = txs_.find(id);
    return it == txs_.end() ? nullptr : &it->second;
}

std::optional<std::uint32_t> Chain::confirmed_height(const Txid& id) const
{
    if (auto it = tx_height_.find(id); it != tx_height_.end()) return it->second;
    return std::nullopt;
}

std::uint32_t Chain::confirmations(const Txid& id) const
{
    auto h = confirmed_height(id);
    return h ? height_ - *h + 1 : 0;
}

bool Chain::in_mempool(const Txid& id) const
{
    return std::any_of(mempool_.begin(), mempool_.end(), [&](const auto& e) { return e.first == id; });
}

nlohmann::json Chain::dump() const
{
    using nlohmann::json;
    json j;
    j["schema"] = "iotln.chain/1";
    j["height"] = height_;
    j["config"] = {{"onchain_fee", config_.onchain_fee}, {"confirmation_depth", config_.confirmation_depth}};

    json blocks = json::array();
    for (const auto& b : blocks_) {
        json ids = json::array();
        for (const auto& id : b.txids) ids.push_back(to_hex(id));
        blocks.push_back({{"height", b.height}, {"txids", ids}});
    }
    j["blocks"] = blocks;

    json txs = json::array();
    for (const auto& [id, tx] : txs_) {
        txs.push_back({{"txid", to_hex(id)},
                       {"height", tx_height_.at(id)},
                       {"confirmations", confirmations(id)},
                       {"raw", to_hex(tx.serialize())}});
    }
    j["transactions"] = txs;

    json utxos = json::array();
    for (const auto& [op, coin] : utxos_) {
        utxos.push_back({{"txid", to_hex(op.txid)},
                         {"index", op.index},
                         {"value", coin.output.value},
                         {"height", coin.height},
                         {"condition", condition_json(coin.output.condition)}});
    }
    j["utxos"] = utxos;

    json mempool = json::array();
    for (const auto& [id, _] : mempool_) mempool.push_back(to_hex(id));
    j["mempool"] = mempool;
    return j;
}

} // namespace iotln::chain

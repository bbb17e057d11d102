// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include "../support/fixtures.hpp"

#include <iotln/chain/chain.hpp>

#include <doctest.h>

#include <map>
#include <set>

using namespace iotln;
using namespace iotln::chain;
using iotln::test::Parties;
using iotln::test::sign_all;

namespace {

TxErrc submit_error(Chain& c, const Transaction& tx)
{
    try {
        c.submit_tx(tx);
    } catch (const ChainError& e) {
        return e.code() == TxErrc::InvalidWitness ? e.cause() : e.code();
    }
    return TxErrc::Ok;
}

Transaction spend(const OutPoint& op, Amount value, const SpendCondition& to)
{
    Transaction tx;
    tx.inputs.push_back({op, {}});
    tx.outputs.push_back({value, to});
    return tx;
}

} // namespace

TEST_CASE("funding tx from a 10.001 BTC wallet into 3-of-3 is accepted")
{
    Parties p;
    Chain c;
    const Amount wallet_value = btc(10) + kCoin / 1000;
    auto wallet = c.credit(single_key(p.iot.pub), wallet_value);
    Transaction tx;
    tx.inputs.push_back({wallet, {}});
    tx.outputs.push_back({btc(10), multisig(3, {p.iot.pub, p.gateway.pub, p.bridge.pub})});
    tx.outputs.push_back({wallet_value - btc(10) - c.config().onchain_fee, single_key(p.iot.pub)});
    sign_all(tx, {&p.iot});
    auto id = c.submit_tx(tx);
    CHECK(c.confirmations(id) == 0);
    c.mine_block(1);
    CHECK(c.confirmations(id) == 1);
    CHECK(c.balance(p.iot.pub) == wallet_value - btc(10) - c.config().onchain_fee);
}

TEST_CASE("submit_tx error paths")
{
    Parties p;
    Chain c;
    auto coin = c.credit(single_key(p.iot.pub), 1'000'000);

    SUBCASE("nonexistent outpoint -> DoubleSpend")
    {
        OutPoint ghost{coin.txid, 5};
        auto tx = spend(ghost, 10, single_key(p.iot.pub));
        sign_all(tx, {&p.iot});
        CHECK(submit_error(c, tx) == TxErrc::DoubleSpend);
    }
    SUBCASE("outputs above inputs -> NegativeFee")
    {
        auto tx = spend(coin, 1'000'001, single_key(p.iot.pub));
        sign_all(tx, {&p.iot});
        CHECK(submit_error(c, tx) == TxErrc::NegativeFee);
    }
    SUBCASE("missing signature -> InvalidWitness(ThresholdNotMet)")
    {
        auto tx = spend(coin, 10, single_key(p.iot.pub));
        sign_all(tx, {&p.gateway});
        try {
            c.submit_tx(tx);
            FAIL("accepted");
        } catch (const ChainError& e) {
            CHECK(e.code() == TxErrc::InvalidWitness);
            CHECK(e.cause() == TxErrc::ThresholdNotMet);
        }
    }
    SUBCASE("second spend of a confirmed outpoint -> DoubleSpend")
    {
        auto tx = spend(coin, 500, single_key(p.gateway.pub));
        sign_all(tx, {&p.iot});
        c.submit_tx(tx);
        c.mine_block(1);
        auto again = spend(coin, 400, single_key(p.bridge.pub));
        sign_all(again, {&p.iot});
        CHECK(submit_error(c, again) == TxErrc::DoubleSpend);
    }
    SUBCASE("conflicting mempool spend -> DoubleSpend")
    {
        auto tx = spend(coin, 500, single_key(p.gateway.pub));
        sign_all(tx, {&p.iot});
        c.submit_tx(tx);
        auto again = spend(coin, 400, single_key(p.bridge.pub));
        sign_all(again, {&p.iot});
        CHECK(submit_error(c, again) == TxErrc::DoubleSpend);
    }
    SUBCASE("zero-value output rejected")
    {
        auto tx = spend(coin, 0, single_key(p.iot.pub));
        sign_all(tx, {&p.iot});
        CHECK(submit_error(c, tx) == TxErrc::InvalidOutput);
    }
}

TEST_CASE("mine_block heights and confirmation depth")
{
    Chain c;
    CHECK_THROWS_AS(c.mine_block(0), std::invalid_argument);
    Parties p;
    auto coin = c.credit(single_key(p.iot.pub), 5'000);
    auto tx = spend(coin, 4'000, single_key(p.gateway.pub));
    sign_all(tx, {&p.iot});
    auto id = c.submit_tx(tx);
    CHECK(c.mine_block(3) == 3);
    CHECK(c.height() == 3);
    CHECK(c.confirmations(id) == 3);
    CHECK(c.blocks().size() == 3);
    CHECK(c.blocks()[0].txids.size() == 1);
    CHECK(c.blocks()[1].txids.empty());
    c.mine_block(3);
    CHECK(c.confirmations(id) == 6);
}

TEST_CASE("3-of-3 spend needs all three signatures")
{
    Parties p;
    Chain c;
    auto fund = c.credit(multisig(3, {p.iot.pub, p.gateway.pub, p.bridge.pub}), btc(10));
    auto tx = spend(fund, btc(10), single_key(p.bridge.pub));

    auto two = tx;
    sign_all(two, {&p.gateway, &p.bridge});
    CHECK(c.validate_spend(two, c.height() + 1).code == TxErrc::ThresholdNotMet);

    // The same key twice does not count twice.
    auto dup = tx;
    sign_all(dup, {&p.gateway, &p.bridge});
    dup.inputs[0].witness.signatures.push_back(dup.inputs[0].witness.signatures[0]);
    CHECK(c.validate_spend(dup, c.height() + 1).code == TxErrc::ThresholdNotMet);

    auto three = tx;
    sign_all(three, {&p.iot, &p.gateway, &p.bridge});
    CHECK(c.validate_spend(three, c.height() + 1).ok());

    // A signature over a different transaction does not transfer.
    auto other = spend(fund, btc(10) - 1, single_key(p.bridge.pub));
    sign_all(other, {&p.iot});
    auto forged = tx;
    sign_all(forged, {&p.gateway, &p.bridge});
    forged.inputs[0].witness.signatures.push_back(other.inputs[0].witness.signatures[0]);
    CHECK(c.validate_spend(forged, c.height() + 1).code == TxErrc::ThresholdNotMet);
}

TEST_CASE("timelock, hashlock and revocation branches")
{
    Parties p;
    Chain c;
    auto rev = p.gateway_rev.keypair(0);
    const std::uint32_t k = 6;
    auto cond = any_of({after_blocks(k, single_key(p.iot.pub)), revocation(rev.pub)});
    auto coin = c.credit(cond, 1'000'000);
    const auto coin_height = c.height();

    auto self = spend(coin, 999'000, single_key(p.iot.pub));
    sign_all(self, {&p.iot});
    CHECK(c.validate_spend(self, coin_height + k - 1).code == TxErrc::TimelockNotElapsed);
    CHECK(c.validate_spend(self, coin_height + k).ok());

    SUBCASE("revoked output spent by counterparty before the timelock")
    {
        auto punish = spend(coin, 999'000, single_key(p.bridge.pub));
        sign_all(punish, {&rev});
        CHECK(c.validate_spend(punish, coin_height + 1).ok());
        auto wrong = spend(coin, 999'000, single_key(p.bridge.pub));
        sign_all(wrong, {&p.bridge});
        CHECK(c.validate_spend(wrong, coin_height + 1).code == TxErrc::ThresholdNotMet);
        auto bare = c.credit(revocation(rev.pub), 10'000);
        auto steal = spend(bare, 9'000, single_key(p.bridge.pub));
        sign_all(steal, {&p.bridge});
        CHECK(c.validate_spend(steal, c.height() + 1).code == TxErrc::BadRevocationSig);
    }
    SUBCASE("two satisfied branches is ambiguous")
    {
        auto both = spend(coin, 999'000, single_key(p.iot.pub));
        sign_all(both, {&p.iot, &rev});
        CHECK(c.validate_spend(both, coin_height + k).code == TxErrc::AmbiguousBranch);
    }
    SUBCASE("hashlock")
    {
        crypto::Rng rng(5);
        auto secret = crypto::new_preimage(rng);
        auto htlc = c.credit(any_of({hash_locked(secret.hash, single_key(p.bridge.pub)),
                                     after_height(c.height() + 20, single_key(p.iot.pub))}),
                             50'000);
        auto claim = spend(htlc, 49'000, single_key(p.bridge.pub));
        sign_all(claim, {&p.bridge});
        CHECK(c.validate_spend(claim, c.height() + 1).code == TxErrc::BadPreimage);
        claim.inputs[0].witness.preimages.push_back(rng.bytes<32>());
        CHECK(c.validate_spend(claim, c.height() + 1).code == TxErrc::BadPreimage);
        claim.inputs[0].witness.preimages.push_back(secret.preimage);
        CHECK(c.validate_spend(claim, c.height() + 1).ok());

        auto refund = spend(htlc, 49'000, single_key(p.iot.pub));
        sign_all(refund, {&p.iot});
        CHECK(c.validate_spend(refund, c.height() + 19).code == TxErrc::TimelockNotElapsed);
        CHECK(c.validate_spend(refund, c.height() + 20).ok());
    }
}

TEST_CASE("property: relative timelock boundary for k in 1..20")
{
    Parties p;
    for (std::uint32_t k = 1; k <= 20; ++k) {
        Chain c;
        c.mine_block(1);
        auto coin = c.credit(after_blocks(k, single_key(p.iot.pub)), 10'000);
        const auto h = c.height();
        auto tx = spend(coin, 9'000, single_key(p.iot.pub));
        sign_all(tx, {&p.iot});
        CHECK(c.validate_spend(tx, h + k).ok());
        CHECK(c.validate_spend(tx, h + k - 1).code == TxErrc::TimelockNotElapsed);
    }
}

TEST_CASE("spend conditions are structurally checked")
{
    Parties p;
    CHECK_THROWS_AS(multisig(3, {p.iot.pub, p.gateway.pub}), std::invalid_argument);
    CHECK_THROWS_AS(multisig(2, {p.iot.pub, p.iot.pub}), std::invalid_argument);
    CHECK_THROWS_AS(any_of({single_key(p.iot.pub)}), std::invalid_argument);
    CHECK_THROWS_AS(after_blocks(0, single_key(p.iot.pub)), std::invalid_argument);
    auto depth4 = any_of({hash_locked(Hash256{}, after_blocks(1, single_key(p.bridge.pub))), revocation(p.iot.pub)});
    CHECK(depth4.depth() == 4);
    CHECK_THROWS_AS(after_blocks(1, depth4), std::invalid_argument);

    ByteWriter w;
    depth4.serialize(w);
    ByteReader r(w.bytes());
    auto back = SpendCondition::parse(r);
    CHECK(back.describe() == depth4.describe());
}

TEST_CASE("transactions round-trip and txid ignores witnesses")
{
    Parties p;
    Chain c;
    auto coin = c.credit(single_key(p.iot.pub), 10'000);
    auto tx = spend(coin, 9'000, any_of({single_key(p.bridge.pub), revocation(p.gateway.pub)}));
    auto unsigned_id = tx.txid();
    sign_all(tx, {&p.iot});
    tx.inputs[0].witness.preimages.push_back({});
    CHECK(tx.txid() == unsigned_id);
    auto back = Transaction::parse(tx.serialize());
    CHECK(back.serialize() == tx.serialize());
    CHECK(back.txid() == unsigned_id);
}

TEST_CASE("balance query")
{
    Parties p;
    Chain c;
    CHECK(c.balance(p.iot.pub) == 0);
    c.credit(single_key(p.iot.pub), 700);
    c.credit(single_key(p.iot.pub), 300);
    c.credit(multisig(2, {p.iot.pub, p.bridge.pub}), 5'000);
    CHECK(c.balance(p.iot.pub) == 1'000);
}

namespace {

// Test-only scheme: pub = sha256(seed), sig = hmac(pub, msg) || hmac(pub, msg).
// Not a real signature scheme, only checks that the chain goes through the interface.
class ToyScheme final : public crypto::SignatureScheme {
public:
    std::string_view name() const override { return "toy"; }
    crypto::KeyPair keypair_from_seed(const std::array<std::uint8_t, 32>& seed) const override
    {
        crypto::KeyPair kp;
        kp.priv.seed = seed;
        kp.pub = crypto::sha256(seed);
        return kp;
    }
    crypto::Signature sign(ByteView msg, const crypto::PrivKey& key) const override
    {
        auto h = crypto::hmac_sha256(crypto::sha256(key.seed), msg);
        crypto::Signature s{};
        std::copy(h.begin(), h.end(), s.begin());
        std::copy(h.begin(), h.end(), s.begin() + 32);
        return s;
    }
    bool verify(ByteView msg, const crypto::Signature& sig, const crypto::PubKey& pub) const noexcept override
    {
        auto h = crypto::hmac_sha256(pub, msg);
        return std::equal(h.begin(), h.end(), sig.begin()) && std::equal(h.begin(), h.end(), sig.begin() + 32);
    }
};

} // namespace

TEST_CASE("signature scheme is pluggable")
{
    ToyScheme toy;
    crypto::Rng rng(11);
    auto key = crypto::generate_keypair(rng, toy);
    Chain c(ChainConfig{}, toy);
    auto coin = c.credit(single_key(key.pub), 100);
    auto tx = spend(coin, 90, single_key(key.pub));
    tx.inputs[0].witness.signatures.push_back({key.pub, crypto::sign(tx.txid(), key.priv, toy)});
    CHECK(c.validate_spend(tx, 1).ok());
    Chain ed;
    auto coin2 = ed.credit(single_key(key.pub), 100);
    auto tx2 = spend(coin2, 90, single_key(key.pub));
    tx2.inputs[0].witness.signatures.push_back({key.pub, crypto::sign(tx2.txid(), key.priv, toy)});
    CHECK_FALSE(ed.validate_spend(tx2, 1).ok());
}

TEST_CASE("property: random tx sequences conserve value and never double spend")
{
    Parties p;
    const crypto::KeyPair* keys[] = {&p.iot, &p.gateway, &p.bridge};
    crypto::Rng rng(77);
    Chain c;
    for (int i = 0; i < 6; ++i) c.credit(single_key(keys[i % 3]->pub), 1'000'000);

    int accepted = 0;
    for (int step = 0; step < 400; ++step) {
        // Pick random coins, including already-spent ones to exercise rejection.
        std::vector<std::pair<OutPoint, Output>> pool;
        for (const auto* k : keys)
            for (auto& u : c.utxos_for(k->pub)) pool.push_back(u);
        if (pool.empty()) break;
        Transaction tx;
        Amount in_sum = 0;
        std::set<const crypto::KeyPair*> signers;
        const auto n_in = rng.uniform(1, std::min<std::uint64_t>(3, pool.size()));
        for (std::uint64_t i = 0; i < n_in; ++i) {
            const auto& [op, out] = pool[rng.uniform(0, pool.size() - 1)];
            tx.inputs.push_back({op, {}});
            in_sum += out.value;
            for (const auto* k : keys)
                if (sole_key(out.condition) == k->pub) signers.insert(k);
        }
        if (rng.uniform(0, 9) == 0 && !c.blocks().empty() && !c.blocks().back().txids.empty()) {
            // Replay an input that is already spent.
            const auto* prev = c.find_tx(c.blocks().back().txids.front());
            tx.inputs.push_back(prev->inputs.front());
        }
        const Amount out_value = in_sum - static_cast<Amount>(rng.uniform(0, 2'000)) + (rng.uniform(0, 19) == 0 ? 5'000 : 0);
        if (out_value <= 2) continue;
        tx.outputs.push_back({out_value / 2, single_key(keys[rng.uniform(0, 2)]->pub)});
        tx.outputs.push_back({out_value - out_value / 2, single_key(keys[rng.uniform(0, 2)]->pub)});
        for (std::size_t i = 0; i < tx.inputs.size(); ++i)
            for (const auto* k : signers) tx.add_signature(i, *k);
        try {
            c.submit_tx(tx);
            ++accepted;
        } catch (const ChainError&) {
        }
        if (rng.uniform(0, 2) == 0) c.mine_block(1);
    }
    c.mine_block(1);
    CHECK(accepted > 50);

    std::set<OutPoint> consumed;
    for (const auto& block : c.blocks()) {
        for (const auto& id : block.txids) {
            const auto* tx = c.find_tx(id);
            REQUIRE(tx != nullptr);
            Amount in_sum = 0;
            for (const auto& in : tx->inputs) {
                CHECK(consumed.insert(in.prevout).second);
                const auto* prev = c.find_tx(in.prevout.txid);
                REQUIRE(prev != nullptr);
                in_sum += prev->outputs.at(in.prevout.index).value;
            }
            CHECK(tx->total_out() <= in_sum);
            CHECK(tx->total_out() + (in_sum - tx->total_out()) == in_sum);
        }
    }
}

TEST_CASE("validate_spend is pure")
{
    Parties p;
    Chain c;
    auto coin = c.credit(after_blocks(3, single_key(p.iot.pub)), 10'000);
    auto tx = spend(coin, 9'000, single_key(p.iot.pub));
    sign_all(tx, {&p.iot});
    auto before = c.dump();
    for (std::uint32_t h = 0; h < 6; ++h) {
        auto v1 = c.validate_spend(tx, h);
        auto v2 = c.validate_spend(tx, h);
        CHECK(v1.code == v2.code);
    }
    CHECK(c.dump() == before);
}

TEST_CASE("chain dump schema")
{
    Parties p;
    Chain c;
    auto coin = c.credit(single_key(p.iot.pub), 10'000);
    auto tx = spend(coin, 9'000, single_key(p.gateway.pub));
    sign_all(tx, {&p.iot});
    c.submit_tx(tx);
    auto pending = c.dump();
    CHECK(pending["mempool"].size() == 1);
    c.mine_block(2);
    auto j = c.dump();
    CHECK(j["schema"] == "iotln.chain/1");
    CHECK(j["height"] == 2);
    CHECK(j["blocks"].size() == 2);
    CHECK(j["utxos"].size() == 1);
    CHECK(j["utxos"][0]["condition"]["type"] == "multisig");
    CHECK(j["mempool"].empty());
}

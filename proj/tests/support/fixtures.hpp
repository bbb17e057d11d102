// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_TESTS_FIXTURES_HPP
#define IOTLN_TESTS_FIXTURES_HPP

#include <iotln/chain/chain.hpp>
#include <iotln/channel/channel.hpp>
#include <iotln/crypto/keys.hpp>

namespace iotln::test {

/// Three channel parties plus revocation stores, all from one seed.
struct Parties {
    crypto::KeyPair iot;
    crypto::KeyPair gateway;
    crypto::KeyPair bridge;
    channel::RevocationStore gateway_rev;
    channel::RevocationStore bridge_rev;

    explicit Parties(std::uint64_t seed = 7) : Parties(crypto::Rng(seed)) {}

    channel::ChannelParams params(Amount capacity = btc(10), std::uint32_t fee_percent = 10,
                                  std::uint32_t delay = 6) const
    {
        channel::ChannelParams p;
        p.capacity = capacity;
        p.iot_pub = iot.pub;
        p.gateway_pub = gateway.pub;
        p.bridge_pub = bridge.pub;
        p.gateway_fee_percent = fee_percent;
        p.to_self_delay = delay;
        return p;
    }

    channel::RevocationPoints points(std::uint64_t index) const
    {
        return {gateway_rev.point(index), bridge_rev.point(index)};
    }

private:
    explicit Parties(crypto::Rng rng)
        : iot(crypto::generate_keypair(rng)), gateway(crypto::generate_keypair(rng)),
          bridge(crypto::generate_keypair(rng)), gateway_rev(rng.bytes<32>()), bridge_rev(rng.bytes<32>())
    {
    }
};

/// Signs input 0 with every key given.
inline void sign_all(chain::Transaction& tx, std::initializer_list<const crypto::KeyPair*> keys,
                     std::size_t input = 0)
{
    for (const auto* k : keys) tx.add_signature(input, *k);
}

/// Funding tx confirmed on `c`; returns the funding outpoint.
inline chain::OutPoint open_funded(chain::Chain& c, const Parties& p, const channel::ChannelParams& params)
{
    auto wallet = c.credit(chain::single_key(p.iot.pub), params.capacity + btc(1) / 1000);
    auto tx = channel::build_funding_tx(params, wallet, params.capacity + btc(1) / 1000, c.config().onchain_fee);
    sign_all(tx, {&p.iot});
    auto id = c.submit_tx(tx);
    c.mine_block(params.confirmation_depth);
    return {id, channel::kFundingOutputIndex};
}

} // namespace iotln::test

#endif // IOTLN_TESTS_FIXTURES_HPP

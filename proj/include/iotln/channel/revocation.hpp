// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_CHANNEL_REVOCATION_HPP
#define IOTLN_CHANNEL_REVOCATION_HPP

#include <iotln/crypto/keys.hpp>

#include <cstdint>
#include <set>

namespace iotln::channel {

/// Private revocation key for one superseded state, handed to the
/// counterparty so it can confiscate a revoked broadcast.
struct RevocationReveal {
    std::uint64_t state_index = 0;
    crypto::PrivKey key;

    crypto::KeyPair keypair() const;
    bool matches(const crypto::PubKey& point) const { return keypair().pub == point; }
};

/// Per-party revocation secrets: one fresh key pair per state, derived from
/// a private seed so they need not be stored individually.
class RevocationStore {
public:
    explicit RevocationStore(const std::array<std::uint8_t, 32>& seed) : seed_(seed) {}

    crypto::KeyPair keypair(std::uint64_t index) const;
    crypto::PubKey point(std::uint64_t index) const { return keypair(index).pub; }

    std::uint64_t latest() const { return latest_; }
    void set_latest(std::uint64_t index) { latest_ = index; }

    /// Throws ChannelError(CannotRevokeLatest) for index >= latest().
    /// Revoking twice returns the same key.
    RevocationReveal revoke(std::uint64_t index);
    bool is_revoked(std::uint64_t index) const { return revoked_.contains(index); }

    const std::array<std::uint8_t, 32>& seed() const { return seed_; }
    const std::set<std::uint64_t>& revoked() const { return revoked_; }

private:
    std::array<std::uint8_t, 32> seed_;
    std::uint64_t latest_ = 0;
    std::set<std::uint64_t> revoked_;
};

} // namespace iotln::channel

#endif // IOTLN_CHANNEL_REVOCATION_HPP

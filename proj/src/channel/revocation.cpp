// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/channel/channel.hpp>
#include <iotln/channel/revocation.hpp>
#include <iotln/crypto/hash.hpp>

namespace iotln::channel {

crypto::KeyPair RevocationReveal::keypair() const { return crypto::ed25519().keypair_from_seed(key.seed); }

crypto::KeyPair RevocationStore::keypair(std::uint64_t index) const
{
    ByteWriter w;
    w.raw(as_bytes("iotln-revocation-v1"));
    w.raw(seed_);
    w.u64(index);
    return crypto::ed25519().keypair_from_seed(crypto::sha256(w.bytes()));
}

RevocationReveal RevocationStore::revoke(std::uint64_t index)
{
    if (index >= latest_) throw ChannelError(ChannelErrc::CannotRevokeLatest);
    revoked_.insert(index);
    return RevocationReveal{index, keypair(index).priv};
}

} // namespace iotln::channel

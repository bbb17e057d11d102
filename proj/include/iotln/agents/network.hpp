// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_AGENTS_NETWORK_HPP
#define IOTLN_AGENTS_NETWORK_HPP

#include <iotln/agents/agents.hpp>

namespace iotln::agents {

struct NetworkConfig {
    std::uint64_t seed = 1;
    chain::ChainConfig chain;
    /// Single coin credited to the device wallet at genesis.
    Amount wallet = btc(11);
    std::uint64_t delay_ms = 5;
    DeviceConfig device;
    GatewayConfig gateway;
    BridgeConfig bridge;
    /// Directory entry count for our bridge; other entries are never online.
    std::uint32_t bridge_channels = 10;
    std::vector<DirectoryEntry> extra_directory;
};

/*
 * One device, its gateway, one bridge and a destination on a fresh world.
 * Agent names are fixed: "iot", "gateway", "bridge", "destination".
 */
class Network {
public:
    explicit Network(NetworkConfig config = {});
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    World& world() { return world_; }
    chain::Chain& chain() { return world_.chain(); }
    Device& device() { return device_; }
    Gateway& gateway() { return gateway_; }
    Bridge& bridge() { return bridge_; }
    Destination& destination() { return destination_; }
    const NetworkConfig& config() const { return config_; }

    const crypto::KeyPair& issuer() const { return keys_.issuer; }
    const crypto::KeyPair& device_keys() const { return keys_.device.signing; }
    const crypto::EncryptionKeyPair& device_encryption() const { return keys_.device.encryption; }
    const crypto::EncryptionKeyPair& gateway_encryption() const { return keys_.gateway.encryption; }
    const channel::RevocationStore& gateway_revocation() const { return keys_.gateway.revocation; }
    const channel::RevocationStore& bridge_revocation() const { return keys_.bridge_revocation; }
    chain::OutPoint wallet_coin() const { return wallet_; }

private:
    struct Keys {
        crypto::KeyPair issuer;
        Device::Keys device;
        Gateway::Identity gateway;
        crypto::KeyPair bridge;
        channel::RevocationStore bridge_revocation;
        static Keys make(crypto::Rng rng);
    };

    NetworkConfig config_;
    World world_;
    Keys keys_;
    chain::OutPoint wallet_;
    Destination destination_;
    Gateway gateway_;
    Bridge bridge_;
    Device device_;
};

/// Drives the opening flow to completion; returns the channel id.
/// Throws AgentError with the gateway's reason on failure.
std::uint64_t iot_open_channel(Network& net, Amount capacity);

/// Drives one payment; returns PaymentSuccess or PaymentFailure.
Device::Outcome iot_send_payment(Network& net, Amount amount, std::optional<std::string> destination = std::nullopt);

enum class CloseInitiator { Device, Gateway, Bridge };
std::string_view to_string(CloseInitiator who);

/// Drives a cooperative close until the close tx is buried. Throws AgentError.
void iot_close_channel(Network& net, CloseInitiator who = CloseInitiator::Device);

} // namespace iotln::agents

#endif // IOTLN_AGENTS_NETWORK_HPP

// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/agents/network.hpp>

namespace iotln::agents {

namespace {

AgentErrc reason_code(const std::string& reason, AgentErrc fallback)
{
    return agent_errc_from_string(reason).value_or(fallback);
}

std::vector<DirectoryEntry> directory_for(const NetworkConfig& c, const crypto::PubKey& bridge)
{
    std::vector<DirectoryEntry> d{{"bridge", bridge, c.bridge_channels}};
    d.insert(d.end(), c.extra_directory.begin(), c.extra_directory.end());
    return d;
}

} // namespace

Network::Keys Network::Keys::make(crypto::Rng rng)
{
    Keys k{
        crypto::generate_keypair(rng),
        {crypto::generate_keypair(rng), crypto::generate_encryption_keypair(rng), {}},
        {crypto::generate_keypair(rng), crypto::generate_encryption_keypair(rng),
         channel::RevocationStore(rng.bytes<32>())},
        crypto::generate_keypair(rng),
        channel::RevocationStore(rng.bytes<32>()),
    };
    k.device.certificate = crypto::issue_certificate(k.device.signing.pub, k.issuer);
    return k;
}

Network::Network(NetworkConfig config)
    : config_(std::move(config)), world_(config_.seed, config_.chain), keys_(Keys::make(world_.fork_rng())),
      wallet_(world_.chain().credit(chain::single_key(keys_.device.signing.pub), config_.wallet)),
      destination_("destination", world_.fork_rng()),
      gateway_(world_, "gateway", keys_.gateway, keys_.issuer.pub, "iot", keys_.device.encryption.pub,
               directory_for(config_, keys_.bridge.pub), config_.gateway),
      bridge_(world_, "bridge", keys_.bridge, keys_.bridge_revocation, config_.bridge),
      device_(world_, "iot", keys_.device, "gateway", keys_.gateway.encryption.pub, config_.device)
{
    const auto delay = config_.delay_ms;
    world_.set_delay([delay](const std::string&, const std::string&) { return delay; });
    gateway_.add_destination(destination_);
    bridge_.add_destination(destination_);
}

std::uint64_t iot_open_channel(Network& net, Amount capacity)
{
    auto& dev = net.device();
    dev.request_open(capacity);
    net.world().settle(net.config().gateway.max_confirmation_blocks + 10);
    const auto& out = dev.outcome();
    if (!out) throw AgentError(AgentErrc::ConfirmationTimeout, "no reply from gateway");
    if (out->type != MsgType::ChannelOpened)
        throw AgentError(reason_code(out->reason, AgentErrc::GatewayRejected), out->reason);
    return dev.channel_id();
}

Device::Outcome iot_send_payment(Network& net, Amount amount, std::optional<std::string> destination)
{
    auto& dev = net.device();
    dev.request_payment(amount, std::move(destination));
    net.world().settle();
    if (!dev.outcome()) return {MsgType::PaymentFailure, std::string(to_string(AgentErrc::BridgeUnresponsive))};
    return *dev.outcome();
}

std::string_view to_string(CloseInitiator who)
{
    switch (who) {
    case CloseInitiator::Device: return "device";
    case CloseInitiator::Gateway: return "gateway";
    case CloseInitiator::Bridge: return "bridge";
    }
    return "unknown";
}

void iot_close_channel(Network& net, CloseInitiator who)
{
    auto& dev = net.device();
    switch (who) {
    case CloseInitiator::Device: dev.request_close(); break;
    case CloseInitiator::Gateway: net.gateway().initiate_close(); break;
    case CloseInitiator::Bridge: net.bridge().initiate_close(); break;
    }
    net.world().settle();
    const auto& out = dev.outcome();
    if (!out) throw AgentError(AgentErrc::BridgeUnresponsive, "close did not complete");
    if (out->type != MsgType::ChannelClosed)
        throw AgentError(reason_code(out->reason, AgentErrc::ProtocolViolation), out->reason);
}

} // namespace iotln::agents

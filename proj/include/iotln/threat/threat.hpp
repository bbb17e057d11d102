// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_THREAT_THREAT_HPP
#define IOTLN_THREAT_THREAT_HPP

#include <iotln/agents/network.hpp>

#include <json.hpp>

#include <string>
#include <vector>

namespace iotln::threat {

using nlohmann::ordered_json;

enum class Adversary { Gateway, Bridge };
std::string_view to_string(Adversary a);

/// Result of one scenario. `passed` means the run matched the model's
/// prediction for that configuration, not that nobody lost money.
struct Verdict {
    std::string scenario;
    std::string outcome;
    bool passed = false;
    ordered_json facts = ordered_json::object();

    /// "scenario: outcome PASS|FAIL" followed by "  key = value" lines.
    std::string text() const;
    ordered_json json() const;
};

// ------------------------------------------------------------------ sweeps

/*
 * Greedy sweep: one tx spending every unspent output of `source` that `key`
 * (plus the given preimages) can unlock alone at the next height, paying
 * the total less the chain's flat fee to `beneficiary`. nullopt if nothing
 * is spendable or the total does not cover the fee.
 */
std::optional<chain::Transaction> build_sweep(const chain::Chain& chain, const chain::Transaction& source,
                                              const crypto::KeyPair& key, const crypto::PubKey& beneficiary,
                                              const std::vector<crypto::Preimage>& preimages = {});

/// Submits build_sweep's tx if there is one. Returns the amount swept.
Amount try_sweep(chain::Chain& chain, const chain::Transaction& source, const crypto::KeyPair& key,
                 const crypto::PubKey& beneficiary, const std::vector<crypto::Preimage>& preimages = {});

// -------------------------------------------------------------- watchtower

struct WatchedChannel {
    chain::OutPoint funding;
    /// Counterparty reveals: private keys for its superseded states.
    std::map<std::uint64_t, channel::RevocationReveal> reveals;
    crypto::PubKey beneficiary{};
};

struct TickReport {
    std::vector<chain::Transaction> submitted;
    /// Breaches whose revocable outputs were all spent before we acted.
    std::vector<chain::Txid> too_late;
};

/*
 * Scans blocks mined since the last tick for funding spends that reveal a
 * revoked state, then confiscates every revocable output still unspent.
 * A breach stays pending until confiscated or found too late.
 */
class Watchtower {
public:
    void watch(const WatchedChannel& channel);
    TickReport tick(chain::Chain& chain);

    std::size_t pending() const { return breaches_.size(); }

private:
    struct Breach {
        chain::Txid txid;
        std::size_t channel = 0;
        channel::RevocationReveal reveal;
    };

    std::vector<WatchedChannel> channels_;
    std::vector<Breach> breaches_;
    std::uint32_t scanned_ = 0;
};

/// One-shot form: a fresh tower over `watched`, scanning from genesis.
TickReport watchtower_tick(chain::Chain& chain, const std::vector<WatchedChannel>& watched);

// --------------------------------------------------------------- scenarios

struct RevokedBroadcastConfig {
    std::uint64_t seed = 1;
    Adversary adversary = Adversary::Gateway;
    /// State the adversary broadcasts. Must exist; may be the latest.
    std::uint64_t state_index = 1;
    /// Payments made before the attack (each adds two states).
    std::uint32_t payments = 1;
    Amount capacity = btc(10);
    Amount payment = btc(1);
    std::uint32_t to_self_delay = 6;
    /// Blocks the victim's monitor stays dark after the broadcast.
    /// 0 = online throughout; the run lasts to_self_delay + 4 blocks.
    std::uint32_t victim_offline_blocks = 0;
    bool watchtower = false;
};

Verdict run_revoked_broadcast(const RevokedBroadcastConfig& config);

Verdict run_theft_attempt(std::uint64_t seed = 1);

/// Randomized funding-outpoint spends with fewer than three valid
/// signatures; every one must be refused by the chain.
Verdict run_signature_fuzz(std::uint64_t seed, std::size_t attempts = 1000);

enum class MitmKind { Tamper, Replay, Eavesdrop, Impersonate };
std::string_view to_string(MitmKind k);
std::optional<MitmKind> mitm_kind_from_string(std::string_view s);

Verdict run_mitm(MitmKind kind, std::uint64_t seed = 1);

/// Randomized mutations and replays of captured device envelopes; counts
/// gateway state transitions, which must stay at zero.
Verdict run_envelope_fuzz(std::uint64_t seed, std::size_t attempts = 1000);

/// Honest close and every revoked-broadcast variant; checks the incentive
/// property per scenario.
std::vector<Verdict> run_suite(std::uint64_t seed);

} // namespace iotln::threat

#endif // IOTLN_THREAT_THREAT_HPP

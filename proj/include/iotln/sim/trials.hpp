// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_SIM_TRIALS_HPP
#define IOTLN_SIM_TRIALS_HPP

#include <iotln/amount.hpp>

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace iotln::sim {

struct ConservationReport {
    std::uint64_t steps = 0;
    std::uint64_t payments = 0;
    std::uint64_t settles = 0;
    std::uint64_t timeouts = 0;
    /// Steps the channel refused (insufficient balance, unknown preimage...).
    std::uint64_t refused = 0;
    /// Steps after which iot + bridge + fee + htlc != capacity, or any
    /// component went negative.
    std::uint64_t violations = 0;
};

/// Random payment/settle/timeout walk over one channel state machine.
ConservationReport conservation_walk(std::uint64_t seed, std::uint64_t steps, Amount capacity = btc(10),
                                     std::uint32_t fee_percent = 10);

enum class TrialKind { Conservation, SignatureFuzz, EnvelopeFuzz };
std::string_view to_string(TrialKind k);
std::optional<TrialKind> trial_kind_from_string(std::string_view s);

struct TrialResult {
    std::uint64_t seed = 0;
    std::uint64_t checks = 0;
    std::uint64_t violations = 0;

    bool operator==(const TrialResult&) const = default;
};

/// One independent world per seed; `size` is steps or attempts per trial.
TrialResult run_trial(TrialKind kind, std::uint64_t seed, std::uint64_t size);

/// Seeds base, base+1, ..., base+trials-1. Result i belongs to seed base+i.
std::vector<TrialResult> run_trials_serial(TrialKind kind, std::uint64_t base_seed, std::size_t trials,
                                           std::uint64_t size);
/// Same results as the serial runner, trials spread over OpenMP threads.
std::vector<TrialResult> run_trials_parallel(TrialKind kind, std::uint64_t base_seed, std::size_t trials,
                                             std::uint64_t size);

struct TrialTotals {
    std::uint64_t trials = 0;
    std::uint64_t checks = 0;
    std::uint64_t violations = 0;
    std::vector<std::uint64_t> failing_seeds;
};

TrialTotals totals(const std::vector<TrialResult>& results);

} // namespace iotln::sim

#endif // IOTLN_SIM_TRIALS_HPP

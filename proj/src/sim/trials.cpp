// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/sim/trials.hpp>

#include <iotln/channel/channel.hpp>
#include <iotln/crypto/preimage.hpp>
#include <iotln/threat/threat.hpp>

#include <omp.h>

#include <algorithm>

namespace iotln::sim {

ConservationReport conservation_walk(std::uint64_t seed, std::uint64_t steps, Amount capacity,
                                     std::uint32_t fee_percent)
{
    using namespace channel;
    crypto::Rng rng(seed);
    const auto iot = crypto::generate_keypair(rng);
    const auto gw = crypto::generate_keypair(rng);
    const auto br = crypto::generate_keypair(rng);
    RevocationStore gw_rev(rng.bytes<32>()), br_rev(rng.bytes<32>());
    auto points = [&](std::uint64_t i) { return RevocationPoints{gw_rev.point(i), br_rev.point(i)}; };

    ChannelParams params;
    params.capacity = capacity;
    params.iot_pub = iot.pub;
    params.gateway_pub = gw.pub;
    params.bridge_pub = br.pub;
    params.gateway_fee_percent = fee_percent;

    ConservationReport r;
    auto s = initial_state(params, points(0));
    std::vector<crypto::PaymentSecret> secrets;
    std::uint32_t height = 100;
    const auto max_payment = static_cast<std::uint64_t>(capacity / 1000);
    for (std::uint64_t step = 0; step < steps; ++step) {
        const auto next = points(s.index + 1);
        const auto kind = rng.uniform(0, 9);
        try {
            if (kind < 5) {
                auto secret = crypto::new_preimage(rng);
                const auto amount = static_cast<Amount>(rng.uniform(0, max_payment));
                const auto expiry = height + 1 + static_cast<std::uint32_t>(rng.uniform(0, 30));
                s = apply_payment(params, s, amount, secret.hash, expiry, height, next);
                secrets.push_back(secret);
                ++r.payments;
            } else if (kind < 8 && !secrets.empty()) {
                // mostly a pending HTLC; now and then a stale preimage, which must be refused
                const crypto::PaymentSecret* pick = &secrets[rng.uniform(0, secrets.size() - 1)];
                if (!s.pending_htlcs.empty() && rng.uniform(0, 9) != 0) {
                    const auto& h = s.pending_htlcs[rng.uniform(0, s.pending_htlcs.size() - 1)];
                    pick = &*std::find_if(secrets.begin(), secrets.end(),
                                          [&](const crypto::PaymentSecret& x) { return x.hash == h.payment_hash; });
                }
                s = settle_htlc(s, pick->preimage, next);
                ++r.settles;
            } else {
                s = timeout_htlc(s, height, next);
                ++r.timeouts;
            }
        } catch (const ChannelError&) {
            ++r.refused;
        }
        height += static_cast<std::uint32_t>(rng.uniform(0, 2));
        ++r.steps;
        if (s.total() != capacity || s.iot_balance < 0 || s.bridge_balance < 0 || s.gateway_fee_accrued < 0)
            ++r.violations;
    }
    return r;
}

std::string_view to_string(TrialKind k)
{
    switch (k) {
    case TrialKind::Conservation: return "conservation";
    case TrialKind::SignatureFuzz: return "signature-fuzz";
    case TrialKind::EnvelopeFuzz: return "envelope-fuzz";
    }
    return "?";
}

std::optional<TrialKind> trial_kind_from_string(std::string_view s)
{
    for (auto k : {TrialKind::Conservation, TrialKind::SignatureFuzz, TrialKind::EnvelopeFuzz})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

TrialResult run_trial(TrialKind kind, std::uint64_t seed, std::uint64_t size)
{
    TrialResult r;
    r.seed = seed;
    switch (kind) {
    case TrialKind::Conservation: {
        const auto c = conservation_walk(seed, size);
        r.checks = c.steps;
        r.violations = c.violations;
        break;
    }
    case TrialKind::SignatureFuzz: {
        const auto v = threat::run_signature_fuzz(seed, size);
        r.checks = v.facts.at("attempts").get<std::uint64_t>();
        r.violations = v.facts.at("accepted").get<std::uint64_t>();
        break;
    }
    case TrialKind::EnvelopeFuzz: {
        const auto v = threat::run_envelope_fuzz(seed, size);
        r.checks = v.facts.at("attempts").get<std::uint64_t>();
        r.violations = v.facts.at("state_transitions").get<std::uint64_t>();
        break;
    }
    }
    return r;
}

std::vector<TrialResult> run_trials_serial(TrialKind kind, std::uint64_t base_seed, std::size_t trials,
                                           std::uint64_t size)
{
    std::vector<TrialResult> out;
    out.reserve(trials);
    for (std::size_t i = 0; i < trials; ++i) out.push_back(run_trial(kind, base_seed + i, size));
    return out;
}

std::vector<TrialResult> run_trials_parallel(TrialKind kind, std::uint64_t base_seed, std::size_t trials,
                                             std::uint64_t size)
{
    std::vector<TrialResult> out(trials);
    const auto n = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = run_trial(kind, base_seed + static_cast<std::uint64_t>(i), size);
    return out;
}

TrialTotals totals(const std::vector<TrialResult>& results)
{
    TrialTotals t;
    for (const auto& r : results) {
        ++t.trials;
        t.checks += r.checks;
        t.violations += r.violations;
        if (r.violations) t.failing_seeds.push_back(r.seed);
    }
    return t;
}

} // namespace iotln::sim

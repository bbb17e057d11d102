// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/sim/trials.hpp>

#include <doctest.h>

using namespace iotln;
using namespace iotln::sim;

TEST_CASE("conservation walk")
{
    const auto r = conservation_walk(5, 2'000);
    CHECK(r.steps == 2'000);
    CHECK(r.violations == 0);
    CHECK(r.payments > 500);
    CHECK(r.settles > 0);
    CHECK(r.timeouts > 0);
    CHECK(r.payments + r.settles + r.timeouts + r.refused >= r.steps);
    CHECK(conservation_walk(5, 300).payments == conservation_walk(5, 300).payments);
}

TEST_CASE("parallel runner matches the serial reference")
{
    for (auto kind : {TrialKind::Conservation, TrialKind::SignatureFuzz}) {
        CAPTURE(to_string(kind));
        const auto serial = run_trials_serial(kind, 40, 6, 60);
        const auto parallel = run_trials_parallel(kind, 40, 6, 60);
        CHECK(serial == parallel);
        const auto t = totals(parallel);
        CHECK(t.trials == 6);
        CHECK(t.checks == 360);
        CHECK(t.violations == 0);
        CHECK(t.failing_seeds.empty());
        CHECK(serial[3].seed == 43);
    }
    CHECK(run_trials_serial(TrialKind::EnvelopeFuzz, 1, 2, 20) == run_trials_parallel(TrialKind::EnvelopeFuzz, 1, 2, 20));
}

TEST_CASE("trial kinds parse")
{
    CHECK(trial_kind_from_string("envelope-fuzz") == TrialKind::EnvelopeFuzz);
    CHECK(trial_kind_from_string("conservation") == TrialKind::Conservation);
    CHECK_FALSE(trial_kind_from_string("bogus"));
    CHECK(totals({{1, 10, 0}, {2, 10, 3}}).failing_seeds == std::vector<std::uint64_t>{2});
}

// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/perf/perf.hpp>

#include <doctest.h>

#include <random>

using namespace iotln::perf;

// Unit-conversion oracle, worked by hand: range / (mph * 1609.344 / 3600).
TEST_CASE("available time, all six cells")
{
    struct Cell {
        double range, mph, expected;
    };
    for (auto c : {Cell{250, 50, 11.2}, Cell{250, 60, 9.3}, Cell{250, 80, 7.0}, Cell{220, 50, 9.8}, Cell{220, 60, 8.2},
                   Cell{220, 80, 6.2}}) {
        CAPTURE(c.range);
        CAPTURE(c.mph);
        CHECK(round1(available_time(c.range, c.mph)) == doctest::Approx(c.expected));
        CHECK(available_time(c.range, c.mph) == doctest::Approx(c.range * 3600.0 / (c.mph * 1609.344)));
    }
    CHECK(available_time(0, 50) == 0.0);
    CHECK(available_time(0, 1e6) == 0.0);
}

TEST_CASE("zero or negative speed is ZeroSpeed")
{
    for (double s : {0.0, -5.0}) {
        try {
            available_time(250, s);
            FAIL("expected ZeroSpeed");
        } catch (const PerfError& e) {
            CHECK(e.code() == PerfErrc::ZeroSpeed);
        }
    }
}

TEST_CASE("available time decreases in speed and is linear in range")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(1, 200);
    for (int i = 0; i < 1000; ++i) {
        const double r = d(rng), s1 = d(rng), s2 = d(rng) + s1;
        CHECK(available_time(r, s1) > available_time(r, s2));
        CHECK(available_time(3 * r, s1) == doctest::Approx(3 * available_time(r, s1)));
    }
}

TEST_CASE("payment latency")
{
    LinkProfile degenerate;
    degenerate.ln_payment_delay = 2.0;
    degenerate.crypto = {0, 0};
    CHECK(payment_latency(degenerate) == doctest::Approx(2.0));

    CHECK(payment_latency(wifi_profile()) == doctest::Approx(2.558).epsilon(1e-9));
    CHECK(payment_latency(ble_profile()) == doctest::Approx(5.722).epsilon(1e-9));
    const double ble = payment_latency(ble_profile());
    CHECK(ble >= 5.2);
    CHECK(ble <= 6.2);

    auto p = degenerate;
    p.crypto = {};
    CHECK(payment_latency(p) - payment_latency(degenerate) == doctest::Approx(4 * 0.015));

    auto bad = wifi_profile();
    bad.device_gateway_rtt = -1;
    CHECK_THROWS_AS(payment_latency(bad), PerfError);
}

TEST_CASE("payment latency is monotone in every field")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(0, 3);
    for (int i = 0; i < 500; ++i) {
        LinkProfile p;
        p.device_gateway_rtt = d(rng);
        p.iot_gw_cloud_rtt = d(rng);
        p.ln_payment_delay = d(rng);
        p.crypto = {d(rng) / 100, d(rng) / 1000};
        p.calibration_residual = d(rng);
        p.n_exchanges = static_cast<std::uint32_t>(d(rng) * 3);
        const double base = payment_latency(p);
        const double bump = d(rng);
        auto q = p;
        q.device_gateway_rtt += bump;
        CHECK(payment_latency(q) >= base);
        q = p;
        q.iot_gw_cloud_rtt += bump;
        CHECK(payment_latency(q) >= base);
        q = p;
        q.ln_payment_delay += bump;
        CHECK(payment_latency(q) >= base);
        q = p;
        q.crypto.aes_s += bump;
        CHECK(payment_latency(q) >= base);
        q = p;
        q.calibration_residual += bump;
        CHECK(payment_latency(q) >= base);
        q = p;
        q.n_exchanges += 1;
        CHECK(payment_latency(q) >= base);
        q = p;
        q.range_m += bump;
        CHECK(payment_latency(q) == base);
    }
}

TEST_CASE("feasibility: every toll-gate cell is satisfied")
{
    const auto rows = toll_table();
    REQUIRE(rows.size() == 6);
    for (const auto& r : rows) CHECK(r.satisfied);
}

TEST_CASE("crypto overhead")
{
    CHECK(device_crypto_overhead() == doctest::Approx(0.015));
    CHECK(device_crypto_overhead({0, 0}) == 0.0);
}

TEST_CASE("monthly cost in cents")
{
    CostParams p;
    auto c = monthly_cost(p);
    CHECK(c.base_cents == 9000);
    CHECK(c.fees_cents == 900);
    CHECK(c.total_cents == 9900);
    p.gateway_fee_percent = 5;
    CHECK(monthly_cost(p).fees_cents == 450);
    CHECK(monthly_cost(p).total_cents == 9450);
    p.gateway_fee_percent = 8;
    CHECK(monthly_cost(p).total_cents == 9720);
    p.gateway_fee_percent = 0;
    CHECK(monthly_cost(p).fees_cents == 0);
    CHECK(monthly_cost(p).total_cents == 9000);
    for (std::uint32_t k = 0; k <= 100; ++k) {
        p.gateway_fee_percent = k;
        const auto m = monthly_cost(p);
        CHECK(m.total_cents * 100 == m.base_cents * (100 + k));
    }
    CHECK(format_usd(450) == "$4.50");
    CHECK(format_usd(9900) == "$99.00");
    CHECK(format_usd(0) == "$0.00");
    CHECK(format_usd(-5) == "-$0.05");
}

TEST_CASE("emitters")
{
    CHECK(table3_csv(toll_table()) ==
          "technology,speed_mph,available_s,payment_latency_s,satisfied\n"
          "WiFi,50,11.2,2.558,Yes\nWiFi,60,9.3,2.558,Yes\nWiFi,80,7.0,2.558,Yes\n"
          "Bluetooth,50,9.8,5.722,Yes\nBluetooth,60,8.2,5.722,Yes\nBluetooth,80,6.2,5.722,Yes\n");
    CHECK(table4_csv(cost_table()) ==
          "gateway_fee_percent,monthly_fees_cents,monthly_total_cents\n5,450,9450\n8,720,9720\n10,900,9900\n");
    CHECK(table1_csv() == "operation,seconds\naes_encryption,0.015\nhmac_calculation,0.000\ntotal,0.015\n");
    CHECK(table1_text().find("< 1ms") != std::string::npos);
    CHECK(table4_text(cost_table()).find("$94.50") != std::string::npos);
    CHECK(table3_text(toll_table()).find("11.2 s") != std::string::npos);
    CHECK(latency_csv({wifi_profile()}).find("2.558") != std::string::npos);
}

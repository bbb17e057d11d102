// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/perf/perf.hpp>

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace iotln::perf {

double available_time(double range_m, double speed_mph)
{
    if (!(speed_mph > 0)) throw PerfError(PerfErrc::ZeroSpeed, "speed must be positive");
    if (range_m < 0) throw PerfError(PerfErrc::InvalidProfile, "negative range");
    return range_m / (speed_mph * kMphToMps);
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

double device_crypto_overhead(const CryptoCost& c) { return c.aes_s + c.hmac_s; }

void LinkProfile::validate() const
{
    for (double v : {device_gateway_rtt, iot_gw_cloud_rtt, range_m, ln_payment_delay, crypto.aes_s, crypto.hmac_s,
                     calibration_residual})
        if (!(v >= 0)) throw PerfError(PerfErrc::InvalidProfile, "profile " + name + " has a negative field");
}

double payment_latency(const LinkProfile& p)
{
    p.validate();
    return p.n_exchanges * (p.device_gateway_rtt + p.iot_gw_cloud_rtt + device_crypto_overhead(p.crypto)) +
           p.ln_payment_delay + p.calibration_residual;
}

LinkProfile wifi_profile()
{
    LinkProfile p;
    p.name = "WiFi";
    p.device_gateway_rtt = 0.009;
    p.iot_gw_cloud_rtt = kCalibratedCloudRtt;
    p.range_m = 250;
    p.ln_payment_delay = 2.0;
    return p;
}

LinkProfile ble_profile()
{
    LinkProfile p;
    p.name = "Bluetooth";
    p.device_gateway_rtt = 0.8;
    p.iot_gw_cloud_rtt = kCalibratedCloudRtt;
    p.range_m = 220;
    p.ln_payment_delay = 2.0;
    return p;
}

MonthlyCost monthly_cost(const CostParams& p)
{
    if (p.toll_per_pass_cents < 0) throw PerfError(PerfErrc::InvalidCost, "negative toll");
    MonthlyCost c;
    c.base_cents = static_cast<std::int64_t>(p.passes_per_day) * p.toll_per_pass_cents * p.days;
    const std::int64_t scaled = c.base_cents * p.gateway_fee_percent;
    c.fees_cents = (scaled + 50) / 100;
    c.total_cents = c.base_cents + c.fees_cents;
    return c;
}

std::string format_usd(std::int64_t cents)
{
    char buf[32];
    const char* sign = cents < 0 ? "-" : "";
    const auto a = cents < 0 ? -cents : cents;
    std::snprintf(buf, sizeof buf, "%s$%lld.%02lld", sign, static_cast<long long>(a / 100),
                  static_cast<long long>(a % 100));
    return buf;
}

std::vector<TollRow> toll_table(const std::vector<LinkProfile>& profiles, const std::vector<double>& speeds_mph)
{
    std::vector<TollRow> rows;
    for (const auto& p : profiles) {
        const double latency = payment_latency(p);
        for (double s : speeds_mph) {
            const double avail = available_time(p.range_m, s);
            rows.push_back({p.name, s, avail, latency, latency <= avail});
        }
    }
    return rows;
}

std::vector<std::pair<std::uint32_t, MonthlyCost>> cost_table(const std::vector<std::uint32_t>& ks, CostParams base)
{
    std::vector<std::pair<std::uint32_t, MonthlyCost>> out;
    for (auto k : ks) {
        base.gateway_fee_percent = k;
        out.emplace_back(k, monthly_cost(base));
    }
    return out;
}

namespace {

std::string fixed(double v, int digits)
{
    std::ostringstream o;
    o << std::fixed << std::setprecision(digits) << v;
    return o.str();
}

std::string ms(double seconds)
{
    if (seconds < 0.001) return "< 1ms";
    return fixed(seconds * 1000.0, 0) + "ms";
}

} // namespace

std::string table1_csv(const CryptoCost& c)
{
    std::ostringstream o;
    o << "operation,seconds\n"
      << "aes_encryption," << fixed(c.aes_s, 3) << "\n"
      << "hmac_calculation," << fixed(c.hmac_s, 3) << "\n"
      << "total," << fixed(device_crypto_overhead(c), 3) << "\n";
    return o.str();
}

std::string table1_text(const CryptoCost& c)
{
    std::ostringstream o;
    o << std::left << std::setw(16) << "AES Encryption" << std::setw(18) << "HMAC Calculation" << "Total\n"
      << std::setw(16) << ms(c.aes_s) << std::setw(18) << ms(c.hmac_s) << ms(device_crypto_overhead(c)) << "\n";
    return o.str();
}

std::string table3_csv(const std::vector<TollRow>& rows)
{
    std::ostringstream o;
    o << "technology,speed_mph,available_s,payment_latency_s,satisfied\n";
    for (const auto& r : rows)
        o << r.technology << "," << fixed(r.speed_mph, 0) << "," << fixed(round1(r.available_s), 1) << ","
          << fixed(r.latency_s, 3) << "," << (r.satisfied ? "Yes" : "No") << "\n";
    return o.str();
}

std::string table3_text(const std::vector<TollRow>& rows)
{
    std::ostringstream o;
    o << std::left << std::setw(12) << "Technology" << std::setw(8) << "Speed" << std::setw(12) << "Available"
      << std::setw(10) << "Latency" << "Satisfied?\n";
    for (const auto& r : rows)
        o << std::setw(12) << r.technology << std::setw(8) << (fixed(r.speed_mph, 0) + "mph") << std::setw(12)
          << (fixed(round1(r.available_s), 1) + " s") << std::setw(10) << (fixed(r.latency_s, 3) + " s")
          << (r.satisfied ? "Yes" : "No") << "\n";
    return o.str();
}

std::string table4_csv(const std::vector<std::pair<std::uint32_t, MonthlyCost>>& rows)
{
    std::ostringstream o;
    o << "gateway_fee_percent,monthly_fees_cents,monthly_total_cents\n";
    for (const auto& [k, c] : rows) o << k << "," << c.fees_cents << "," << c.total_cents << "\n";
    return o.str();
}

std::string table4_text(const std::vector<std::pair<std::uint32_t, MonthlyCost>>& rows)
{
    std::ostringstream o;
    o << std::left << std::setw(8) << "k" << std::setw(14) << "Gateway fees" << "Total cost\n";
    for (const auto& [k, c] : rows)
        o << std::setw(8) << (std::to_string(k) + "%") << std::setw(14) << format_usd(c.fees_cents)
          << format_usd(c.total_cents) << "\n";
    return o.str();
}

std::string latency_csv(const std::vector<LinkProfile>& profiles)
{
    std::ostringstream o;
    o << "profile,device_gateway_rtt_s,cloud_rtt_s,crypto_s,exchanges,ln_payment_s,residual_s,total_s\n";
    for (const auto& p : profiles)
        o << p.name << "," << fixed(p.device_gateway_rtt, 4) << "," << fixed(p.iot_gw_cloud_rtt, 4) << ","
          << fixed(device_crypto_overhead(p.crypto), 4) << "," << p.n_exchanges << "," << fixed(p.ln_payment_delay, 3)
          << "," << fixed(p.calibration_residual, 4) << "," << fixed(payment_latency(p), 3) << "\n";
    return o.str();
}

} // namespace iotln::perf

// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_PERF_PERF_HPP
#define IOTLN_PERF_PERF_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace iotln::perf {

inline constexpr double kMphToMps = 0.44704;

enum class PerfErrc { ZeroSpeed, InvalidProfile, InvalidCost };

class PerfError : public std::invalid_argument {
public:
    PerfError(PerfErrc code, const std::string& what) : std::invalid_argument(what), code_(code) {}
    PerfErrc code() const noexcept { return code_; }

private:
    PerfErrc code_;
};

/// Seconds a vehicle spends inside a radio range. Throws ZeroSpeed for
/// speed <= 0.
double available_time(double range_m, double speed_mph);

/// Half-away-from-zero rounding to one decimal, as the tables print.
double round1(double x);

/// Device-side cost of sealing one message.
struct CryptoCost {
    double aes_s = 0.015;
    double hmac_s = 0.0; // measured as "< 1 ms"
};

double device_crypto_overhead(const CryptoCost& c = {});

struct LinkProfile {
    std::string name;
    double device_gateway_rtt = 0;
    double iot_gw_cloud_rtt = 0;
    double range_m = 0;
    double ln_payment_delay = 0;
    std::uint32_t n_exchanges = 4;
    CryptoCost crypto;
    /// Unexplained remainder against a measured total; zero for both
    /// built-in profiles.
    double calibration_residual = 0;

    /// Throws InvalidProfile on any negative field.
    void validate() const;
};

/// n * (rtt + cloud_rtt + crypto) + ln_delay + residual.
double payment_latency(const LinkProfile& p);

/// Cloud RTT that makes both measured totals come out exactly.
inline constexpr double kCalibratedCloudRtt = 0.1155;

LinkProfile wifi_profile();
LinkProfile ble_profile();

struct CostParams {
    std::uint32_t passes_per_day = 2;
    std::int64_t toll_per_pass_cents = 150;
    std::uint32_t gateway_fee_percent = 10;
    std::uint32_t days = 30;
};

struct MonthlyCost {
    std::int64_t base_cents = 0;
    std::int64_t fees_cents = 0;
    std::int64_t total_cents = 0;
};

/// Integer cents; fees round half up when base * k is not a multiple of 100.
MonthlyCost monthly_cost(const CostParams& p);

/// "$4.50"
std::string format_usd(std::int64_t cents);

struct TollRow {
    std::string technology;
    double speed_mph = 0;
    double available_s = 0;
    double latency_s = 0;
    bool satisfied = false;
};

std::vector<TollRow> toll_table(const std::vector<LinkProfile>& profiles = {wifi_profile(), ble_profile()},
                                const std::vector<double>& speeds_mph = {50, 60, 80});

std::vector<std::pair<std::uint32_t, MonthlyCost>> cost_table(const std::vector<std::uint32_t>& ks = {5, 8, 10},
                                                              CostParams base = {});

// Emitters. CSV has a header row; text is column-aligned.
std::string table1_csv(const CryptoCost& c = {});
std::string table1_text(const CryptoCost& c = {});
std::string table3_csv(const std::vector<TollRow>& rows);
std::string table3_text(const std::vector<TollRow>& rows);
std::string table4_csv(const std::vector<std::pair<std::uint32_t, MonthlyCost>>& rows);
std::string table4_text(const std::vector<std::pair<std::uint32_t, MonthlyCost>>& rows);
std::string latency_csv(const std::vector<LinkProfile>& profiles);

} // namespace iotln::perf

#endif // IOTLN_PERF_PERF_HPP

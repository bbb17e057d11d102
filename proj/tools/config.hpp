// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_TOOLS_CONFIG_HPP
#define IOTLN_TOOLS_CONFIG_HPP

#include <iotln/agents/network.hpp>
#include <iotln/perf/perf.hpp>
#include <iotln/threat/threat.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace iotln::tools {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OutputFormat { Csv, Text };

/// Everything a run depends on. Two equal configs give byte-identical output.
struct ScenarioConfig {
    std::string scenario = "tables";
    std::uint64_t seed = 1;
    OutputFormat format = OutputFormat::Csv;

    chain::ChainConfig chain;
    Amount wallet = btc(11);
    Amount capacity = btc(10);
    std::uint32_t to_self_delay = 6;
    std::uint32_t fee_percent = 10;
    std::uint32_t htlc_timeout = 40;

    Amount payment = btc(1);
    std::uint32_t payments = 1;
    agents::CloseInitiator close_initiator = agents::CloseInitiator::Device;

    /// "wifi", "ble" or "both".
    std::string link = "both";
    perf::CryptoCost crypto;
    double ln_payment_delay = 2.0;
    double calibration_residual = 0.0;
    std::vector<double> speeds_mph{50, 60, 80};
    perf::CostParams cost;
    std::vector<std::uint32_t> fee_percents{5, 8, 10};

    threat::Adversary adversary = threat::Adversary::Gateway;
    std::uint64_t state_index = 1;
    std::uint32_t victim_offline_blocks = 0;
    bool watchtower = false;
    std::uint64_t attempts = 1000;

    std::vector<perf::LinkProfile> profiles() const;
};

/// Flat "key = value" lines; '#' starts a comment. Unknown keys, repeated
/// keys and unparsable values throw ConfigError.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Documented key list, one "key  description" line each.
std::string config_reference();

} // namespace iotln::tools

#endif // IOTLN_TOOLS_CONFIG_HPP

// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include "config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace iotln::tools {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_uint(const std::string& key, const std::string& v)
{
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v)
{
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || out < 0)
        throw ConfigError(key + ": expected a non-negative number, got '" + v + "'");
    return out;
}

Amount parse_amount(const std::string& key, const std::string& v)
{
    try {
        const auto a = parse_btc(v);
        if (a < 0) throw std::invalid_argument("negative");
        return a;
    } catch (const std::invalid_argument&) {
        throw ConfigError(key + ": expected a BTC amount, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <typename F>
auto parse_list(const std::string& key, const std::string& v, F item)
{
    std::vector<decltype(item(key, v))> out;
    std::stringstream ss(v);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(item(key, trim(part)));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

struct Key {
    const char* name;
    const char* help;
    std::function<void(ScenarioConfig&, const std::string& key, const std::string& value)> set;
};

const std::vector<Key>& keys()
{
    static const std::vector<Key> table{
        {"scenario", "open | pay | close | tables | threat:<name>",
         [](auto& c, auto&, auto& v) { c.scenario = v; }},
        {"seed", "u64 seed for keys, nonces and fuzzers",
         [](auto& c, auto& k, auto& v) { c.seed = parse_uint<std::uint64_t>(k, v); }},
        {"format", "csv | text, for tables",
         [](auto& c, auto& k, auto& v) {
             if (v == "csv")
                 c.format = OutputFormat::Csv;
             else if (v == "text")
                 c.format = OutputFormat::Text;
             else
                 throw ConfigError(k + ": expected csv or text");
         }},
        {"chain.confirmation_depth", "blocks before a funding tx counts as locked",
         [](auto& c, auto& k, auto& v) { c.chain.confirmation_depth = parse_uint<std::uint32_t>(k, v); }},
        {"chain.onchain_fee", "flat fee per on-chain tx, BTC",
         [](auto& c, auto& k, auto& v) { c.chain.onchain_fee = parse_amount(k, v); }},
        {"wallet", "device wallet coin at genesis, BTC",
         [](auto& c, auto& k, auto& v) { c.wallet = parse_amount(k, v); }},
        {"channel.capacity", "channel capacity, BTC",
         [](auto& c, auto& k, auto& v) { c.capacity = parse_amount(k, v); }},
        {"channel.to_self_delay", "timelock k in blocks",
         [](auto& c, auto& k, auto& v) { c.to_self_delay = parse_uint<std::uint32_t>(k, v); }},
        {"channel.fee_percent", "gateway fee percent",
         [](auto& c, auto& k, auto& v) { c.fee_percent = parse_uint<std::uint32_t>(k, v); }},
        {"channel.htlc_timeout", "HTLC expiry w, blocks after creation",
         [](auto& c, auto& k, auto& v) { c.htlc_timeout = parse_uint<std::uint32_t>(k, v); }},
        {"payment.amount", "amount per payment, BTC",
         [](auto& c, auto& k, auto& v) { c.payment = parse_amount(k, v); }},
        {"payment.count", "payments made by pay and close",
         [](auto& c, auto& k, auto& v) { c.payments = parse_uint<std::uint32_t>(k, v); }},
        {"close.initiator", "device | gateway | bridge",
         [](auto& c, auto& k, auto& v) {
             if (v == "device")
                 c.close_initiator = agents::CloseInitiator::Device;
             else if (v == "gateway")
                 c.close_initiator = agents::CloseInitiator::Gateway;
             else if (v == "bridge")
                 c.close_initiator = agents::CloseInitiator::Bridge;
             else
                 throw ConfigError(k + ": expected device, gateway or bridge");
         }},
        {"link.profile", "wifi | ble | both",
         [](auto& c, auto& k, auto& v) {
             if (v != "wifi" && v != "ble" && v != "both") throw ConfigError(k + ": expected wifi, ble or both");
             c.link = v;
         }},
        {"link.crypto_s", "device crypto cost per sealed message, seconds",
         [](auto& c, auto& k, auto& v) {
             c.crypto.aes_s = parse_double(k, v);
             c.crypto.hmac_s = 0;
         }},
        {"link.ln_payment_delay_s", "LN payment time, seconds",
         [](auto& c, auto& k, auto& v) { c.ln_payment_delay = parse_double(k, v); }},
        {"link.calibration_residual_s", "added to every latency, seconds",
         [](auto& c, auto& k, auto& v) { c.calibration_residual = parse_double(k, v); }},
        {"tables.speeds_mph", "comma list of vehicle speeds",
         [](auto& c, auto& k, auto& v) {
             c.speeds_mph = parse_list(k, v, parse_double);
             for (double s : c.speeds_mph)
                 if (s <= 0) throw ConfigError(k + ": speeds must be positive");
         }},
        {"cost.passes_per_day", "toll passes per day",
         [](auto& c, auto& k, auto& v) { c.cost.passes_per_day = parse_uint<std::uint32_t>(k, v); }},
        {"cost.toll_cents", "toll per pass, cents",
         [](auto& c, auto& k, auto& v) { c.cost.toll_per_pass_cents = parse_uint<std::int64_t>(k, v); }},
        {"cost.days", "days per month",
         [](auto& c, auto& k, auto& v) { c.cost.days = parse_uint<std::uint32_t>(k, v); }},
        {"cost.fee_percents", "comma list of gateway fee percents",
         [](auto& c, auto& k, auto& v) { c.fee_percents = parse_list(k, v, parse_uint<std::uint32_t>); }},
        {"threat.adversary", "gateway | bridge",
         [](auto& c, auto& k, auto& v) {
             if (v == "gateway")
                 c.adversary = threat::Adversary::Gateway;
             else if (v == "bridge")
                 c.adversary = threat::Adversary::Bridge;
             else
                 throw ConfigError(k + ": expected gateway or bridge");
         }},
        {"threat.state_index", "state the adversary broadcasts",
         [](auto& c, auto& k, auto& v) { c.state_index = parse_uint<std::uint64_t>(k, v); }},
        {"threat.victim_offline_blocks", "blocks the victim stays dark after the broadcast",
         [](auto& c, auto& k, auto& v) { c.victim_offline_blocks = parse_uint<std::uint32_t>(k, v); }},
        {"threat.watchtower", "true | false",
         [](auto& c, auto& k, auto& v) { c.watchtower = parse_bool(k, v); }},
        {"threat.attempts", "randomized attempts for the fuzz scenarios",
         [](auto& c, auto& k, auto& v) { c.attempts = parse_uint<std::uint64_t>(k, v); }},
    };
    return table;
}

} // namespace

std::vector<perf::LinkProfile> ScenarioConfig::profiles() const
{
    std::vector<perf::LinkProfile> out;
    if (link != "ble") out.push_back(perf::wifi_profile());
    if (link != "wifi") out.push_back(perf::ble_profile());
    for (auto& p : out) {
        p.crypto = crypto;
        p.ln_payment_delay = ln_payment_delay;
        p.calibration_residual = calibration_residual;
    }
    return out;
}

ScenarioConfig parse_config(const std::string& text)
{
    ScenarioConfig c;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const auto line = trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": " + key + " has no value");
        if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": repeated key " + key);
        const auto& table = keys();
        auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
        if (it == table.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + key);
        it->set(c, key, value);
    }
    return c;
}

ScenarioConfig load_config(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string config_reference()
{
    std::ostringstream out;
    for (const auto& k : keys()) {
        std::string name = k.name;
        name.resize(std::max<std::size_t>(name.size() + 2, 30), ' ');
        out << name << k.help << "\n";
    }
    return out.str();
}

} // namespace iotln::tools

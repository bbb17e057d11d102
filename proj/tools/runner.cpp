// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include "runner.hpp"

#include <fstream>
#include <ostream>

namespace iotln::tools {

namespace fs = std::filesystem;
using threat::Verdict;

namespace {

void write_file(const fs::path& path, const std::string& content)
{
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + path.string());
}

agents::NetworkConfig network_config(const ScenarioConfig& c)
{
    agents::NetworkConfig n;
    n.seed = c.seed;
    n.chain = c.chain;
    n.wallet = c.wallet;
    n.gateway.to_self_delay = c.to_self_delay;
    n.gateway.htlc_timeout = c.htlc_timeout;
    n.gateway.gateway_fee_percent = c.fee_percent;
    n.gateway.confirmation_depth = c.chain.confirmation_depth;
    n.bridge.minimum_depth = c.chain.confirmation_depth;
    return n;
}

struct AgentRun {
    std::vector<Verdict> verdicts;
    std::vector<std::string> transcript;
};

/// open, then payments, then close, stopping after `stage`.
AgentRun run_agents(const ScenarioConfig& c, const std::string& stage)
{
    agents::Network net(network_config(c));
    AgentRun r;
    auto finish = [&] { r.transcript = net.world().transcript_lines(true); };

    Verdict open{"open", "", false, {}};
    try {
        const auto id = agents::iot_open_channel(net, c.capacity);
        open.outcome = "Opened";
        open.facts["channel_id"] = id;
        open.facts["funding_txid"] = to_hex(*net.gateway().funding_txid());
        open.facts["funding_confirmations"] = net.chain().confirmations(*net.gateway().funding_txid());
        open.facts["capacity"] = format_btc(c.capacity);
        open.passed = net.gateway().phase() == agents::Phase::Operational;
    } catch (const agents::AgentError& e) {
        open.outcome = std::string(agents::to_string(e.code()));
        open.facts["error"] = e.what();
    }
    r.verdicts.push_back(open);
    if (!open.passed || stage == "open") return finish(), r;

    Verdict pay{"pay", "", true, {}};
    std::uint32_t ok = 0;
    for (std::uint32_t i = 0; i < c.payments; ++i) {
        const auto out = agents::iot_send_payment(net, c.payment);
        if (out.type == agents::MsgType::PaymentSuccess) {
            ++ok;
        } else {
            pay.facts["failure"] = out.reason.empty() ? std::string(agents::to_string(out.type)) : out.reason;
            break;
        }
    }
    const auto& s = net.gateway().channel()->latest();
    const Amount fee_each = c.payment * c.fee_percent / 100;
    pay.facts["payments_succeeded"] = ok;
    pay.facts["state_index"] = s.index;
    pay.facts["iot_balance"] = format_btc(s.iot_balance);
    pay.facts["bridge_balance"] = format_btc(s.bridge_balance);
    pay.facts["gateway_fee_accrued"] = format_btc(s.gateway_fee_accrued);
    pay.facts["pending_htlcs"] = s.pending_htlcs.size();
    pay.facts["destination_received"] = format_btc(net.destination().received());
    pay.facts["conserved"] = s.total() == c.capacity;
    pay.passed = ok == c.payments && s.total() == c.capacity &&
                 net.destination().received() == static_cast<Amount>(ok) * (c.payment - fee_each);
    pay.outcome = pay.passed ? "Paid" : "PaymentFailure";
    r.verdicts.push_back(pay);
    if (!pay.passed || stage == "pay") return finish(), r;

    Verdict close{"close", "", false, {}};
    close.facts["initiator"] = std::string(agents::to_string(c.close_initiator));
    const auto final_state = s;
    try {
        agents::iot_close_channel(net, c.close_initiator);
        const auto fee = net.chain().config().onchain_fee;
        const auto iot = net.chain().balance(net.device_keys().pub);
        const auto gw = net.chain().balance(net.gateway().signing().pub);
        const auto br = net.chain().balance(net.bridge().signing().pub);
        const auto change = c.wallet - c.capacity - fee;
        close.facts["close_txid"] = to_hex(*net.gateway().close_txid());
        close.facts["iot_onchain"] = format_btc(iot);
        close.facts["gateway_onchain"] = format_btc(gw);
        close.facts["bridge_onchain"] = format_btc(br);
        close.passed = iot == change + final_state.iot_balance - fee && gw == final_state.gateway_fee_accrued &&
                       br == final_state.bridge_balance;
        close.outcome = close.passed ? "Closed" : "BalanceMismatch";
    } catch (const std::exception& e) {
        close.outcome = "CloseFailed";
        close.facts["error"] = e.what();
    }
    r.verdicts.push_back(close);
    return finish(), r;
}

std::vector<Verdict> run_threat(const ScenarioConfig& c, const std::string& name)
{
    if (name == "revoked") {
        threat::RevokedBroadcastConfig rb;
        rb.seed = c.seed;
        rb.adversary = c.adversary;
        rb.state_index = c.state_index;
        rb.payments = c.payments;
        rb.capacity = c.capacity;
        rb.payment = c.payment;
        rb.to_self_delay = c.to_self_delay;
        rb.victim_offline_blocks = c.victim_offline_blocks;
        rb.watchtower = c.watchtower;
        return {threat::run_revoked_broadcast(rb)};
    }
    if (name == "theft") return {threat::run_theft_attempt(c.seed)};
    if (name == "signature-fuzz") return {threat::run_signature_fuzz(c.seed, c.attempts)};
    if (name == "envelope-fuzz") return {threat::run_envelope_fuzz(c.seed, c.attempts)};
    if (name == "suite") return threat::run_suite(c.seed);
    if (name.starts_with("mitm-"))
        if (auto kind = threat::mitm_kind_from_string(name.substr(5))) return {threat::run_mitm(*kind, c.seed)};
    throw ConfigError("unknown threat scenario " + name);
}

Verdict run_tables(const ScenarioConfig& c, const fs::path& out)
{
    const auto profiles = c.profiles();
    std::vector<perf::TollRow> rows;
    try {
        rows = perf::toll_table(profiles, c.speeds_mph);
    } catch (const perf::PerfError& e) {
        throw ConfigError(e.what());
    }
    perf::CostParams cost = c.cost;
    const auto costs = perf::cost_table(c.fee_percents, cost);

    const bool csv = c.format == OutputFormat::Csv;
    const auto ext = csv ? ".csv" : ".txt";
    const auto dir = out / "tables";
    write_file(dir / (std::string("table1") + ext), csv ? perf::table1_csv(c.crypto) : perf::table1_text(c.crypto));
    write_file(dir / (std::string("table3") + ext), csv ? perf::table3_csv(rows) : perf::table3_text(rows));
    write_file(dir / (std::string("table4") + ext), csv ? perf::table4_csv(costs) : perf::table4_text(costs));
    if (csv) write_file(dir / "latency.csv", perf::latency_csv(profiles));

    Verdict v{"tables", "", true, {}};
    std::size_t unsatisfied = 0;
    for (const auto& p : profiles) v.facts[p.name + "_latency_s"] = perf::payment_latency(p);
    for (const auto& r : rows) {
        if (!r.satisfied) ++unsatisfied;
    }
    v.facts["cells"] = rows.size();
    v.facts["unsatisfied"] = unsatisfied;
    for (const auto& [k, m] : costs)
        v.facts["k" + std::to_string(k)] = perf::format_usd(m.fees_cents) + " / " + perf::format_usd(m.total_cents);
    v.passed = unsatisfied == 0;
    v.outcome = v.passed ? "AllSatisfied" : "Unsatisfied";
    return v;
}

void check_scenario(const std::string& s)
{
    if (s == "open" || s == "pay" || s == "close" || s == "tables") return;
    if (s.starts_with("threat:")) {
        const auto name = s.substr(7);
        const auto& known = threat_scenarios();
        if (std::find(known.begin(), known.end(), name) != known.end()) return;
    }
    throw ConfigError("unknown scenario " + s);
}

} // namespace

const std::vector<std::string>& threat_scenarios()
{
    static const std::vector<std::string> names{"revoked",     "theft",      "signature-fuzz", "envelope-fuzz",
                                                "mitm-tamper", "mitm-replay", "mitm-eavesdrop", "mitm-impersonate",
                                                "suite"};
    return names;
}

int run(const ScenarioConfig& config, const fs::path& out, std::ostream& log)
{
    check_scenario(config.scenario);

    std::vector<Verdict> verdicts;
    if (config.scenario == "tables") {
        verdicts.push_back(run_tables(config, out));
    } else if (config.scenario.starts_with("threat:")) {
        try {
            verdicts = run_threat(config, config.scenario.substr(7));
        } catch (const std::invalid_argument& e) {
            // scenario preconditions, e.g. a state index that never exists
            throw ConfigError(e.what());
        }
    } else {
        auto r = run_agents(config, config.scenario);
        std::string t;
        for (const auto& line : r.transcript) t += line + "\n";
        write_file(out / "transcript.log", t);
        verdicts = std::move(r.verdicts);
    }

    std::string text;
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    bool all = true;
    for (const auto& v : verdicts) {
        text += v.text();
        summary.push_back(v.json());
        all = all && v.passed;
    }
    write_file(out / "verdict.txt", text);
    write_file(out / "verdict.json", summary.dump(2) + "\n");
    log << text;
    return all ? kExitPass : kExitScenarioFailure;
}

} // namespace iotln::tools

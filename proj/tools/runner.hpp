// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_TOOLS_RUNNER_HPP
#define IOTLN_TOOLS_RUNNER_HPP

#include "config.hpp"

#include <filesystem>
#include <iosfwd>

namespace iotln::tools {

inline constexpr int kExitPass = 0;
inline constexpr int kExitScenarioFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Names accepted after "threat:".
const std::vector<std::string>& threat_scenarios();

/*
 * Runs the selected scenario and writes into `out`:
 *   verdict.txt, verdict.json   always
 *   transcript.log              open, pay, close
 *   tables/table{1,3,4}.csv or .txt   tables
 * Verdict text is echoed to `log`. Throws ConfigError for an unknown
 * scenario before touching `out`.
 */
int run(const ScenarioConfig& config, const std::filesystem::path& out, std::ostream& log);

} // namespace iotln::tools

#endif // IOTLN_TOOLS_RUNNER_HPP

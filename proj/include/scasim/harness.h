/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "scasim/attackers.h"
#include "scasim/cache_model.h"
#include "scasim/entropy_shield.h"
#include "scasim/power_sca.h"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scasim {

/// Invalid experiment configuration. `field` names the offending key.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string &field, const std::string &what)
        : std::runtime_error("field '" + field + "': " + what), field_(field) {}
    const std::string &field() const { return field_; }

  private:
    std::string field_;
};

enum class AttackName { FlushReload, FlushFlush, PrimeProbe, CPA, DPA, SPA };
enum class ReportFormat { Csv, Json };

const char *to_string(AttackName name);
AttackName parse_attack_name(std::string_view text);
ReportFormat parse_report_format(std::string_view text);

bool is_cache_attack(AttackName name);

struct ExperimentConfig {
    std::string key;                   // hex, or 0b-prefixed binary for RSA keys
    std::string algorithm; // label only; empty picks RSA-RSA or AES-128
    AttackName attack = AttackName::FlushReload;
    std::optional<ShieldConfig> shield;
    std::size_t iterations = 1;
    std::uint64_t seed = 1;
    std::optional<LatencyModel> latency; // cache attacks
    std::optional<LeakageParams> leakage; // power attacks
    std::size_t traces = 1000;           // CPA/DPA campaign size
    std::string output_path;
    ReportFormat format = ReportFormat::Json;

    /// Throws ConfigError.
    void validate() const;
    /// Latency model with unset fields filled from the noiseless defaults.
    LatencyModel effective_latency() const;
    LeakageParams effective_leakage() const;
    /// Canonical form; also the input to the config hash.
    nlohmann::json to_json() const;
    std::string hash() const;
};

/// Reads a config document; unknown keys are rejected. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json &doc);
ExperimentConfig load_config(const std::string &path);

struct IterationRecord {
    std::size_t index = 0;
    std::string attacker_seen; // empty when decoding failed
    std::string error;
    double overhead_ratio = 1.0;
};

struct ExperimentReport {
    std::string attack;
    std::string algorithm;
    std::string shield;
    std::string original_key;
    std::string victim_seen_key;
    std::string attacker_seen_key; // aggregated over iterations
    std::vector<IterationRecord> iterations;
    std::vector<BitVotes> per_bit_votes;
    double overhead_ratio = 1.0; // mean over iterations
    std::size_t failures = 0;
    std::size_t monitored_reloads = 0; // attacker loads of victim code lines
    std::string config_hash;
    std::uint64_t seed = 0;
    double wall_clock_seconds = 0.0; // console summary only

    bool succeeded() const { return failures < iterations.size(); }
};

/// Runs one experiment. Deterministic in the config, including seeds.
/// Per-iteration decode failures are recorded, not thrown.
ExperimentReport run(const ExperimentConfig &config);

/// Synthesizes the power campaign a CPA/DPA/SPA config describes.
std::vector<PowerTrace> synthesize_campaign(const ExperimentConfig &config);
/// Runs the config's power analysis on the given traces instead of
/// synthesizing them. The original key is still taken from the config.
ExperimentReport analyze_campaign(const ExperimentConfig &config,
                                  std::span<const PowerTrace> traces);

/// Report file contents. Wall-clock time is left out so that equal configs
/// give byte-identical files.
std::string render_report(const ExperimentReport &report, ReportFormat format);
std::string summary_table(const ExperimentReport &report);

struct TableRow {
    std::string attack;
    std::string algorithm;
    std::string label;
    std::string mode;
    std::string original_key;
    std::string victim_seen_key;
    std::string iteration_first;
    std::string iteration_last;
    std::string aggregated;
    std::string expected; // exact expectation, or "" when checked by property
    bool passed = false;
    std::string check;
};

/// The four shielded keys, each under its published attack, in Uniform and
/// Deceptive mode. Uniform rows must match exactly; Deceptive rows are
/// checked for upward-only flips and run-to-run variation.
std::vector<TableRow> reproduce_tables(std::uint64_t seed, std::size_t iterations = 100);
std::string render_tables(const std::vector<TableRow> &rows, ReportFormat format);
/// Aligned plain-text view for the console.
std::string tables_summary(const std::vector<TableRow> &rows);

struct SelfTestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Invariant suite. Output of render_selftest depends only on `seed`.
std::vector<SelfTestCheck> run_selftest(std::uint64_t seed);
std::string render_selftest(const std::vector<SelfTestCheck> &checks, std::uint64_t seed);

} // namespace scasim

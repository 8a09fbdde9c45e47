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

#include "scasim/harness.h"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace scasim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitAttack = 2;

struct Flags {
    std::string config_path;
    std::optional<std::string> key;
    std::optional<std::string> algorithm;
    std::optional<std::string> attack;
    std::optional<std::string> shield;
    std::optional<double> flip_prob;
    std::optional<std::size_t> iterations;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> format;
    std::optional<std::string> out;
    std::optional<double> jitter;
    std::optional<std::size_t> traces;
    std::optional<double> noise;
    std::string export_traces;
    std::string import_traces;
};

void add_common(CLI::App &cmd, Flags &f) {
    cmd.add_option("--config", f.config_path, "JSON experiment config");
    cmd.add_option("--key", f.key, "victim key (hex, or 0b-prefixed binary)");
    cmd.add_option("--algorithm", f.algorithm, "encryption label for the report");
    cmd.add_option("--attack", f.attack, "FlushReload|FlushFlush|PrimeProbe|CPA|DPA|SPA");
    cmd.add_option("--iterations", f.iterations, "attack iterations");
    cmd.add_option("--seed", f.seed, "top-level seed");
    cmd.add_option("--format", f.format, "report format: csv|json");
    cmd.add_option("--out", f.out, "report path");
}

void write_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("--out", "cannot write '" + path + "'");
    out << text;
}

ExperimentConfig build_config(const Flags &f, AttackName default_attack) {
    ExperimentConfig cfg;
    cfg.attack = default_attack;
    if (!f.config_path.empty())
        cfg = load_config(f.config_path);
    if (f.key)
        cfg.key = *f.key;
    if (f.algorithm)
        cfg.algorithm = *f.algorithm;
    if (f.attack) {
        try {
            cfg.attack = parse_attack_name(*f.attack);
        } catch (const std::invalid_argument &e) {
            throw ConfigError("--attack", e.what());
        }
    }
    if (f.shield) {
        if (*f.shield == "none") {
            cfg.shield.reset();
        } else {
            try {
                ShieldConfig s = cfg.shield.value_or(ShieldConfig{});
                s.mode = parse_shield_mode(*f.shield);
                cfg.shield = s;
            } catch (const std::invalid_argument &e) {
                throw ConfigError("--shield", e.what());
            }
        }
    }
    if (f.flip_prob) {
        if (!cfg.shield)
            throw ConfigError("--flip-prob", "needs a shield");
        cfg.shield->flip_probability = *f.flip_prob;
    }
    if (f.iterations)
        cfg.iterations = *f.iterations;
    if (f.seed)
        cfg.seed = *f.seed;
    if (f.format) {
        try {
            cfg.format = parse_report_format(*f.format);
        } catch (const std::invalid_argument &e) {
            throw ConfigError("--format", e.what());
        }
    }
    if (f.out)
        cfg.output_path = *f.out;
    if (f.jitter) {
        LatencyModel m = cfg.latency.value_or(LatencyModel::noiseless());
        m.jitter_sigma = *f.jitter;
        cfg.latency = m;
    }
    if (f.traces)
        cfg.traces = *f.traces;
    if (f.noise) {
        LeakageParams p = cfg.leakage.value_or(LeakageParams{});
        p.noise_sigma = *f.noise;
        cfg.leakage = p;
    }
    cfg.validate();
    return cfg;
}

int emit(const ExperimentConfig &cfg, const ExperimentReport &report) {
    std::cout << summary_table(report);
    const std::string text = render_report(report, cfg.format);
    if (cfg.output_path.empty())
        std::cout << text;
    else
        write_file(cfg.output_path, text);
    if (!report.succeeded()) {
        std::cerr << "error: every iteration failed to decode";
        if (!report.iterations.empty() && !report.iterations.front().error.empty())
            std::cerr << " (first: " << report.iterations.front().error << ")";
        std::cerr << "\n";
        return kExitAttack;
    }
    return kExitOk;
}

int cmd_attack(const Flags &f) {
    const ExperimentConfig cfg = build_config(f, AttackName::FlushReload);
    if (!is_cache_attack(cfg.attack))
        throw ConfigError("attack", std::string(to_string(cfg.attack)) +
                                        " is a power attack; use the 'power' subcommand");
    return emit(cfg, run(cfg));
}

int cmd_power(const Flags &f) {
    const ExperimentConfig cfg = build_config(f, AttackName::CPA);
    if (is_cache_attack(cfg.attack))
        throw ConfigError("attack", std::string(to_string(cfg.attack)) +
                                        " is a cache attack; use the 'attack' subcommand");
    std::vector<PowerTrace> traces;
    if (!f.import_traces.empty()) {
        std::ifstream in(f.import_traces);
        if (!in)
            throw ConfigError("--import-traces", "cannot open '" + f.import_traces + "'");
        try {
            traces = read_traces_csv(in, cfg.effective_leakage().leakage_offset);
        } catch (const std::invalid_argument &e) {
            throw ConfigError("--import-traces", e.what());
        }
    } else {
        traces = synthesize_campaign(cfg);
    }
    if (!f.export_traces.empty()) {
        std::ofstream out(f.export_traces, std::ios::binary);
        if (!out)
            throw ConfigError("--export-traces", "cannot write '" + f.export_traces + "'");
        write_traces_csv(out, traces);
    }
    return emit(cfg, analyze_campaign(cfg, traces));
}

int cmd_tables(const Flags &f) {
    const std::uint64_t seed = f.seed.value_or(1);
    const std::size_t iterations = f.iterations.value_or(100);
    if (iterations == 0)
        throw ConfigError("--iterations", "must be at least 1");
    ReportFormat format = ReportFormat::Json;
    if (f.format) {
        try {
            format = parse_report_format(*f.format);
        } catch (const std::invalid_argument &e) {
            throw ConfigError("--format", e.what());
        }
    }
    const auto rows = reproduce_tables(seed, iterations);
    std::cout << tables_summary(rows);
    if (f.out)
        write_file(*f.out, render_tables(rows, format));
    for (const auto &r : rows)
        if (!r.passed)
            return kExitAttack;
    return kExitOk;
}

int cmd_selftest(const Flags &f) {
    const std::uint64_t seed = f.seed.value_or(1);
    const auto checks = run_selftest(seed);
    const std::string text = render_selftest(checks, seed);
    std::cout << text;
    if (f.out)
        write_file(*f.out, text);
    for (const auto &c : checks)
        if (!c.passed)
            return kExitAttack;
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Cache and power side-channel attack simulator"};
    app.require_subcommand(1);
    Flags f;

    auto *attack = app.add_subcommand("attack", "run one cache-attack experiment");
    add_common(*attack, f);
    attack->add_option("--shield", f.shield, "uniform|deceptive|none");
    attack->add_option("--flip-prob", f.flip_prob, "deceptive flip probability");
    attack->add_option("--jitter", f.jitter, "latency jitter sigma in cycles");

    auto *power = app.add_subcommand("power", "run a CPA, DPA or SPA campaign");
    add_common(*power, f);
    power->add_option("--shield", f.shield, "rejected: power attacks are unshielded");
    power->add_option("--traces", f.traces, "campaign size for CPA/DPA");
    power->add_option("--noise", f.noise, "noise sigma");
    power->add_option("--export-traces", f.export_traces, "write the campaign as CSV");
    power->add_option("--import-traces", f.import_traces, "analyze a CSV campaign");

    auto *tables = app.add_subcommand("tables", "reproduce the shielded-key result tables");
    tables->add_option("--seed", f.seed, "top-level seed");
    tables->add_option("--iterations", f.iterations, "iterations per row");
    tables->add_option("--format", f.format, "csv|json");
    tables->add_option("--out", f.out, "report path");

    auto *selftest = app.add_subcommand("selftest", "run the invariant suite");
    selftest->add_option("--seed", f.seed, "top-level seed");
    selftest->add_option("--out", f.out, "report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*attack)
            return cmd_attack(f);
        if (*power)
            return cmd_power(f);
        if (*tables)
            return cmd_tables(f);
        return cmd_selftest(f);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
}

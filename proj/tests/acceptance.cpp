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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Oracles here are written independently of the library.

#include "scasim/harness.h"
#include "scasim/rng.h"
#include "scasim/victim_rsa.h"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <list>
#include <set>
#include <string>
#include <vector>

using namespace scasim;

namespace {

constexpr std::uint64_t kSeed = 20240517;

const std::array<const char *, 4> kTableKeys = {"0FCFFF", "587BFA", "54FF0B", "89DE00"};

struct Outcome {
    bool passed = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

int g_failed = 0;

void report(int id, const char *title, double budget_s, const std::function<Outcome()> &body) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception &e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (budget_s > 0 && elapsed >= budget_s) {
        o.passed = false;
        o.detail += "; over the " + std::to_string(budget_s) + " s budget";
    }
    if (!o.passed)
        g_failed++;
    std::printf("%s criterion %2d: %s: %s (%.3f s)\n", o.passed ? "PASS" : "FAIL", id, title,
                o.detail.c_str(), elapsed);
    std::fflush(stdout);
}

ExperimentConfig cache_config(const std::string &key, AttackName attack,
                              std::optional<ShieldConfig> shield, std::size_t iterations) {
    ExperimentConfig cfg;
    cfg.key = key;
    cfg.attack = attack;
    cfg.shield = shield;
    cfg.iterations = iterations;
    cfg.seed = kSeed;
    return cfg;
}

// Reference rendering of a key as its operation string, written out by hand.
std::string reference_ops(std::uint32_t bits, unsigned length) {
    std::string s;
    for (unsigned i = 0; i < length; i++) {
        s += "SR";
        if ((bits >> (length - 1 - i)) & 1u)
            s += "MR";
    }
    return s;
}

// Every key whose operation string equals `trace`. A key of L bits with w
// ones renders to 2L + 2w characters, which bounds the search.
std::vector<std::string> brute_force_matches(const std::string &trace) {
    std::vector<std::string> out;
    const std::size_t n = trace.size();
    if (n % 2 != 0)
        return out;
    for (unsigned len = 1; 2 * len <= n; len++) {
        if (4 * len < n)
            continue;
        const unsigned ones = static_cast<unsigned>(n / 2 - len);
        for (std::uint32_t bits = 0; bits < (1u << len); bits++) {
            if (static_cast<unsigned>(std::popcount(bits)) != ones)
                continue;
            if (reference_ops(bits, len) == trace) {
                std::string b;
                for (unsigned i = 0; i < len; i++)
                    b.push_back(((bits >> (len - 1 - i)) & 1u) ? '1' : '0');
                out.push_back(b);
            }
        }
    }
    return out;
}

// Strict-LRU set of fixed associativity, front = most recently used.
struct LruSet {
    std::size_t ways;
    std::list<std::string> lines;

    bool touch(const std::string &line) { // true on hit
        auto it = std::find(lines.begin(), lines.end(), line);
        const bool hit = it != lines.end();
        if (hit)
            lines.erase(it);
        lines.push_front(line);
        if (lines.size() > ways)
            lines.pop_back();
        return hit;
    }
};

// Hand model of one Prime+Probe campaign on 2-way sets 0..2: prime each
// set with its two attacker lines, let the victim touch one code line,
// then probe each set in reverse prime order and flag any miss.
std::vector<bool> enumerate_prime_probe(const std::string &ops) {
    std::array<LruSet, 3> sets{LruSet{2, {}}, LruSet{2, {}}, LruSet{2, {}}};
    std::vector<bool> flags;
    for (char op : ops) {
        for (std::size_t s = 0; s < 3; s++) {
            sets[s].touch("A" + std::to_string(s));
            sets[s].touch("B" + std::to_string(s));
        }
        const std::size_t victim_set = op == 'S' ? 0 : op == 'R' ? 1 : 2;
        sets[victim_set].touch(std::string("V") + op);
        for (std::size_t s = 0; s < 3; s++) {
            bool miss = !sets[s].touch("B" + std::to_string(s));
            miss = !sets[s].touch("A" + std::to_string(s)) || miss;
            flags.push_back(miss);
        }
    }
    return flags;
}

double reference_pearson(const std::vector<double> &x, const std::vector<double> &y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); i++) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double cov = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < x.size(); i++) {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    return vx == 0 || vy == 0 ? 0.0 : cov / std::sqrt(vx * vy);
}

Outcome uniform_shield() {
    Outcome o;
    int rows = 0;
    for (AttackName attack : {AttackName::FlushReload, AttackName::FlushFlush})
        for (const char *key : kTableKeys) {
            const auto r = run(cache_config(key, attack, ShieldConfig{ShieldMode::Uniform}, 1));
            rows++;
            if (r.attacker_seen_key != "FFFFFF" || r.victim_seen_key != key) {
                o.passed = false;
                o.detail += std::string(to_string(attack)) + " " + key + " victim " +
                            r.victim_seen_key + " attacker " + r.attacker_seen_key + "; ";
            }
        }
    if (o.passed)
        o.detail = std::to_string(rows) + " rows: victim = original, attacker = FFFFFF";
    return o;
}

Outcome no_defense() {
    Outcome o;
    int rows = 0;
    for (AttackName attack : {AttackName::FlushReload, AttackName::FlushFlush})
        for (const char *key : kTableKeys) {
            const auto r = run(cache_config(key, attack, std::nullopt, 1));
            rows++;
            if (r.attacker_seen_key != key) {
                o.passed = false;
                o.detail += std::string(to_string(attack)) + " " + key + " -> '" +
                            r.attacker_seen_key + "'; ";
            }
        }
    if (o.passed)
        o.detail = std::to_string(rows) + " keys recovered exactly in one iteration";
    return o;
}

Outcome deceptive_shield() {
    Outcome o;
    std::size_t min_distinct = 1000;
    for (AttackName attack : {AttackName::FlushReload, AttackName::FlushFlush})
        for (const char *key : kTableKeys) {
            const auto r =
                run(cache_config(key, attack, ShieldConfig{ShieldMode::Deceptive}, 100));
            const KeyBits original = KeyBits::from_hex(key);
            std::set<std::string> distinct;
            bool upward = r.iterations.size() == 100;
            for (const auto &it : r.iterations) {
                if (it.attacker_seen.empty()) {
                    upward = false;
                    continue;
                }
                const KeyBits seen = KeyBits::from_hex(it.attacker_seen);
                upward = upward && (seen & original) == original;
                distinct.insert(it.attacker_seen);
            }
            min_distinct = std::min(min_distinct, distinct.size());
            const std::string tag = std::string(to_string(attack)) + " " + key;
            if (!upward) {
                o.passed = false;
                o.detail += tag + ": a 1 bit read as 0; ";
            }
            if (distinct.size() < 2) {
                o.passed = false;
                o.detail += tag + ": attacker key never varied; ";
            }
            if (r.attacker_seen_key == key) {
                o.passed = false;
                o.detail += tag + ": aggregate equals original; ";
            }
        }
    if (o.passed)
        o.detail = "8 campaigns x 100 iterations, upward-only, >= " +
                   std::to_string(min_distinct) + " distinct keys each, aggregate != original";
    return o;
}

Outcome overhead() {
    Outcome o;
    auto rng = make_stream(kSeed, Stream::Keys);
    std::uniform_int_distribution<std::size_t> len(8, 2048);
    double worst = 0;
    std::size_t formula_mismatch = 0;
    for (std::size_t i = 0; i < 1000; i++) {
        const KeyBits key = KeyBits::random(len(rng), rng);
        const OperationTrace plain = encode_ops(key);
        for (ShieldMode mode : {ShieldMode::Uniform, ShieldMode::Deceptive}) {
            const OperationTrace shielded = wrap(plain, key, ShieldConfig{mode, 0.5, kSeed + i});
            const double ratio = static_cast<double>(shielded.tokens.size()) /
                                 static_cast<double>(plain.tokens.size());
            worst = std::max(worst, ratio);
            if (mode == ShieldMode::Uniform) {
                // Every zero bit gains one M,R pair: 4n tokens over 2n + 2w.
                const double n = static_cast<double>(key.size());
                const double w = static_cast<double>(key.count_ones());
                if (ratio != 4 * n / (2 * n + 2 * w))
                    formula_mismatch++;
            }
            if (overhead_ratio(plain, shielded) != ratio)
                formula_mismatch++;
        }
    }
    const KeyBits zeros = KeyBits::zeros(512);
    const OperationTrace plain = encode_ops(zeros);
    const double all_zero =
        overhead_ratio(plain, wrap(plain, zeros, ShieldConfig{ShieldMode::Uniform}));
    o.passed = worst <= 2.0 && all_zero == 2.0 && formula_mismatch == 0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "max %.4f over 2000 wraps, all-zero uniform %.4f, %zu mismatches", worst,
                  all_zero, formula_mismatch);
    o.detail = buf;
    return o;
}

Outcome decoder_oracle() {
    Outcome o;
    auto rng = make_stream(kSeed + 5, Stream::Keys);
    std::uniform_int_distribution<std::size_t> long_len(1, 2048);
    std::size_t round_trip_bad = 0;
    for (std::size_t i = 0; i < 10000; i++) {
        const KeyBits key = KeyBits::random(long_len(rng), rng);
        if (decode(encode_ops(key).attacker_view()) != key)
            round_trip_bad++;
    }

    std::uniform_int_distribution<std::size_t> short_len(1, 8);
    std::uniform_int_distribution<int> coin(0, 3);
    std::uniform_int_distribution<int> op_pick(0, 2);
    const char kOps[] = {'S', 'R', 'M'};
    std::size_t oracle_bad = 0, valid = 0;
    for (std::size_t i = 0; i < 1000; i++) {
        const KeyBits key = KeyBits::random(short_len(rng), rng);
        std::string trace = render_ops(encode_ops(key).attacker_view());
        // Half the traces get one random edit so the invalid side is exercised.
        const int edit = coin(rng);
        std::uniform_int_distribution<std::size_t> pos(0, trace.size() - 1);
        if (edit == 1)
            trace[pos(rng)] = kOps[op_pick(rng)];
        else if (edit == 2)
            trace.insert(pos(rng), 1, kOps[op_pick(rng)]);
        else if (edit == 3 && trace.size() > 1)
            trace.erase(pos(rng), 1);

        const auto matches = brute_force_matches(trace);
        std::optional<std::string> got;
        try {
            got = decode(parse_ops(trace)).to_binary();
        } catch (const DecodeError &) {
        }
        valid += !matches.empty();
        const bool agree = matches.size() > 1 ? false
                           : matches.empty()  ? !got.has_value()
                                              : got && *got == matches.front();
        if (!agree)
            oracle_bad++;
    }
    o.passed = round_trip_bad == 0 && oracle_bad == 0;
    o.detail = std::to_string(round_trip_bad) + " round-trip mismatches in 10000 keys, " +
               std::to_string(oracle_bad) + " brute-force disagreements in 1000 traces (" +
               std::to_string(valid) + " parseable)";
    return o;
}

Outcome prime_probe_oracle() {
    Outcome o;
    std::size_t mismatches = 0, decoded_ok = 0;
    for (std::uint32_t k = 0; k < 16; k++) {
        std::string bin;
        for (int b = 3; b >= 0; b--)
            bin.push_back(((k >> b) & 1u) ? '1' : '0');
        const KeyBits key = KeyBits::from_binary(bin);

        CacheState cache({{"C", 2, 4}}, LatencyModel::noiseless());
        const VictimLines lines = register_victim_lines(cache, VictimLayout{0, 1, 2});
        const auto set_ops = set_operation_map(cache, lines);
        std::vector<EvictionSet> targets;
        for (std::size_t s = 0; s < 3; s++)
            targets.push_back(build_eviction_set(cache, s));
        VictimProcess victim = VictimProcess::launch(key, lines, std::nullopt);
        const auto verdicts = prime_probe(victim, cache, targets);

        const std::vector<bool> expected = enumerate_prime_probe(reference_ops(k, 4));
        if (verdicts.size() != expected.size()) {
            mismatches++;
            continue;
        }
        for (std::size_t i = 0; i < expected.size(); i++)
            mismatches += verdicts[i].evicted != expected[i];
        try {
            decoded_ok += decode(observed_ops(verdicts, set_ops)) == key;
        } catch (const DecodeError &) {
        }
    }
    o.passed = mismatches == 0 && decoded_ok == 16;
    o.detail = std::to_string(decoded_ok) + "/16 keys decoded, " + std::to_string(mismatches) +
               " verdicts differ from the LRU enumeration";
    return o;
}

Outcome cpa() {
    Outcome o;
    auto rng = make_stream(kSeed, Stream::Keys);
    std::size_t strict = 0, positions = 0, keys_exact = 0, library_disagrees = 0;
    for (std::size_t k = 0; k < 20; k++) {
        Block key;
        for (auto &b : key)
            b = static_cast<std::uint8_t>(rng() & 0xff);
        LeakageParams params;
        params.rng_seed = kSeed + k;
        const auto traces = synth_aes_traces(key, 1000, params);
        const Block recovered = cpa_recover(traces).key;
        keys_exact += recovered == key;

        for (std::size_t byte = 0; byte < 16; byte++) {
            std::vector<double> leak;
            for (const auto &t : traces)
                leak.push_back(t.samples[t.leakage_offset + byte]);
            std::array<double, 256> score{};
            for (int g = 0; g < 256; g++) {
                std::vector<double> model;
                for (const auto &t : traces)
                    model.push_back(std::popcount(
                        static_cast<unsigned>(kAesSbox[(*t.plaintext)[byte] ^ g])));
                score[g] = std::abs(reference_pearson(model, leak));
            }
            bool is_strict = true;
            for (int g = 0; g < 256; g++)
                if (g != key[byte] && score[g] >= score[key[byte]])
                    is_strict = false;
            strict += is_strict;
            positions++;
            const auto best = static_cast<std::uint8_t>(
                std::max_element(score.begin(), score.end()) - score.begin());
            library_disagrees += best != recovered[byte];
        }
    }
    const double fraction = static_cast<double>(strict) / static_cast<double>(positions);
    o.passed = fraction >= 0.95 && keys_exact == 20 && library_disagrees == 0;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "%zu/20 keys fully recovered, strict argmax in %zu/%zu byte positions (%.1f%%), "
                  "%zu disagreements with reference CPA",
                  keys_exact, strict, positions, 100.0 * fraction, library_disagrees);
    o.detail = buf;
    return o;
}

Outcome spa() {
    Outcome o;
    auto rng = make_stream(kSeed, Stream::Keys);
    LeakageParams params;
    params.noise_sigma = 0.0;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < 100; i++) {
        const KeyBits key = KeyBits::random(64, rng);
        try {
            failures += spa_recover(synth_rsa_trace(key, params), params) != key;
        } catch (const DecodeError &) {
            failures++;
        }
    }
    o.passed = failures == 0;
    o.detail = std::to_string(failures) + " failures over 100 noiseless 64-bit keys";
    return o;
}

Outcome determinism() {
    Outcome o;
    const std::string a = render_selftest(run_selftest(kSeed), kSeed);
    const std::string b = render_selftest(run_selftest(kSeed), kSeed);
    o.passed = a == b;
    o.detail = o.passed ? "two selftest reports byte-identical (" + std::to_string(a.size()) +
                              " bytes)"
                        : "selftest reports differ";
    return o;
}

Outcome passivity() {
    Outcome o;
    std::size_t ff_loads = 0, fr_loads = 0, campaigns = 0;
    const std::vector<std::optional<ShieldConfig>> shields = {
        std::nullopt, ShieldConfig{ShieldMode::Uniform},
        ShieldConfig{ShieldMode::Deceptive, 0.5, kSeed}};
    for (const char *hex : kTableKeys)
        for (const auto &shield : shields)
            for (std::uint64_t run = 0; run < 10; run++) {
                LatencyModel model;
                model.rng_seed = kSeed + run;
                for (bool flush_only : {true, false}) {
                    CacheState cache(model);
                    const VictimLines lines = register_victim_lines(cache, VictimLayout{});
                    std::optional<ShieldConfig> s = shield;
                    if (s)
                        s->rng_seed += run;
                    VictimProcess victim = VictimProcess::launch(KeyBits::from_hex(hex), lines, s);
                    if (flush_only)
                        flush_flush(victim, cache, lines);
                    else
                        flush_reload(victim, cache, lines);
                    std::size_t loads = 0;
                    for (const CacheOpRecord &r : cache.log())
                        if (r.actor == Actor::Attacker && r.op == CacheOp::Access &&
                            (r.line == lines.square || r.line == lines.modulo ||
                             r.line == lines.multiply))
                            loads++;
                    (flush_only ? ff_loads : fr_loads) += loads;
                    campaigns += flush_only;
                }
            }
    bool selftest_ok = false;
    for (const auto &c : run_selftest(kSeed))
        if (c.name == "flush_flush_passivity")
            selftest_ok = c.passed;
    // Flush+Reload loads must show up, otherwise the audit would be blind.
    o.passed = ff_loads == 0 && fr_loads > 0 && selftest_ok;
    o.detail = std::to_string(ff_loads) + " Flush+Flush loads of monitored lines over " +
               std::to_string(campaigns) + " campaigns (Flush+Reload control: " +
               std::to_string(fr_loads) + "), selftest audit " + (selftest_ok ? "ok" : "failed");
    return o;
}

} // namespace

int main() {
    report(1, "uniform shield reads all ones", 1.0, uniform_shield);
    report(2, "no-defense recovery", 1.0, no_defense);
    report(3, "deceptive shield properties", 5.0, deceptive_shield);
    report(4, "overhead bound", 5.0, overhead);
    report(5, "decoder oracle equivalence", 10.0, decoder_oracle);
    report(6, "Prime+Probe small-instance oracle", 1.0, prime_probe_oracle);
    report(7, "CPA recovery", 60.0, cpa);
    report(8, "SPA round trip", 5.0, spa);
    report(9, "selftest determinism", 0, determinism);
    report(10, "Flush+Flush passivity audit", 0, passivity);
    std::printf("%d of 10 criteria failed\n", g_failed);
    return g_failed == 0 ? 0 : 1;
}

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

#include "scasim/attackers.h"

#include <algorithm>
#include <array>
#include <cctype>

namespace scasim {

namespace {

std::array<LineId, 3> probe_order(const VictimLines &lines) {
    return {lines.square, lines.modulo, lines.multiply};
}

std::size_t resolve_rounds(const VictimProcess &victim, std::size_t rounds) {
    return rounds == kUntilVictimDone ? victim.remaining() : rounds;
}

std::uint64_t attacker_slot(std::size_t round) { return round * kVictimSlotStride + 1; }

} // namespace

KeyBits decode(std::span<const OpKind> ops) {
    if (ops.empty())
        throw DecodeError("empty observation sequence", 0);
    std::vector<bool> bits;
    std::size_t pos = 0;
    while (pos < ops.size()) {
        if (ops[pos] != OpKind::Square)
            throw DecodeError(std::string("expected S, found ") + to_char(ops[pos]), pos);
        if (pos + 1 >= ops.size())
            throw DecodeError("truncated after S", pos + 1);
        if (ops[pos + 1] != OpKind::Reduce)
            throw DecodeError(std::string("expected R after S, found ") + to_char(ops[pos + 1]),
                              pos + 1);
        pos += 2;
        if (pos < ops.size() && ops[pos] == OpKind::Multiply) {
            if (pos + 1 >= ops.size())
                throw DecodeError("truncated after M", pos + 1);
            if (ops[pos + 1] != OpKind::Reduce)
                throw DecodeError(std::string("expected R after M, found ") +
                                      to_char(ops[pos + 1]),
                                  pos + 1);
            pos += 2;
            bits.push_back(true);
        } else {
            bits.push_back(false);
        }
    }
    return KeyBits(std::move(bits));
}

std::vector<ProbeSample> flush_reload(VictimProcess &victim, CacheState &cache,
                                      const VictimLines &monitored, std::size_t rounds) {
    const auto lines = probe_order(monitored);
    const std::size_t n = resolve_rounds(victim, rounds);
    std::vector<ProbeSample> samples;
    samples.reserve(n * lines.size());
    for (std::size_t round = 0; round < n; round++) {
        for (LineId line : lines)
            cache.flush(line, Actor::Attacker);
        victim.step(cache);
        for (LineId line : lines) {
            const Cycles t = cache.access(line, Actor::Attacker);
            samples.push_back({attacker_slot(round), line, t, cache.classify(t)});
        }
    }
    return samples;
}

std::vector<ProbeSample> flush_flush(VictimProcess &victim, CacheState &cache,
                                     const VictimLines &monitored, std::size_t rounds) {
    const auto lines = probe_order(monitored);
    const std::size_t n = resolve_rounds(victim, rounds);
    std::vector<ProbeSample> samples;
    samples.reserve(n * lines.size());
    for (LineId line : lines)
        cache.flush(line, Actor::Attacker);
    for (std::size_t round = 0; round < n; round++) {
        victim.step(cache);
        for (LineId line : lines) {
            const Cycles t = cache.flush(line, Actor::Attacker);
            const Verdict v = cache.model().flush_found_line(t) ? Verdict::Hit : Verdict::Miss;
            samples.push_back({attacker_slot(round), line, t, v});
        }
    }
    return samples;
}

EvictionSet build_eviction_set(CacheState &cache, std::size_t set_index) {
    EvictionSet set{set_index, {}};
    for (std::size_t way = 0; way < cache.llc_ways(); way++)
        set.lines.push_back(cache.register_line(
            "EV" + std::to_string(set_index) + "_" + std::to_string(way), set_index));
    return set;
}

std::vector<SetVerdict> prime_probe(VictimProcess &victim, CacheState &cache,
                                    std::span<const EvictionSet> targets, std::size_t rounds) {
    for (const auto &target : targets)
        if (target.lines.size() < cache.llc_ways())
            throw std::invalid_argument("eviction set for set " +
                                        std::to_string(target.set_index) + " has " +
                                        std::to_string(target.lines.size()) + " lines, need " +
                                        std::to_string(cache.llc_ways()));
    const std::size_t n = resolve_rounds(victim, rounds);
    std::vector<SetVerdict> verdicts;
    verdicts.reserve(n * targets.size());
    for (std::size_t round = 0; round < n; round++) {
        for (const auto &target : targets)
            cache.prime(target.set_index, target.lines);
        victim.step(cache);
        for (const auto &target : targets) {
            bool evicted = false;
            for (const auto &[line, t] : cache.probe(target.set_index, target.lines))
                evicted = evicted || cache.classify(t) == Verdict::Miss;
            verdicts.push_back({attacker_slot(round), target.set_index, evicted});
        }
    }
    return verdicts;
}

std::vector<OpKind> observed_ops(std::span<const ProbeSample> samples,
                                 const VictimLines &monitored) {
    std::vector<OpKind> ops;
    std::size_t i = 0;
    while (i < samples.size()) {
        const std::uint64_t slot = samples[i].slot;
        std::array<bool, 3> seen{};
        for (; i < samples.size() && samples[i].slot == slot; i++) {
            if (samples[i].verdict != Verdict::Hit)
                continue;
            if (samples[i].line == monitored.square)
                seen[0] = true;
            else if (samples[i].line == monitored.modulo)
                seen[1] = true;
            else if (samples[i].line == monitored.multiply)
                seen[2] = true;
        }
        if (seen[0])
            ops.push_back(OpKind::Square);
        if (seen[1])
            ops.push_back(OpKind::Reduce);
        if (seen[2])
            ops.push_back(OpKind::Multiply);
    }
    return ops;
}

std::map<std::size_t, OpKind> set_operation_map(const CacheState &cache,
                                                const VictimLines &lines) {
    std::map<std::size_t, OpKind> out;
    const std::array<std::pair<LineId, OpKind>, 3> code = {
        {{lines.square, OpKind::Square},
         {lines.modulo, OpKind::Reduce},
         {lines.multiply, OpKind::Multiply}}};
    for (const auto &[line, kind] : code) {
        const auto [it, fresh] = out.emplace(cache.set_index(line), kind);
        if (!fresh)
            throw DecodeError(std::string("ambiguous channel: ") + to_char(it->second) + " and " +
                                  to_char(kind) + " share cache set " +
                                  std::to_string(it->first),
                              0);
    }
    return out;
}

std::vector<OpKind> observed_ops(std::span<const SetVerdict> verdicts,
                                 const std::map<std::size_t, OpKind> &set_ops) {
    std::vector<OpKind> ops;
    std::size_t i = 0;
    while (i < verdicts.size()) {
        const std::uint64_t slot = verdicts[i].slot;
        std::array<bool, 3> seen{};
        for (; i < verdicts.size() && verdicts[i].slot == slot; i++) {
            if (!verdicts[i].evicted)
                continue;
            auto it = set_ops.find(verdicts[i].set_index);
            if (it == set_ops.end())
                continue;
            switch (it->second) {
            case OpKind::Square:
                seen[0] = true;
                break;
            case OpKind::Reduce:
                seen[1] = true;
                break;
            case OpKind::Multiply:
                seen[2] = true;
                break;
            }
        }
        if (seen[0])
            ops.push_back(OpKind::Square);
        if (seen[1])
            ops.push_back(OpKind::Reduce);
        if (seen[2])
            ops.push_back(OpKind::Multiply);
    }
    return ops;
}

std::size_t attacker_accesses(const CacheState &cache, std::span<const LineId> lines) {
    return static_cast<std::size_t>(
        std::count_if(cache.log().begin(), cache.log().end(), [&](const CacheOpRecord &r) {
            return r.op == CacheOp::Access && r.actor == Actor::Attacker &&
                   std::find(lines.begin(), lines.end(), r.line) != lines.end();
        }));
}

const char *to_string(AttackKind kind) {
    switch (kind) {
    case AttackKind::FlushReload:
        return "FlushReload";
    case AttackKind::FlushFlush:
        return "FlushFlush";
    case AttackKind::PrimeProbe:
        return "PrimeProbe";
    }
    return "?";
}

AttackKind parse_attack_kind(std::string_view text) {
    std::string key;
    for (char c : text)
        if (std::isalnum(static_cast<unsigned char>(c)))
            key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (key == "flushreload" || key == "fr")
        return AttackKind::FlushReload;
    if (key == "flushflush" || key == "ff")
        return AttackKind::FlushFlush;
    if (key == "primeprobe" || key == "pp")
        return AttackKind::PrimeProbe;
    throw std::invalid_argument("unknown cache attack '" + std::string(text) + "'");
}

AttackRun run_attack(const AttackSetup &setup, const KeyBits &key,
                     const std::optional<ShieldConfig> &shield, std::uint64_t run) {
    LatencyModel latency = setup.latency;
    latency.rng_seed += run;
    CacheState cache(setup.levels, latency);
    const VictimLines lines = register_victim_lines(cache, setup.layout);

    std::optional<ShieldConfig> run_shield;
    if (shield)
        run_shield = shield->for_run(run);
    VictimProcess victim = VictimProcess::launch(key, lines, run_shield);

    AttackRun out;
    out.executed = victim.trace();
    try {
        switch (setup.kind) {
        case AttackKind::FlushReload: {
            const auto samples = flush_reload(victim, cache, lines);
            out.observed = observed_ops(samples, lines);
            break;
        }
        case AttackKind::FlushFlush: {
            const auto samples = flush_flush(victim, cache, lines);
            out.observed = observed_ops(samples, lines);
            break;
        }
        case AttackKind::PrimeProbe: {
            const auto set_ops = set_operation_map(cache, lines);
            std::vector<EvictionSet> targets;
            for (const auto &[set, kind] : set_ops)
                targets.push_back(build_eviction_set(cache, set));
            const auto verdicts = prime_probe(victim, cache, targets);
            out.observed = observed_ops(verdicts, set_ops);
            break;
        }
        }
        const std::array<LineId, 3> code = {lines.square, lines.modulo, lines.multiply};
        out.monitored_reloads = attacker_accesses(cache, code);
        out.decoded = decode(out.observed);
    } catch (const DecodeError &e) {
        out.error = std::string(e.what()) + " at offset " + std::to_string(e.offset());
    }
    return out;
}

AttackResult aggregate_runs(const KeyBits &key, std::vector<AttackRun> runs) {
    AttackResult result;
    result.iterations = runs.size();
    result.per_bit_votes.resize(key.size());
    for (auto &run : runs) {
        if (run.decoded && run.decoded->size() == key.size()) {
            for (std::size_t b = 0; b < key.size(); b++) {
                if ((*run.decoded)[b])
                    result.per_bit_votes[b].ones++;
                else
                    result.per_bit_votes[b].zeros++;
            }
        } else {
            if (run.decoded && run.error.empty())
                run.error = "decoded length " + std::to_string(run.decoded->size()) +
                            " != key length " + std::to_string(key.size());
            result.failures++;
        }
    }
    result.runs = std::move(runs);
    if (result.failures == result.iterations)
        return result;

    std::vector<bool> bits(key.size());
    for (std::size_t b = 0; b < key.size(); b++)
        bits[b] = result.per_bit_votes[b].ones >= result.per_bit_votes[b].zeros;
    result.recovered = KeyBits(std::move(bits));
    return result;
}

AttackResult iterate_attack(const AttackSetup &setup, const KeyBits &key,
                            const std::optional<ShieldConfig> &shield, std::size_t n_iterations) {
    if (n_iterations == 0)
        throw std::invalid_argument("n_iterations must be at least 1");
    std::vector<AttackRun> runs;
    runs.reserve(n_iterations);
    for (std::size_t i = 0; i < n_iterations; i++)
        runs.push_back(run_attack(setup, key, shield, i));
    AttackResult result = aggregate_runs(key, std::move(runs));
    if (result.failures == n_iterations)
        throw AttackError("all " + std::to_string(n_iterations) + " iterations failed to decode");
    return result;
}

} // namespace scasim

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

#include "scasim/cache_model.h"
#include "scasim/entropy_shield.h"
#include "scasim/key_bits.h"
#include "scasim/operation_trace.h"
#include "scasim/victim_rsa.h"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scasim {

/// Malformed or ambiguous observation sequence. `offset` is the index of
/// the observation where parsing failed.
class DecodeError : public std::runtime_error {
  public:
    DecodeError(const std::string &what, std::size_t offset)
        : std::runtime_error(what), offset_(offset) {}
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

/// Every iteration of a campaign failed to decode.
class AttackError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Greedy parse of Square/Reduce[/Multiply/Reduce] groups back into bits.
KeyBits decode(std::span<const OpKind> ops);

/// One timed attacker measurement. `verdict` is Hit when the line was
/// found cached: by a reload for Flush+Reload, by the flush latency for
/// Flush+Flush.
struct ProbeSample {
    std::uint64_t slot;
    LineId line;
    Cycles latency;
    Verdict verdict;
};

/// Rounds to run when the caller does not say: one per victim token.
inline constexpr std::size_t kUntilVictimDone = 0;

std::vector<ProbeSample> flush_reload(VictimProcess &victim, CacheState &cache,
                                      const VictimLines &monitored,
                                      std::size_t rounds = kUntilVictimDone);

/// Never loads a monitored line; the only signal is the flush latency.
std::vector<ProbeSample> flush_flush(VictimProcess &victim, CacheState &cache,
                                     const VictimLines &monitored,
                                     std::size_t rounds = kUntilVictimDone);

/// Attacker lines filling one last-level set.
struct EvictionSet {
    std::size_t set_index;
    std::vector<LineId> lines;
};

EvictionSet build_eviction_set(CacheState &cache, std::size_t set_index);

struct SetVerdict {
    std::uint64_t slot;
    std::size_t set_index;
    bool evicted; // some probe of this set missed
};

std::vector<SetVerdict> prime_probe(VictimProcess &victim, CacheState &cache,
                                    std::span<const EvictionSet> targets,
                                    std::size_t rounds = kUntilVictimDone);

/// Operations seen per slot, in S, R, M order within a slot.
std::vector<OpKind> observed_ops(std::span<const ProbeSample> samples,
                                 const VictimLines &monitored);

/// Which operation each monitored set reveals. Throws DecodeError when two
/// code lines share a set, since a set-granular channel cannot tell them apart.
std::map<std::size_t, OpKind> set_operation_map(const CacheState &cache,
                                                const VictimLines &lines);

std::vector<OpKind> observed_ops(std::span<const SetVerdict> verdicts,
                                 const std::map<std::size_t, OpKind> &set_ops);

/// Attacker load count on the given lines, from the cache op log.
std::size_t attacker_accesses(const CacheState &cache, std::span<const LineId> lines);

enum class AttackKind { FlushReload, FlushFlush, PrimeProbe };

const char *to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view text);

struct AttackSetup {
    AttackKind kind = AttackKind::FlushReload;
    LatencyModel latency;
    std::vector<LevelGeometry> levels = CacheState::default_levels();
    VictimLayout layout;
};

/// One attack against one fresh victim run.
struct AttackRun {
    OperationTrace executed;            // ground truth, provenance included
    std::vector<OpKind> observed;       // what the attacker saw
    std::optional<KeyBits> decoded;     // empty when decoding failed
    std::string error;
    std::size_t monitored_reloads = 0;  // attacker loads of victim code lines
};

/// `run` selects the sub-seed for latency jitter and shield flips.
AttackRun run_attack(const AttackSetup &setup, const KeyBits &key,
                     const std::optional<ShieldConfig> &shield, std::uint64_t run);

struct BitVotes {
    std::size_t ones = 0;
    std::size_t zeros = 0;
};

struct AttackResult {
    KeyBits recovered;                 // per-bit majority, ties to 1
    std::vector<BitVotes> per_bit_votes;
    std::vector<AttackRun> runs;       // in iteration order
    std::size_t iterations = 0;
    std::size_t failures = 0;
};

/// Per-bit majority over finished runs, ties to 1. Runs that failed or
/// decoded to the wrong length count as failures and do not vote. Leaves
/// `recovered` empty when every run failed.
AttackResult aggregate_runs(const KeyBits &key, std::vector<AttackRun> runs);

/// Majority vote over `n_iterations` runs with sub-seeds 0..n-1 added to
/// the latency and shield seeds. Runs that fail to decode, or decode to the
/// wrong length, do not vote. Throws AttackError if none succeed.
AttackResult iterate_attack(const AttackSetup &setup, const KeyBits &key,
                            const std::optional<ShieldConfig> &shield,
                            std::size_t n_iterations);

} // namespace scasim

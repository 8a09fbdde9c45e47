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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace scasim {

using Cycles = double;

enum class Verdict { Hit, Miss };
enum class Actor { Victim, Attacker };
enum class CacheOp { Access, Flush };

const char *to_string(Verdict v);

/// Handle to a line registered with a CacheState.
struct LineId {
    std::uint32_t index = 0;
    friend auto operator<=>(const LineId &, const LineId &) = default;
};

struct LevelGeometry {
    std::string name;
    std::size_t ways = 0;
    std::size_t sets = 0;
};

/// Latency distributions for the timing channel. All latencies are
/// Gaussian around their mean with a common jitter, clamped to >= 1 cycle.
struct LatencyModel {
    Cycles hit_mean = 50.0;
    Cycles miss_mean = 200.0;
    Cycles flush_present_mean = 160.0;
    Cycles flush_absent_mean = 130.0;
    Cycles jitter_sigma = 5.0;
    Cycles threshold = 100.0;
    std::uint64_t rng_seed = 0;

    /// Throws std::invalid_argument unless the hit/miss classes are 3 sigma
    /// clear of the threshold and a flush of a present line is slower than
    /// a flush of an absent one.
    void validate() const;

    /// Miss iff latency > threshold.
    Verdict classify(Cycles latency) const {
        return latency > threshold ? Verdict::Miss : Verdict::Hit;
    }

    /// Default means with jitter switched off.
    static LatencyModel noiseless() {
        LatencyModel m;
        m.jitter_sigma = 0.0;
        return m;
    }

    Cycles flush_threshold() const { return 0.5 * (flush_present_mean + flush_absent_mean); }

    /// True when the flush latency indicates the line was cached.
    bool flush_found_line(Cycles latency) const { return latency > flush_threshold(); }
};

struct CacheOpRecord {
    CacheOp op;
    LineId line;
    Actor actor;
};

/// Inclusive multi-level cache with strict per-set LRU replacement.
///
/// Level 0 is the fastest level; the last level is the largest. A line
/// registered with set index s lives in set (s mod sets) of each level.
/// A line resident in a level is always resident in every larger level.
class CacheState {
  public:
    CacheState(std::vector<LevelGeometry> levels, LatencyModel model);
    explicit CacheState(LatencyModel model = {})
        : CacheState(default_levels(), std::move(model)) {}

    /// L1 8-way x 64 sets, LLC 16-way x 1024 sets.
    static std::vector<LevelGeometry> default_levels();

    LineId register_line(std::string symbol, std::size_t set_index);
    std::size_t line_count() const { return lines_.size(); }
    const std::string &symbol(LineId line) const;
    std::size_t set_index(LineId line) const;

    /// Timed load. Fills every level on a miss, refreshes LRU on a hit.
    Cycles access(LineId line, Actor actor = Actor::Attacker);
    /// Timed clflush. Removes the line from every level.
    Cycles flush(LineId line, Actor actor = Actor::Attacker);

    /// Loads `lines` in order so they occupy `set_index` at every level.
    /// Requires exactly as many lines as the largest level's associativity,
    /// all mapping to `set_index`.
    void prime(std::size_t set_index, std::span<const LineId> lines);

    /// Times one access per primed line. Lines are visited in reverse prime
    /// order (most recently used first) so that a single victim eviction
    /// shows up as exactly one miss instead of an LRU cascade.
    std::vector<std::pair<LineId, Cycles>> probe(std::size_t set_index,
                                                 std::span<const LineId> lines);

    Verdict classify(Cycles latency) const { return model_.classify(latency); }

    bool resident(LineId line) const;
    bool resident_at(LineId line, std::size_t level) const;
    /// Number of lines currently held in one set of one level.
    std::size_t occupancy(std::size_t level, std::size_t set_index) const;
    /// Checks inclusivity and associativity bounds across the whole cache.
    bool audit() const;

    const std::vector<LevelGeometry> &levels() const { return geometry_; }
    std::size_t llc_ways() const { return geometry_.back().ways; }
    const LatencyModel &model() const { return model_; }

    const std::vector<CacheOpRecord> &log() const { return log_; }
    void clear_log() { log_.clear(); }
    void set_logging(bool enabled) { logging_ = enabled; }

  private:
    struct LineInfo {
        std::string symbol;
        std::size_t set_index;
        std::uint32_t level_mask; // bit i set => resident in level i
    };

    // Per level, per set: line indices ordered LRU (front) to MRU (back).
    using SetOrder = std::vector<std::uint32_t>;

    const LineInfo &info(LineId line) const;
    std::size_t local_set(std::size_t level, std::size_t set_index) const {
        return set_index % geometry_[level].sets;
    }
    void insert_mru(std::size_t level, std::uint32_t line);
    void remove_from(std::size_t level, std::uint32_t line);
    Cycles sample(Cycles mean);
    void record(CacheOp op, LineId line, Actor actor);

    std::vector<LevelGeometry> geometry_;
    LatencyModel model_;
    std::vector<LineInfo> lines_;
    std::vector<std::vector<SetOrder>> sets_;
    std::mt19937_64 rng_;
    std::vector<CacheOpRecord> log_;
    bool logging_ = true;
};

} // namespace scasim

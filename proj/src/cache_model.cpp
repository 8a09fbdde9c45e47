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

#include "scasim/cache_model.h"

#include "scasim/rng.h"

#include <algorithm>
#include <stdexcept>

namespace scasim {

const char *to_string(Verdict v) { return v == Verdict::Hit ? "Hit" : "Miss"; }

void LatencyModel::validate() const {
    if (jitter_sigma < 0.0)
        throw std::invalid_argument("jitter_sigma must be non-negative");
    if (!(hit_mean + 3.0 * jitter_sigma < threshold))
        throw std::invalid_argument("hit_mean + 3*jitter_sigma must be below threshold");
    if (!(threshold < miss_mean - 3.0 * jitter_sigma))
        throw std::invalid_argument("threshold must be below miss_mean - 3*jitter_sigma");
    if (!(flush_present_mean > flush_absent_mean))
        throw std::invalid_argument("flush_present_mean must exceed flush_absent_mean");
}

std::vector<LevelGeometry> CacheState::default_levels() {
    return {{"L1", 8, 64}, {"LLC", 16, 1024}};
}

CacheState::CacheState(std::vector<LevelGeometry> levels, LatencyModel model)
    : geometry_(std::move(levels)), model_(model), rng_(make_stream(model.rng_seed, Stream::Latency)) {
    model_.validate();
    if (geometry_.empty() || geometry_.size() > 32)
        throw std::invalid_argument("cache needs between 1 and 32 levels");
    for (const auto &level : geometry_) {
        if (level.ways == 0 || level.sets == 0)
            throw std::invalid_argument("level " + level.name + " has zero ways or sets");
        if (geometry_.back().sets % level.sets != 0)
            throw std::invalid_argument("set count of " + level.name +
                                        " must divide the last-level set count");
    }
    sets_.resize(geometry_.size());
    for (std::size_t l = 0; l < geometry_.size(); l++)
        sets_[l].resize(geometry_[l].sets);
}

LineId CacheState::register_line(std::string symbol, std::size_t set_index) {
    if (set_index >= geometry_.back().sets)
        throw std::invalid_argument("set index " + std::to_string(set_index) + " out of range");
    lines_.push_back({std::move(symbol), set_index, 0});
    return LineId{static_cast<std::uint32_t>(lines_.size() - 1)};
}

const CacheState::LineInfo &CacheState::info(LineId line) const {
    if (line.index >= lines_.size())
        throw std::invalid_argument("unknown line id " + std::to_string(line.index));
    return lines_[line.index];
}

const std::string &CacheState::symbol(LineId line) const { return info(line).symbol; }

std::size_t CacheState::set_index(LineId line) const { return info(line).set_index; }

Cycles CacheState::sample(Cycles mean) {
    Cycles value = mean;
    if (model_.jitter_sigma > 0.0) {
        std::normal_distribution<double> jitter(mean, model_.jitter_sigma);
        value = jitter(rng_);
    }
    return std::max(value, 1.0);
}

void CacheState::record(CacheOp op, LineId line, Actor actor) {
    if (logging_)
        log_.push_back({op, line, actor});
}

void CacheState::remove_from(std::size_t level, std::uint32_t line) {
    auto &order = sets_[level][local_set(level, lines_[line].set_index)];
    order.erase(std::remove(order.begin(), order.end(), line), order.end());
    lines_[line].level_mask &= ~(1u << level);
}

void CacheState::insert_mru(std::size_t level, std::uint32_t line) {
    auto &order = sets_[level][local_set(level, lines_[line].set_index)];
    if (order.size() >= geometry_[level].ways) {
        const std::uint32_t evicted = order.front();
        // Back-invalidate: evicting from a level evicts from all faster ones.
        for (std::size_t l = 0; l <= level; l++)
            if (lines_[evicted].level_mask & (1u << l))
                remove_from(l, evicted);
    }
    order.push_back(line);
    lines_[line].level_mask |= 1u << level;
}

Cycles CacheState::access(LineId line, Actor actor) {
    const bool was_cached = info(line).level_mask != 0;
    const Cycles latency = sample(was_cached ? model_.hit_mean : model_.miss_mean);
    record(CacheOp::Access, line, actor);

    // Fill largest level first so inclusivity holds after every step.
    for (std::size_t l = geometry_.size(); l-- > 0;) {
        if (lines_[line.index].level_mask & (1u << l)) {
            auto &order = sets_[l][local_set(l, lines_[line.index].set_index)];
            auto it = std::find(order.begin(), order.end(), line.index);
            std::rotate(it, it + 1, order.end());
        } else {
            insert_mru(l, line.index);
        }
    }
    return latency;
}

Cycles CacheState::flush(LineId line, Actor actor) {
    const bool was_cached = info(line).level_mask != 0;
    const Cycles latency =
        sample(was_cached ? model_.flush_present_mean : model_.flush_absent_mean);
    record(CacheOp::Flush, line, actor);
    for (std::size_t l = 0; l < geometry_.size(); l++)
        if (lines_[line.index].level_mask & (1u << l))
            remove_from(l, line.index);
    return latency;
}

void CacheState::prime(std::size_t set_index, std::span<const LineId> lines) {
    if (lines.size() != llc_ways())
        throw std::invalid_argument("prime needs " + std::to_string(llc_ways()) +
                                    " lines, got " + std::to_string(lines.size()));
    for (LineId line : lines)
        if (info(line).set_index != set_index)
            throw std::invalid_argument("line " + info(line).symbol + " does not map to set " +
                                        std::to_string(set_index));
    for (LineId line : lines)
        access(line, Actor::Attacker);
}

std::vector<std::pair<LineId, Cycles>> CacheState::probe(std::size_t set_index,
                                                         std::span<const LineId> lines) {
    for (LineId line : lines)
        if (info(line).set_index != set_index)
            throw std::invalid_argument("line " + info(line).symbol + " does not map to set " +
                                        std::to_string(set_index));
    std::vector<std::pair<LineId, Cycles>> out;
    out.reserve(lines.size());
    for (auto it = lines.rbegin(); it != lines.rend(); ++it)
        out.emplace_back(*it, access(*it, Actor::Attacker));
    return out;
}

bool CacheState::resident(LineId line) const { return info(line).level_mask != 0; }

bool CacheState::resident_at(LineId line, std::size_t level) const {
    if (level >= geometry_.size())
        throw std::invalid_argument("level out of range");
    return (info(line).level_mask & (1u << level)) != 0;
}

std::size_t CacheState::occupancy(std::size_t level, std::size_t set_index) const {
    if (level >= geometry_.size())
        throw std::invalid_argument("level out of range");
    return sets_[level][local_set(level, set_index)].size();
}

bool CacheState::audit() const {
    for (std::size_t l = 0; l < geometry_.size(); l++) {
        std::size_t held = 0;
        for (const auto &order : sets_[l]) {
            if (order.size() > geometry_[l].ways)
                return false;
            for (std::uint32_t line : order)
                if (!(lines_[line].level_mask & (1u << l)))
                    return false;
            held += order.size();
        }
        const auto flagged = std::count_if(lines_.begin(), lines_.end(), [l](const LineInfo &li) {
            return (li.level_mask & (1u << l)) != 0;
        });
        if (static_cast<std::size_t>(flagged) != held)
            return false;
    }
    for (const auto &line : lines_) {
        // Residency must be a suffix of the level chain.
        bool seen = false;
        for (std::size_t l = 0; l < geometry_.size(); l++) {
            const bool here = (line.level_mask & (1u << l)) != 0;
            if (seen && !here)
                return false;
            seen = seen || here;
        }
    }
    return true;
}

} // namespace scasim

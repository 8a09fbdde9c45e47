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

#include "gtest/gtest.h"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace scasim;

namespace {

// Upper tail of N(0,1) beyond z sigma.
double gaussian_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

} // namespace

TEST(LatencyModel, DefaultsAreSeparable) {
    LatencyModel m;
    EXPECT_NO_THROW(m.validate());
    EXPECT_EQ(m.hit_mean, 50.0);
    EXPECT_EQ(m.miss_mean, 200.0);
    EXPECT_EQ(m.flush_present_mean, 160.0);
    EXPECT_EQ(m.flush_absent_mean, 130.0);
    EXPECT_EQ(m.jitter_sigma, 5.0);
    EXPECT_EQ(m.threshold, 100.0);
}

TEST(LatencyModel, RejectsOverlappingClasses) {
    LatencyModel m;
    m.jitter_sigma = 20.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = LatencyModel{};
    m.flush_present_mean = 120.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(LatencyModel, ClassifyBoundaries) {
    LatencyModel m;
    EXPECT_EQ(m.classify(m.threshold), Verdict::Hit);
    EXPECT_EQ(m.classify(std::nextafter(m.threshold, 1e9)), Verdict::Miss);
    EXPECT_EQ(m.classify(m.miss_mean), Verdict::Miss);
    EXPECT_EQ(m.classify(m.hit_mean), Verdict::Hit);
}

TEST(CacheModel, ColdAccessMissesThenHits) {
    CacheState cache;
    const LineId line = cache.register_line("X", 5);
    EXPECT_EQ(cache.classify(cache.access(line)), Verdict::Miss);
    EXPECT_EQ(cache.classify(cache.access(line)), Verdict::Hit);
    EXPECT_TRUE(cache.resident_at(line, 0));
    EXPECT_TRUE(cache.resident_at(line, 1));
}

TEST(CacheModel, UnknownLineIsRejected) {
    CacheState cache;
    EXPECT_THROW(cache.access(LineId{3}), std::invalid_argument);
    EXPECT_THROW(cache.flush(LineId{0}), std::invalid_argument);
    EXPECT_THROW(cache.register_line("X", 1024), std::invalid_argument);
}

TEST(CacheModel, FlushEvictsFromEveryLevel) {
    CacheState cache;
    const LineId line = cache.register_line("X", 5);
    cache.access(line);
    cache.flush(line);
    EXPECT_FALSE(cache.resident(line));
    EXPECT_EQ(cache.classify(cache.access(line)), Verdict::Miss);
    EXPECT_TRUE(cache.audit());
}

TEST(CacheModel, HitMisclassificationRate) {
    // z = (100 - 50) / 5 = 10 sigma; expected misclassified count over 10^4
    // samples is 10^4 * tail(10) ~ 7.6e-20, so any miss is a failure.
    EXPECT_LT(gaussian_tail(10.0), 1e-10);
    CacheState cache;
    const LineId line = cache.register_line("X", 5);
    cache.access(line);
    int wrong = 0;
    for (int i = 0; i < 10000; i++)
        wrong += cache.classify(cache.access(line)) == Verdict::Miss;
    EXPECT_EQ(wrong, 0);
}

TEST(CacheModel, FlushLatencyDistinguishesPresence) {
    // Midpoint 145 lies 3 sigma from both means: per-sample error
    // tail(3) = 0.00135, so accuracy should sit near 99.87%.
    const double expected_error = gaussian_tail(3.0);
    EXPECT_NEAR(expected_error, 0.0013499, 1e-6);

    CacheState cache(LatencyModel{.rng_seed = 11});
    const LineId line = cache.register_line("X", 9);
    int correct = 0;
    double present_sum = 0.0, absent_sum = 0.0;
    for (int i = 0; i < 1000; i++) {
        cache.access(line);
        const Cycles present = cache.flush(line);
        const Cycles absent = cache.flush(line);
        present_sum += present;
        absent_sum += absent;
        correct += cache.model().flush_found_line(present);
        correct += !cache.model().flush_found_line(absent);
    }
    EXPECT_GT(present_sum, absent_sum);
    EXPECT_GE(correct / 2000.0, 0.99);
}

TEST(CacheModel, NeverAccessedFlushIsAbsent) {
    LatencyModel m;
    m.jitter_sigma = 0.0;
    CacheState cache(m);
    const LineId line = cache.register_line("X", 9);
    EXPECT_EQ(cache.flush(line), m.flush_absent_mean);
}

TEST(CacheModel, LatencyClampedToOneCycle) {
    LatencyModel m;
    m.hit_mean = 1.0;
    m.jitter_sigma = 5.0;
    m.threshold = 100.0;
    CacheState cache(m);
    const LineId line = cache.register_line("X", 0);
    cache.access(line);
    for (int i = 0; i < 1000; i++)
        EXPECT_GE(cache.access(line), 1.0);
}

TEST(CacheModel, LruEvictionWithinSet) {
    CacheState cache({{"C", 2, 4}}, LatencyModel{});
    const LineId a = cache.register_line("A", 1);
    const LineId b = cache.register_line("B", 1);
    const LineId c = cache.register_line("C", 1);
    cache.access(a);
    cache.access(b);
    cache.access(a); // b becomes LRU
    cache.access(c);
    EXPECT_TRUE(cache.resident(a));
    EXPECT_FALSE(cache.resident(b));
    EXPECT_TRUE(cache.resident(c));
    EXPECT_EQ(cache.occupancy(0, 1), 2u);
}

TEST(CacheModel, LastLevelEvictionBackInvalidates) {
    // L1 has more ways than the 1-way LLC; an LLC eviction must also drop
    // the line from L1.
    CacheState cache({{"L1", 4, 2}, {"LLC", 1, 4}}, LatencyModel{});
    const LineId a = cache.register_line("A", 0);
    const LineId b = cache.register_line("B", 0);
    cache.access(a);
    cache.access(b);
    EXPECT_FALSE(cache.resident_at(a, 0));
    EXPECT_FALSE(cache.resident_at(a, 1));
    EXPECT_TRUE(cache.audit());
}

TEST(CacheModel, PrimeFillsSetAtEveryLevel) {
    CacheState cache;
    std::vector<LineId> lines;
    for (int i = 0; i < 16; i++)
        lines.push_back(cache.register_line("A" + std::to_string(i), 70));
    cache.prime(70, lines);
    EXPECT_EQ(cache.occupancy(1, 70), 16u);
    EXPECT_EQ(cache.occupancy(0, 70), 8u);
    for (const auto &[line, t] : cache.probe(70, lines))
        EXPECT_EQ(cache.classify(t), Verdict::Hit);
}

TEST(CacheModel, PrimeValidatesLines) {
    CacheState cache;
    std::vector<LineId> lines;
    for (int i = 0; i < 16; i++)
        lines.push_back(cache.register_line("A" + std::to_string(i), 70));
    EXPECT_THROW(cache.prime(71, lines), std::invalid_argument);
    lines.pop_back();
    EXPECT_THROW(cache.prime(70, lines), std::invalid_argument);
    lines.push_back(cache.register_line("stray", 3));
    EXPECT_THROW(cache.prime(70, lines), std::invalid_argument);
}

TEST(CacheModel, VictimInPrimedSetCausesExactlyOneMiss) {
    // LLC set after prime (LRU..MRU): A0..A15. The victim load evicts A0:
    // A1..A15,V. Reverse probe touches A15..A1 (hits) -> V,A15..A1, then A0
    // misses and evicts V. One miss, on A0. L1 only ever holds lines that
    // are still in the LLC, so it cannot add misses.
    CacheState cache;
    std::vector<LineId> lines;
    for (int i = 0; i < 16; i++)
        lines.push_back(cache.register_line("A" + std::to_string(i), 70));
    const LineId victim = cache.register_line("V", 70);
    cache.prime(70, lines);
    cache.access(victim, Actor::Victim);
    int misses = 0;
    LineId missed{};
    for (const auto &[line, t] : cache.probe(70, lines)) {
        if (cache.classify(t) == Verdict::Miss) {
            misses++;
            missed = line;
        }
    }
    EXPECT_EQ(misses, 1);
    EXPECT_EQ(missed, lines[0]);
    EXPECT_FALSE(cache.resident(victim));
    EXPECT_TRUE(cache.audit());
}

TEST(CacheModel, VictimInOtherSetLeavesPrimeIntact) {
    CacheState cache;
    std::vector<LineId> lines;
    for (int i = 0; i < 16; i++)
        lines.push_back(cache.register_line("A" + std::to_string(i), 70));
    const LineId victim = cache.register_line("V", 71);
    cache.prime(70, lines);
    cache.access(victim, Actor::Victim);
    for (const auto &[line, t] : cache.probe(70, lines))
        EXPECT_EQ(cache.classify(t), Verdict::Hit);
}

TEST(CacheModel, InclusivityHoldsUnderRandomOps) {
    std::mt19937_64 rng(3);
    CacheState cache({{"L1", 2, 4}, {"L2", 4, 8}, {"LLC", 8, 16}}, LatencyModel{});
    std::vector<LineId> lines;
    for (int i = 0; i < 64; i++)
        lines.push_back(cache.register_line("X" + std::to_string(i), rng() % 16));
    for (int op = 0; op < 20000; op++) {
        const LineId line = lines[rng() % lines.size()];
        if (rng() % 4 == 0)
            cache.flush(line);
        else
            cache.access(line);
        ASSERT_TRUE(cache.audit()) << "after op " << op;
    }
}

TEST(CacheModel, FlushThenAccessAlwaysMisses) {
    std::mt19937_64 rng(5);
    CacheState cache(LatencyModel{.rng_seed = 5});
    std::vector<LineId> lines;
    for (int i = 0; i < 40; i++)
        lines.push_back(cache.register_line("X" + std::to_string(i), rng() % 4));
    for (int op = 0; op < 5000; op++) {
        const LineId line = lines[rng() % lines.size()];
        if (rng() % 3 == 0) {
            cache.flush(line);
            EXPECT_EQ(cache.classify(cache.access(line)), Verdict::Miss);
        } else {
            cache.access(line);
        }
    }
}

TEST(CacheModel, SameSeedSameLatencies) {
    auto run = [](std::uint64_t seed) {
        CacheState cache(LatencyModel{.rng_seed = seed});
        const LineId a = cache.register_line("A", 1);
        const LineId b = cache.register_line("B", 2);
        std::vector<Cycles> out;
        for (int i = 0; i < 200; i++) {
            out.push_back(cache.access(i % 3 ? a : b));
            if (i % 5 == 0)
                out.push_back(cache.flush(a));
        }
        return out;
    };
    EXPECT_EQ(run(42), run(42));
    EXPECT_NE(run(42), run(43));
}

TEST(CacheModel, LogRecordsActors) {
    CacheState cache;
    const LineId a = cache.register_line("A", 1);
    cache.access(a, Actor::Victim);
    cache.flush(a);
    ASSERT_EQ(cache.log().size(), 2u);
    EXPECT_EQ(cache.log()[0].op, CacheOp::Access);
    EXPECT_EQ(cache.log()[0].actor, Actor::Victim);
    EXPECT_EQ(cache.log()[1].op, CacheOp::Flush);
    EXPECT_EQ(cache.log()[1].actor, Actor::Attacker);
}

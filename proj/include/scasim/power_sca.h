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

#include "scasim/key_bits.h"
#include "scasim/operation_trace.h"

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scasim {

using Block = std::array<std::uint8_t, 16>;

/// AES SubBytes table.
extern const std::array<std::uint8_t, 256> kAesSbox;

Block parse_block(std::string_view hex);
std::string block_to_hex(const Block &block);

/// Rectangular pulse drawn while one exponentiation step runs.
struct OpPulse {
    double amplitude;
    std::size_t duration; // samples
};

struct LeakageParams {
    double signal_scale = 1.0;
    double noise_sigma = 2.0;
    std::uint64_t rng_seed = 0;

    // AES mode: byte i leaks at sample leakage_offset + i.
    std::size_t trace_length = 32;
    std::size_t leakage_offset = 8;

    // RSA mode.
    OpPulse square{1.0, 8};
    OpPulse reduce{0.5, 8};
    OpPulse multiply{2.0, 8};

    const OpPulse &pulse(OpKind kind) const;
    /// Smallest gap between two operation amplitudes.
    double amplitude_separation() const;

    void validate_rsa() const;
    void validate_aes() const;
};

struct PowerTrace {
    std::vector<double> samples;
    std::optional<Block> plaintext; // AES mode only
    std::size_t leakage_offset = 0;
};

PowerTrace synth_rsa_trace(const KeyBits &key, const LeakageParams &params);

/// Segments the trace into fixed-duration operation windows, labels each
/// window with the nearest operation amplitude, then decodes the labels.
/// All operations must share one duration. Throws DecodeError when a
/// window is equidistant from two amplitudes or the labels do not parse.
KeyBits spa_recover(const PowerTrace &trace, const LeakageParams &params);

/// One AES-mode trace for a given plaintext; noise drawn from `noise`.
PowerTrace synth_aes_trace(const Block &key, const Block &plaintext, const LeakageParams &params,
                           std::mt19937_64 &noise);

/// n traces with uniformly random plaintexts.
std::vector<PowerTrace> synth_aes_traces(const Block &key, std::size_t n,
                                         const LeakageParams &params);

/// Pearson correlation; 0 when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

using GuessScores = std::array<double, 256>;

struct CpaResult {
    Block key{};
    std::array<GuessScores, 16> correlation{}; // [byte][guess]
};

CpaResult cpa_recover(std::span<const PowerTrace> traces);

/// Correlation of one byte/guess hypothesis against every sample index.
std::vector<double> cpa_correlation_trace(std::span<const PowerTrace> traces, std::size_t byte,
                                          std::uint8_t guess);

struct DpaResult {
    Block key{};
    std::array<GuessScores, 16> difference{}; // |mean1 - mean0| per [byte][guess]
};

/// Difference of means, partitioning on bit 0 of the predicted S-box output.
DpaResult dpa_recover(std::span<const PowerTrace> traces);

/// One row per trace: plaintext hex (empty for RSA traces), then samples.
void write_traces_csv(std::ostream &out, std::span<const PowerTrace> traces);
std::vector<PowerTrace> read_traces_csv(std::istream &in, std::size_t leakage_offset);

/// Hamming weight of the first-round S-box output.
inline int sbox_hw(std::uint8_t plaintext, std::uint8_t guess) {
    return std::popcount(kAesSbox[plaintext ^ guess]);
}

} // namespace scasim

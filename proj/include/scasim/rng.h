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

#include <cstdint>
#include <random>

namespace scasim {

/// Independent generator streams derived from one seed. Every component
/// draws from its own tagged stream so that sharing a seed never
/// correlates, say, latency jitter with shield flips.
enum class Stream : std::uint32_t {
    Latency = 0x4c41,
    Shield = 0x5348,
    PowerNoise = 0x504e,
    Plaintext = 0x5054,
    Keys = 0x4b59,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag)};
    return std::mt19937_64(seq);
}

} // namespace scasim

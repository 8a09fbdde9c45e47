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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace scasim {

/// Uniform flips every zero bit; Deceptive flips a fresh random subset
/// on every run.
enum class ShieldMode { Uniform, Deceptive };

const char *to_string(ShieldMode mode);
/// Accepts "uniform" / "deceptive" in any case.
ShieldMode parse_shield_mode(std::string_view text);

struct ShieldConfig {
    ShieldMode mode = ShieldMode::Uniform;
    /// Per-zero-bit flip chance, Deceptive mode only.
    double flip_probability = 0.5;
    std::uint64_t rng_seed = 0;

    void validate() const;
    double effective_flip_probability() const {
        return mode == ShieldMode::Uniform ? 1.0 : flip_probability;
    }
    /// Same config with the run's sub-seed (seed + run index).
    ShieldConfig for_run(std::uint64_t run) const {
        ShieldConfig c = *this;
        c.rng_seed += run;
        return c;
    }
};

/// Injects dummy Multiply/Reduce pairs after the Square/Reduce of each
/// zero bit selected for flipping. Real tokens keep their order, and the
/// slot schedule is rebuilt so dummies occupy ordinary victim slots.
///
/// `trace` must be exactly encode_ops(true_key); a trace that already
/// contains dummy tokens is rejected.
OperationTrace wrap(const OperationTrace &trace, const KeyBits &true_key,
                    const ShieldConfig &config);

/// Token count of the shielded trace over the original.
double overhead_ratio(const OperationTrace &original, const OperationTrace &shielded);

} // namespace scasim

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

#include <cstddef>
#include <optional>

namespace scasim {

/// Left-to-right square-and-multiply: every bit costs Square, Reduce;
/// a one bit adds Multiply, Reduce. Throws on an empty key.
OperationTrace encode_ops(const KeyBits &key);

/// The victim's three shared code lines.
struct VictimLines {
    LineId square;
    LineId modulo;
    LineId multiply;

    LineId line_for(OpKind kind) const;
};

struct VictimLayout {
    std::size_t square_set = 17;
    std::size_t modulo_set = 42;
    std::size_t multiply_set = 99;
};

VictimLines register_victim_lines(CacheState &cache, const VictimLayout &layout = {});

/// A victim replaying its trace one token per step, so attackers can
/// interleave measurements between victim slots.
class VictimProcess {
  public:
    VictimProcess(OperationTrace trace, VictimLines lines)
        : trace_(std::move(trace)), lines_(lines) {}

    /// Builds encode_ops(key), shielded when a config is given.
    static VictimProcess launch(const KeyBits &key, VictimLines lines,
                                const std::optional<ShieldConfig> &shield);

    bool done() const { return next_ >= trace_.size(); }
    std::size_t remaining() const { return trace_.size() - next_; }
    /// Runs the next token as a victim access to its code line. A finished
    /// victim stays idle.
    void step(CacheState &cache);

    const OperationTrace &trace() const { return trace_; }

  private:
    OperationTrace trace_;
    VictimLines lines_;
    std::size_t next_ = 0;
};

/// Runs the whole (possibly shielded) exponentiation against the cache and
/// returns the trace that was executed.
OperationTrace run_victim(const KeyBits &key, CacheState &cache, const VictimLines &lines,
                          const std::optional<ShieldConfig> &shield = std::nullopt);

} // namespace scasim

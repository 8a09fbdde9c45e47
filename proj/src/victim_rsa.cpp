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

#include "scasim/victim_rsa.h"

#include <stdexcept>

namespace scasim {

OperationTrace encode_ops(const KeyBits &key) {
    if (key.empty())
        throw std::invalid_argument("cannot encode an empty key");
    OperationTrace trace;
    trace.tokens.reserve(2 * key.count_zeros() + 4 * key.count_ones());
    for (std::size_t i = 0; i < key.size(); i++) {
        trace.tokens.push_back({OpKind::Square});
        trace.tokens.push_back({OpKind::Reduce});
        if (key[i]) {
            trace.tokens.push_back({OpKind::Multiply});
            trace.tokens.push_back({OpKind::Reduce});
        }
    }
    trace.assign_slots();
    return trace;
}

LineId VictimLines::line_for(OpKind kind) const {
    switch (kind) {
    case OpKind::Square:
        return square;
    case OpKind::Reduce:
        return modulo;
    case OpKind::Multiply:
        return multiply;
    }
    throw std::invalid_argument("unknown operation kind");
}

VictimLines register_victim_lines(CacheState &cache, const VictimLayout &layout) {
    return {cache.register_line("SQUARE", layout.square_set),
            cache.register_line("MODULO", layout.modulo_set),
            cache.register_line("MULTIPLY", layout.multiply_set)};
}

VictimProcess VictimProcess::launch(const KeyBits &key, VictimLines lines,
                                    const std::optional<ShieldConfig> &shield) {
    OperationTrace trace = encode_ops(key);
    if (shield)
        trace = wrap(trace, key, *shield);
    return VictimProcess(std::move(trace), lines);
}

void VictimProcess::step(CacheState &cache) {
    if (done())
        return;
    cache.access(lines_.line_for(trace_.tokens[next_].kind), Actor::Victim);
    next_++;
}

OperationTrace run_victim(const KeyBits &key, CacheState &cache, const VictimLines &lines,
                          const std::optional<ShieldConfig> &shield) {
    VictimProcess victim = VictimProcess::launch(key, lines, shield);
    while (!victim.done())
        victim.step(cache);
    return victim.trace();
}

} // namespace scasim

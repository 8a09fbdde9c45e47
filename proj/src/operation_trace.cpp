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

#include "scasim/operation_trace.h"

#include <algorithm>
#include <stdexcept>

namespace scasim {

bool OperationTrace::has_dummy() const {
    return std::any_of(tokens.begin(), tokens.end(),
                       [](const OperationToken &t) { return t.provenance == Provenance::Dummy; });
}

std::vector<OpKind> OperationTrace::attacker_view() const {
    std::vector<OpKind> out;
    out.reserve(tokens.size());
    for (const auto &t : tokens)
        out.push_back(t.kind);
    return out;
}

OperationTrace OperationTrace::real_subsequence() const {
    OperationTrace out;
    for (const auto &t : tokens)
        if (t.provenance == Provenance::Real)
            out.tokens.push_back(t);
    out.assign_slots();
    return out;
}

void OperationTrace::assign_slots() {
    slots.resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); i++)
        slots[i] = i * kVictimSlotStride;
}

char to_char(OpKind kind) { return static_cast<char>(kind); }

OpKind op_from_char(char c) {
    switch (c) {
    case 'S':
        return OpKind::Square;
    case 'R':
        return OpKind::Reduce;
    case 'M':
        return OpKind::Multiply;
    default:
        throw std::invalid_argument(std::string("unknown operation '") + c + "'");
    }
}

std::string render_ops(std::span<const OpKind> ops) {
    std::string out;
    out.reserve(ops.size());
    for (OpKind k : ops)
        out.push_back(to_char(k));
    return out;
}

std::vector<OpKind> parse_ops(std::string_view text) {
    std::vector<OpKind> out;
    for (char c : text) {
        if (c == '-' || c == ' ')
            continue;
        out.push_back(op_from_char(c));
    }
    return out;
}

} // namespace scasim

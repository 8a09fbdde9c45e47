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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scasim {

/// Code regions executed by square-and-multiply exponentiation.
enum class OpKind : char { Square = 'S', Reduce = 'R', Multiply = 'M' };

enum class Provenance { Real, Dummy };

struct OperationToken {
    OpKind kind;
    Provenance provenance = Provenance::Real;
    friend bool operator==(const OperationToken &, const OperationToken &) = default;
};

/// The victim runs one token per slot; attacker measurements fall between.
inline constexpr std::uint64_t kVictimSlotStride = 2;

struct OperationTrace {
    std::vector<OperationToken> tokens;
    std::vector<std::uint64_t> slots;

    std::size_t size() const { return tokens.size(); }
    bool has_dummy() const;
    /// Token kinds only; provenance is not observable on any channel.
    std::vector<OpKind> attacker_view() const;
    OperationTrace real_subsequence() const;
    /// Gives token i the slot i * kVictimSlotStride.
    void assign_slots();

    friend bool operator==(const OperationTrace &, const OperationTrace &) = default;
};

char to_char(OpKind kind);
OpKind op_from_char(char c);
/// "SRSRMR..." rendering of a kind sequence.
std::string render_ops(std::span<const OpKind> ops);
std::vector<OpKind> parse_ops(std::string_view text);

} // namespace scasim

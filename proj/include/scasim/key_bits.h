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
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace scasim {

/// Secret exponent bits, most significant first.
class KeyBits {
  public:
    KeyBits() = default;
    explicit KeyBits(std::vector<bool> bits) : bits_(std::move(bits)) {}

    /// Parses hex digits (case-insensitive, optional "0x" prefix). Every
    /// digit contributes four bits, so leading zeros are kept.
    static KeyBits from_hex(std::string_view hex);
    /// Parses a string of '0'/'1' characters (optional "0b" prefix).
    static KeyBits from_binary(std::string_view bin);
    /// "0b..." selects binary, everything else is read as hex.
    static KeyBits parse(std::string_view text);

    static KeyBits random(std::size_t length, std::mt19937_64 &rng);
    static KeyBits zeros(std::size_t length) {
        return KeyBits(std::vector<bool>(length, false));
    }
    static KeyBits ones(std::size_t length) {
        return KeyBits(std::vector<bool>(length, true));
    }

    std::size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }
    bool operator[](std::size_t i) const { return bits_[i]; }
    const std::vector<bool> &bits() const { return bits_; }

    std::size_t count_ones() const;
    std::size_t count_zeros() const { return size() - count_ones(); }

    /// Upper-case hex. Requires size() % 4 == 0.
    std::string to_hex() const;
    std::string to_binary() const;
    /// Hex when the length allows it, binary otherwise.
    std::string to_string() const;

    bool is_prefix_of(const KeyBits &other) const;

    KeyBits operator|(const KeyBits &other) const;
    KeyBits operator&(const KeyBits &other) const;

    friend bool operator==(const KeyBits &, const KeyBits &) = default;

  private:
    std::vector<bool> bits_;
};

} // namespace scasim

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

#include "scasim/key_bits.h"

#include <algorithm>
#include <stdexcept>

namespace scasim {

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

bool has_prefix(std::string_view s, char kind) {
    return s.size() >= 2 && s[0] == '0' && (s[1] == kind || s[1] == (kind - 'a' + 'A'));
}

} // namespace

KeyBits KeyBits::from_hex(std::string_view hex) {
    if (has_prefix(hex, 'x'))
        hex.remove_prefix(2);
    if (hex.empty())
        throw std::invalid_argument("empty hex key");
    std::vector<bool> bits;
    bits.reserve(hex.size() * 4);
    for (std::size_t pos = 0; pos < hex.size(); pos++) {
        int v = hex_value(hex[pos]);
        if (v < 0)
            throw std::invalid_argument("invalid hex digit '" + std::string(1, hex[pos]) +
                                        "' at offset " + std::to_string(pos));
        for (int b = 3; b >= 0; b--)
            bits.push_back(((v >> b) & 1) != 0);
    }
    return KeyBits(std::move(bits));
}

KeyBits KeyBits::from_binary(std::string_view bin) {
    if (has_prefix(bin, 'b'))
        bin.remove_prefix(2);
    if (bin.empty())
        throw std::invalid_argument("empty binary key");
    std::vector<bool> bits;
    bits.reserve(bin.size());
    for (std::size_t pos = 0; pos < bin.size(); pos++) {
        if (bin[pos] != '0' && bin[pos] != '1')
            throw std::invalid_argument("invalid binary digit at offset " + std::to_string(pos));
        bits.push_back(bin[pos] == '1');
    }
    return KeyBits(std::move(bits));
}

KeyBits KeyBits::parse(std::string_view text) {
    if (has_prefix(text, 'b'))
        return from_binary(text);
    return from_hex(text);
}

KeyBits KeyBits::random(std::size_t length, std::mt19937_64 &rng) {
    std::vector<bool> bits(length);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < length; i++)
        bits[i] = coin(rng);
    return KeyBits(std::move(bits));
}

std::size_t KeyBits::count_ones() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::string KeyBits::to_hex() const {
    if (bits_.size() % 4 != 0)
        throw std::invalid_argument("key length " + std::to_string(bits_.size()) +
                                    " is not a multiple of 4");
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(bits_.size() / 4);
    for (std::size_t i = 0; i < bits_.size(); i += 4) {
        int v = (bits_[i] << 3) | (bits_[i + 1] << 2) | (bits_[i + 2] << 1) | bits_[i + 3];
        out.push_back(digits[v]);
    }
    return out;
}

std::string KeyBits::to_binary() const {
    std::string out;
    out.reserve(bits_.size());
    for (bool b : bits_)
        out.push_back(b ? '1' : '0');
    return out;
}

std::string KeyBits::to_string() const {
    if (!bits_.empty() && bits_.size() % 4 == 0)
        return to_hex();
    return "0b" + to_binary();
}

bool KeyBits::is_prefix_of(const KeyBits &other) const {
    return size() <= other.size() && std::equal(bits_.begin(), bits_.end(), other.bits_.begin());
}

KeyBits KeyBits::operator|(const KeyBits &other) const {
    if (size() != other.size())
        throw std::invalid_argument("key length mismatch");
    std::vector<bool> out(size());
    for (std::size_t i = 0; i < size(); i++)
        out[i] = bits_[i] || other.bits_[i];
    return KeyBits(std::move(out));
}

KeyBits KeyBits::operator&(const KeyBits &other) const {
    if (size() != other.size())
        throw std::invalid_argument("key length mismatch");
    std::vector<bool> out(size());
    for (std::size_t i = 0; i < size(); i++)
        out[i] = bits_[i] && other.bits_[i];
    return KeyBits(std::move(out));
}

} // namespace scasim

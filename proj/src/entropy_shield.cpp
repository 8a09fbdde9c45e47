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

#include "scasim/entropy_shield.h"

#include "scasim/rng.h"
#include "scasim/victim_rsa.h"

#include <algorithm>
#include <cctype>
#include <random>
#include <stdexcept>

namespace scasim {

const char *to_string(ShieldMode mode) {
    return mode == ShieldMode::Uniform ? "Uniform" : "Deceptive";
}

ShieldMode parse_shield_mode(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "uniform")
        return ShieldMode::Uniform;
    if (lower == "deceptive")
        return ShieldMode::Deceptive;
    throw std::invalid_argument("unknown shield mode '" + std::string(text) + "'");
}

void ShieldConfig::validate() const {
    if (mode == ShieldMode::Deceptive && !(flip_probability > 0.0 && flip_probability <= 1.0))
        throw std::invalid_argument("flip_probability must be in (0, 1]");
}

OperationTrace wrap(const OperationTrace &trace, const KeyBits &true_key,
                    const ShieldConfig &config) {
    config.validate();
    if (trace.has_dummy())
        throw std::invalid_argument("trace is already shielded");
    if (trace.tokens != encode_ops(true_key).tokens)
        throw std::invalid_argument("trace does not match the key's operation sequence");

    std::mt19937_64 rng = make_stream(config.rng_seed, Stream::Shield);
    std::bernoulli_distribution flip(config.effective_flip_probability());

    OperationTrace out;
    out.tokens.reserve(4 * true_key.size());
    std::size_t pos = 0;
    for (std::size_t bit = 0; bit < true_key.size(); bit++) {
        const std::size_t width = true_key[bit] ? 4 : 2;
        out.tokens.insert(out.tokens.end(), trace.tokens.begin() + pos,
                          trace.tokens.begin() + pos + width);
        pos += width;
        if (!true_key[bit] && flip(rng)) {
            out.tokens.push_back({OpKind::Multiply, Provenance::Dummy});
            out.tokens.push_back({OpKind::Reduce, Provenance::Dummy});
        }
    }
    out.assign_slots();
    return out;
}

double overhead_ratio(const OperationTrace &original, const OperationTrace &shielded) {
    if (original.size() == 0)
        return 1.0;
    return static_cast<double>(shielded.size()) / static_cast<double>(original.size());
}

} // namespace scasim

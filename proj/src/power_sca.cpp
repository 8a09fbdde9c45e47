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

#include "scasim/power_sca.h"

#include "scasim/attackers.h"
#include "scasim/rng.h"
#include "scasim/victim_rsa.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace scasim {

// clang-format off
const std::array<std::uint8_t, 256> kAesSbox = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
};
// clang-format on

Block parse_block(std::string_view hex) {
    const KeyBits bits = KeyBits::from_hex(hex);
    if (bits.size() != 128)
        throw std::invalid_argument("expected 32 hex digits, got " + std::to_string(bits.size() / 4));
    Block out{};
    for (std::size_t i = 0; i < 128; i++)
        if (bits[i])
            out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    return out;
}

std::string block_to_hex(const Block &block) {
    std::string out;
    char buf[3];
    for (std::uint8_t b : block) {
        std::snprintf(buf, sizeof buf, "%02X", b);
        out += buf;
    }
    return out;
}

const OpPulse &LeakageParams::pulse(OpKind kind) const {
    switch (kind) {
    case OpKind::Square:
        return square;
    case OpKind::Reduce:
        return reduce;
    case OpKind::Multiply:
        return multiply;
    }
    throw std::invalid_argument("unknown operation kind");
}

double LeakageParams::amplitude_separation() const {
    return std::min({std::abs(square.amplitude - reduce.amplitude),
                     std::abs(square.amplitude - multiply.amplitude),
                     std::abs(reduce.amplitude - multiply.amplitude)});
}

void LeakageParams::validate_rsa() const {
    if (noise_sigma < 0.0)
        throw std::invalid_argument("noise_sigma must be non-negative");
    if (multiply.amplitude == square.amplitude)
        throw std::invalid_argument("Multiply and Square amplitudes must differ");
    if (square.duration == 0 || reduce.duration == 0 || multiply.duration == 0)
        throw std::invalid_argument("operation durations must be positive");
}

void LeakageParams::validate_aes() const {
    if (noise_sigma < 0.0)
        throw std::invalid_argument("noise_sigma must be non-negative");
    if (leakage_offset + 16 > trace_length)
        throw std::invalid_argument("trace too short for 16 leakage points at offset " +
                                    std::to_string(leakage_offset));
}

namespace {

double gaussian(std::mt19937_64 &rng, double sigma) {
    if (sigma == 0.0)
        return 0.0;
    std::normal_distribution<double> dist(0.0, sigma);
    return dist(rng);
}

} // namespace

PowerTrace synth_rsa_trace(const KeyBits &key, const LeakageParams &params) {
    params.validate_rsa();
    const OperationTrace ops = encode_ops(key);
    std::mt19937_64 noise = make_stream(params.rng_seed, Stream::PowerNoise);
    PowerTrace trace;
    for (const auto &token : ops.tokens) {
        const OpPulse &p = params.pulse(token.kind);
        for (std::size_t s = 0; s < p.duration; s++)
            trace.samples.push_back(p.amplitude + gaussian(noise, params.noise_sigma));
    }
    return trace;
}

KeyBits spa_recover(const PowerTrace &trace, const LeakageParams &params) {
    params.validate_rsa();
    const std::size_t width = params.square.duration;
    if (params.reduce.duration != width || params.multiply.duration != width)
        throw std::invalid_argument("SPA segmentation needs equal operation durations");
    if (trace.samples.empty() || trace.samples.size() % width != 0)
        throw std::invalid_argument("trace length " + std::to_string(trace.samples.size()) +
                                    " is not a multiple of the operation duration");

    constexpr std::array<OpKind, 3> kinds = {OpKind::Square, OpKind::Reduce, OpKind::Multiply};
    std::vector<OpKind> labels;
    labels.reserve(trace.samples.size() / width);
    for (std::size_t seg = 0; seg * width < trace.samples.size(); seg++) {
        double mean = 0.0;
        for (std::size_t s = 0; s < width; s++)
            mean += trace.samples[seg * width + s];
        mean /= static_cast<double>(width);

        std::array<double, 3> dist{};
        for (std::size_t k = 0; k < kinds.size(); k++)
            dist[k] = std::abs(mean - params.pulse(kinds[k]).amplitude);
        std::size_t best = 0;
        for (std::size_t k = 1; k < kinds.size(); k++)
            if (dist[k] < dist[best])
                best = k;
        for (std::size_t k = 0; k < kinds.size(); k++)
            if (k != best && dist[k] == dist[best])
                throw DecodeError("segment equidistant from two operation amplitudes", seg);
        labels.push_back(kinds[best]);
    }
    return decode(labels);
}

PowerTrace synth_aes_trace(const Block &key, const Block &plaintext, const LeakageParams &params,
                           std::mt19937_64 &noise) {
    params.validate_aes();
    PowerTrace trace;
    trace.plaintext = plaintext;
    trace.leakage_offset = params.leakage_offset;
    trace.samples.resize(params.trace_length);
    for (double &s : trace.samples)
        s = gaussian(noise, params.noise_sigma);
    for (std::size_t i = 0; i < 16; i++)
        trace.samples[params.leakage_offset + i] +=
            params.signal_scale * sbox_hw(plaintext[i], key[i]);
    return trace;
}

std::vector<PowerTrace> synth_aes_traces(const Block &key, std::size_t n,
                                         const LeakageParams &params) {
    params.validate_aes();
    std::mt19937_64 pt_rng = make_stream(params.rng_seed, Stream::Plaintext);
    std::mt19937_64 noise = make_stream(params.rng_seed, Stream::PowerNoise);
    std::uniform_int_distribution<int> byte(0, 255);
    std::vector<PowerTrace> traces;
    traces.reserve(n);
    for (std::size_t t = 0; t < n; t++) {
        Block pt{};
        for (auto &b : pt)
            b = static_cast<std::uint8_t>(byte(pt_rng));
        traces.push_back(synth_aes_trace(key, pt, params, noise));
    }
    return traces;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2)
        return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; i++) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; i++) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

void check_campaign(std::span<const PowerTrace> traces) {
    if (traces.size() < 2)
        throw std::invalid_argument("need at least 2 traces");
    const std::size_t len = traces.front().samples.size();
    for (const auto &t : traces) {
        if (!t.plaintext)
            throw std::invalid_argument("AES analysis needs traces with plaintexts");
        if (t.samples.size() != len)
            throw std::invalid_argument("traces in one campaign must have equal length");
        if (t.leakage_offset + 16 > t.samples.size())
            throw std::invalid_argument("leakage points lie outside the trace");
    }
}

std::size_t argmax_lowest(const GuessScores &scores) {
    std::size_t best = 0;
    for (std::size_t g = 1; g < scores.size(); g++)
        if (scores[g] > scores[best])
            best = g;
    return best;
}

} // namespace

CpaResult cpa_recover(std::span<const PowerTrace> traces) {
    check_campaign(traces);
    CpaResult result;
    std::vector<double> leak(traces.size()), hyp(traces.size());
    for (std::size_t byte = 0; byte < 16; byte++) {
        for (std::size_t t = 0; t < traces.size(); t++)
            leak[t] = traces[t].samples[traces[t].leakage_offset + byte];
        GuessScores magnitude{};
        for (std::size_t g = 0; g < 256; g++) {
            for (std::size_t t = 0; t < traces.size(); t++)
                hyp[t] = sbox_hw((*traces[t].plaintext)[byte], static_cast<std::uint8_t>(g));
            result.correlation[byte][g] = pearson(hyp, leak);
            magnitude[g] = std::abs(result.correlation[byte][g]);
        }
        result.key[byte] = static_cast<std::uint8_t>(argmax_lowest(magnitude));
    }
    return result;
}

std::vector<double> cpa_correlation_trace(std::span<const PowerTrace> traces, std::size_t byte,
                                          std::uint8_t guess) {
    check_campaign(traces);
    if (byte >= 16)
        throw std::invalid_argument("byte index out of range");
    std::vector<double> hyp(traces.size()), column(traces.size());
    for (std::size_t t = 0; t < traces.size(); t++)
        hyp[t] = sbox_hw((*traces[t].plaintext)[byte], guess);
    std::vector<double> out(traces.front().samples.size());
    for (std::size_t s = 0; s < out.size(); s++) {
        for (std::size_t t = 0; t < traces.size(); t++)
            column[t] = traces[t].samples[s];
        out[s] = pearson(hyp, column);
    }
    return out;
}

DpaResult dpa_recover(std::span<const PowerTrace> traces) {
    check_campaign(traces);
    DpaResult result;
    for (std::size_t byte = 0; byte < 16; byte++) {
        for (std::size_t g = 0; g < 256; g++) {
            double sum[2] = {0.0, 0.0};
            std::size_t count[2] = {0, 0};
            for (const auto &t : traces) {
                const int bit = kAesSbox[(*t.plaintext)[byte] ^ g] & 1;
                sum[bit] += t.samples[t.leakage_offset + byte];
                count[bit]++;
            }
            if (count[0] == 0 || count[1] == 0)
                result.difference[byte][g] = 0.0;
            else
                result.difference[byte][g] = std::abs(sum[1] / static_cast<double>(count[1]) -
                                                      sum[0] / static_cast<double>(count[0]));
        }
        result.key[byte] = static_cast<std::uint8_t>(argmax_lowest(result.difference[byte]));
    }
    return result;
}

void write_traces_csv(std::ostream &out, std::span<const PowerTrace> traces) {
    char buf[32];
    for (const auto &t : traces) {
        if (t.plaintext)
            out << block_to_hex(*t.plaintext);
        for (double s : t.samples) {
            std::snprintf(buf, sizeof buf, "%.17g", s);
            out << ',' << buf;
        }
        out << '\n';
    }
}

std::vector<PowerTrace> read_traces_csv(std::istream &in, std::size_t leakage_offset) {
    std::vector<PowerTrace> traces;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        row++;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::istringstream fields(line);
        std::string field;
        PowerTrace trace;
        trace.leakage_offset = leakage_offset;
        std::getline(fields, field, ',');
        try {
            if (!field.empty())
                trace.plaintext = parse_block(field);
            while (std::getline(fields, field, ','))
                trace.samples.push_back(std::stod(field));
        } catch (const std::exception &e) {
            throw std::invalid_argument("trace CSV row " + std::to_string(row) + ": " + e.what());
        }
        if (!traces.empty() && trace.samples.size() != traces.front().samples.size())
            throw std::invalid_argument("trace CSV row " + std::to_string(row) +
                                        ": sample count differs from first row");
        traces.push_back(std::move(trace));
    }
    return traces;
}

} // namespace scasim

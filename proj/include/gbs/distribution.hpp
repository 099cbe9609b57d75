/*
 * Copyright 2026 The gbstrain Authors
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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gbs/gbs_state.hpp"
#include "gbs/numerics.hpp"

namespace gbs {

enum class Detector { photon, click };

const char* to_string(Detector d) noexcept;
Detector detector_from_string(const std::string& s);

/// Photon counts n_k (photon detector) or click bits x_k (threshold detector).
using Pattern = Counts;

/// Threshold map: x_k = 1 iff n_k > 0.
Pattern to_clicks(std::span<const int> n);

inline constexpr int kDefaultCutoff = 20;
/// Photon-mode sampling refuses truncations capturing less than this mass.
inline constexpr double kMinCapturedMass = 0.999;
/// Full 2^m enumeration is used for click sampling up to this many modes;
/// beyond it, mode-by-mode chain-rule sampling.
inline constexpr int kClickEnumerationModes = 12;
inline constexpr int kMaxClickModes = 24;

/// sqrt(det(1 - A_W^2)) Haf(A_n)^2 prod_k w_k^n_k / n_k!; 0 for odd totals.
double prob_photon(const AMatrix& a, const WawParams& p, std::span<const int> n);

/// Threshold-detector probability by inclusion-exclusion over vacuum
/// marginals of A_W.
double prob_click(const AMatrix& a, const WawParams& p, std::span<const int> x);

struct Enumeration {
    std::vector<Pattern> patterns;  // lexicographic order
    std::vector<double> probs;
    double captured_mass = 0.0;
};

/// All photon patterns with total <= n_max. Throws budget_exceeded if more
/// than 10^7 patterns would be produced.
Enumeration enumerate_photon(const AMatrix& a, const WawParams& p, int n_max);

/// All 2^m click patterns (m <= 20).
Enumeration enumerate_click(const AMatrix& a, const WawParams& p);

/// A set of detector outcomes plus derived moments.
class SampleBatch {
public:
    SampleBatch(Detector detector, int modes, std::uint64_t seed, std::vector<Pattern> samples,
                std::uint64_t attempts = 0);

    Detector detector() const noexcept { return detector_; }
    int modes() const noexcept { return modes_; }
    std::uint64_t seed() const noexcept { return seed_; }
    int size() const noexcept { return static_cast<int>(samples_.size()); }
    const std::vector<Pattern>& samples() const noexcept { return samples_; }
    /// Raw draws made, including rejected ones when conditioning was used.
    std::uint64_t attempts() const noexcept { return attempts_; }

    /// Empirical <n_k> (photon) or <x_k> (click).
    const Vector& means() const noexcept { return means_; }
    /// sum_k means_k f_k.
    Vector feature_moments(const std::vector<Vector>& features) const;

    /// Same samples mapped through the threshold map.
    SampleBatch to_click_batch() const;

private:
    Detector detector_;
    int modes_;
    std::uint64_t seed_;
    std::vector<Pattern> samples_;
    std::uint64_t attempts_;
    Vector means_;
};

struct SampleOptions {
    Detector detector = Detector::click;
    int count = 1000;
    std::uint64_t seed = 0;
    /// Keep only samples with exactly this many clicks (rejection).
    std::optional<int> clicks;
    int cutoff = kDefaultCutoff;
};

/// Exact i.i.d. sampling from the state W A W; deterministic given the seed.
///
/// Photon detector and click detector with m <= 12 draw one uniform per sample
/// and invert the cumulative distribution over lexicographically ordered
/// patterns. Click detector with 12 < m <= 24 samples modes in order, each
/// conditional being a ratio of prefix inclusion-exclusion sums.
SampleBatch sample(const AMatrix& a, const WawParams& p, const SampleOptions& opts);

/// Number of times sample() has been called in this process.
std::uint64_t sampling_calls() noexcept;

/// Text format: header "m T detector seed", then one pattern per line with
/// space-separated integers.
void write_batch(std::ostream& os, const SampleBatch& batch);
SampleBatch read_batch(std::istream& is);

}  // namespace gbs

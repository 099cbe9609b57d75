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

#include "gbs/distribution.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "gbs/error.hpp"
#include "gbs/kernels.hpp"
#include "gbs/rng.hpp"

namespace gbs {

namespace {

constexpr double kMaxPatterns = 1e7;
constexpr int kMaxEnumeratedClickModes = 20;
constexpr double kMinAcceptance = 1e-6;
constexpr std::uint64_t kRejectionProbe = 1'000'000;

std::atomic<std::uint64_t> g_sampling_calls{0};

void check_pattern(const AMatrix& a, std::span<const int> n, const char* who) {
    if (static_cast<int>(n.size()) != a.modes()) {
        throw Error(ErrorKind::dimension_mismatch, std::string(who) + ": pattern length mismatch");
    }
    for (int v : n) {
        if (v < 0) {
            throw Error(ErrorKind::invalid_argument, std::string(who) + ": negative count");
        }
    }
}

void check_params(const AMatrix& a, const WawParams& p, const char* who) {
    if (p.modes() != a.modes()) {
        throw Error(ErrorKind::dimension_mismatch, std::string(who) + ": weight count mismatch");
    }
}

std::uint64_t mask_of(std::span<const int> x) {
    std::uint64_t mask = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] != 0) {
            mask |= std::uint64_t{1} << k;
        }
    }
    return mask;
}

Pattern pattern_of(std::uint64_t mask, int m) {
    Pattern x(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        x[static_cast<std::size_t>(k)] = static_cast<int>((mask >> k) & 1U);
    }
    return x;
}

// Lexicographic rank L (x_1 most significant) -> mask (bit k = x_k).
std::uint64_t mask_of_rank(std::uint64_t rank, int m) {
    std::uint64_t mask = 0;
    for (int k = 0; k < m; ++k) {
        if ((rank >> (m - 1 - k)) & 1U) {
            mask |= std::uint64_t{1} << k;
        }
    }
    return mask;
}

double pattern_count(int m, int n_max) {
    // C(n_max + m, m)
    double c = 1.0;
    for (int i = 1; i <= m; ++i) {
        c = c * (n_max + i) / i;
    }
    return c;
}

void enumerate_counts(int m, int budget, Pattern& current, int k, std::vector<Pattern>& out) {
    if (k == m) {
        out.push_back(current);
        return;
    }
    for (int v = 0; v <= budget; ++v) {
        current[static_cast<std::size_t>(k)] = v;
        enumerate_counts(m, budget - v, current, k + 1, out);
    }
    current[static_cast<std::size_t>(k)] = 0;
}

std::vector<double> click_table(const AMatrix& aw) {
    const GaussianViews g = gaussian_views(aw);
    return kernels::clicks_from_vacuum(kernels::vacuum_table(g.q, aw.modes()), aw.modes());
}

// Categorical sampler over a fixed, ordered support.
class Categorical {
public:
    explicit Categorical(const std::vector<double>& probs) : cdf_(probs.size()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += std::max(probs[i], 0.0);
            cdf_[i] = acc;
        }
    }

    double total() const { return cdf_.empty() ? 0.0 : cdf_.back(); }

    std::size_t draw(Rng& rng) const {
        const double u = uniform01(rng) * total();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) {
            --it;
        }
        return static_cast<std::size_t>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

class ChainClickSampler {
public:
    explicit ChainClickSampler(const AMatrix& aw) : q_(gaussian_views(aw).q), m_(aw.modes()) {}

    Pattern draw(Rng& rng) {
        std::uint64_t clicked = 0;
        std::uint64_t empty = 0;
        double p_prefix = 1.0;
        for (int j = 0; j < m_; ++j) {
            const std::uint64_t bit = std::uint64_t{1} << j;
            const double p_zero = prefix_prob(clicked, empty | bit);
            const double cond = p_prefix > 0.0 ? std::clamp(p_zero / p_prefix, 0.0, 1.0) : 1.0;
            if (uniform01(rng) < cond) {
                empty |= bit;
                p_prefix = p_zero;
            } else {
                clicked |= bit;
                p_prefix = std::max(p_prefix - p_zero, 0.0);
            }
        }
        return pattern_of(clicked, m_);
    }

private:
    // P(modes in `clicked` click and modes in `empty` do not), other modes marginalized.
    double prefix_prob(std::uint64_t clicked, std::uint64_t empty) {
        double sum = 0.0;
        std::uint64_t t = clicked;
        while (true) {
            const double sign = (std::popcount(t) % 2 == 0) ? 1.0 : -1.0;
            sum += sign * vacuum(t | empty);
            if (t == 0) {
                break;
            }
            t = (t - 1) & clicked;
        }
        return sum;
    }

    double vacuum(std::uint64_t mask) {
        if (auto it = cache_.find(mask); it != cache_.end()) {
            return it->second;
        }
        const double v = kernels::vacuum_prob(q_, m_, mask);
        cache_.emplace(mask, v);
        return v;
    }

    Matrix q_;
    int m_;
    std::unordered_map<std::uint64_t, double> cache_;
};

int click_total(const Pattern& x) {
    return static_cast<int>(std::count_if(x.begin(), x.end(), [](int v) { return v > 0; }));
}

}  // namespace

const char* to_string(Detector d) noexcept { return d == Detector::photon ? "photon" : "click"; }

Detector detector_from_string(const std::string& s) {
    if (s == "photon") {
        return Detector::photon;
    }
    if (s == "click") {
        return Detector::click;
    }
    throw Error(ErrorKind::config, "unknown detector '" + s + "' (expected photon|click)");
}

Pattern to_clicks(std::span<const int> n) {
    Pattern x(n.size());
    for (std::size_t k = 0; k < n.size(); ++k) {
        x[k] = n[k] > 0 ? 1 : 0;
    }
    return x;
}

double prob_photon(const AMatrix& a, const WawParams& p, std::span<const int> n) {
    check_params(a, p, "prob_photon");
    check_pattern(a, n, "prob_photon");
    const AMatrix aw = apply_waw(a, p);
    const Counts counts(n.begin(), n.end());
    return kernels::photon_prob_term(a.sym(), p.weights(), normalization(aw), counts);
}

double prob_click(const AMatrix& a, const WawParams& p, std::span<const int> x) {
    check_params(a, p, "prob_click");
    check_pattern(a, x, "prob_click");
    const int m = a.modes();
    if (m > 62) {
        throw Error(ErrorKind::budget_exceeded, "prob_click: too many modes");
    }
    const AMatrix aw = apply_waw(a, p);
    const Matrix q = gaussian_views(aw).q;
    const std::uint64_t clicked = mask_of(x);
    const std::uint64_t empty = ((std::uint64_t{1} << m) - 1) & ~clicked;
    double sum = 0.0;
    std::uint64_t t = clicked;
    while (true) {
        const double sign = (std::popcount(t) % 2 == 0) ? 1.0 : -1.0;
        sum += sign * kernels::vacuum_prob(q, m, t | empty);
        if (t == 0) {
            break;
        }
        t = (t - 1) & clicked;
    }
    return sum;
}

Enumeration enumerate_photon(const AMatrix& a, const WawParams& p, int n_max) {
    check_params(a, p, "enumerate_photon");
    if (n_max < 0) {
        throw Error(ErrorKind::invalid_argument, "enumerate_photon: negative cutoff");
    }
    const int m = a.modes();
    if (pattern_count(m, n_max) > kMaxPatterns) {
        throw Error(ErrorKind::budget_exceeded,
                    "enumerate_photon: " + std::to_string(m) + " modes with cutoff " +
                        std::to_string(n_max) + " exceed the pattern budget");
    }
    Enumeration e;
    Pattern current(static_cast<std::size_t>(m), 0);
    enumerate_counts(m, n_max, current, 0, e.patterns);
    e.probs = kernels::photon_probs(a, p.weights(), e.patterns);
    for (double v : e.probs) {
        e.captured_mass += v;
    }
    return e;
}

Enumeration enumerate_click(const AMatrix& a, const WawParams& p) {
    check_params(a, p, "enumerate_click");
    const int m = a.modes();
    if (m > kMaxEnumeratedClickModes) {
        throw Error(ErrorKind::budget_exceeded, "enumerate_click: too many modes");
    }
    const std::vector<double> by_mask = click_table(apply_waw(a, p));
    Enumeration e;
    const std::uint64_t size = std::uint64_t{1} << m;
    e.patterns.reserve(size);
    e.probs.reserve(size);
    for (std::uint64_t rank = 0; rank < size; ++rank) {
        const std::uint64_t mask = mask_of_rank(rank, m);
        e.patterns.push_back(pattern_of(mask, m));
        e.probs.push_back(by_mask[mask]);
        e.captured_mass += by_mask[mask];
    }
    return e;
}

SampleBatch::SampleBatch(Detector detector, int modes, std::uint64_t seed,
                         std::vector<Pattern> samples, std::uint64_t attempts)
    : detector_(detector),
      modes_(modes),
      seed_(seed),
      samples_(std::move(samples)),
      attempts_(attempts == 0 ? samples_.size() : attempts),
      means_(Vector::Zero(modes)) {
    for (const Pattern& s : samples_) {
        if (static_cast<int>(s.size()) != modes_) {
            throw Error(ErrorKind::dimension_mismatch, "SampleBatch: pattern length mismatch");
        }
        for (int k = 0; k < modes_; ++k) {
            const int v = s[static_cast<std::size_t>(k)];
            if (v < 0 || (detector_ == Detector::click && v > 1)) {
                throw Error(ErrorKind::invalid_argument, "SampleBatch: value out of range");
            }
            means_(k) += v;
        }
    }
    if (!samples_.empty()) {
        means_ /= static_cast<double>(samples_.size());
    }
}

Vector SampleBatch::feature_moments(const std::vector<Vector>& features) const {
    if (static_cast<int>(features.size()) != modes_) {
        throw Error(ErrorKind::dimension_mismatch, "feature_moments: one feature per mode required");
    }
    Vector f = Vector::Zero(features.empty() ? 0 : features.front().size());
    for (int k = 0; k < modes_; ++k) {
        f += means_(k) * features[static_cast<std::size_t>(k)];
    }
    return f;
}

SampleBatch SampleBatch::to_click_batch() const {
    std::vector<Pattern> clicks;
    clicks.reserve(samples_.size());
    for (const Pattern& s : samples_) {
        clicks.push_back(to_clicks(s));
    }
    return SampleBatch(Detector::click, modes_, seed_, std::move(clicks), attempts_);
}

SampleBatch sample(const AMatrix& a, const WawParams& p, const SampleOptions& opts) {
    ++g_sampling_calls;
    check_params(a, p, "sample");
    if (opts.count < 0) {
        throw Error(ErrorKind::invalid_argument, "sample: negative sample count");
    }
    const int m = a.modes();
    if (opts.clicks && (*opts.clicks < 0 || *opts.clicks > m)) {
        throw Error(ErrorKind::invalid_argument, "sample: click condition out of range");
    }
    Rng rng(opts.seed);
    std::vector<Pattern> out;
    out.reserve(static_cast<std::size_t>(opts.count));
    std::uint64_t attempts = 0;

    auto accept = [&](const Pattern& s) { return !opts.clicks || click_total(s) == *opts.clicks; };

    auto run_categorical = [&](const std::vector<Pattern>& support, const std::vector<double>& probs) {
        if (opts.clicks) {
            double acc = 0.0;
            double total = 0.0;
            for (std::size_t i = 0; i < support.size(); ++i) {
                total += probs[i];
                if (accept(support[i])) {
                    acc += probs[i];
                }
            }
            if (!(acc / total >= kMinAcceptance)) {
                throw Error(ErrorKind::budget_exceeded,
                            "sample: conditioning acceptance below 1e-6");
            }
        }
        const Categorical cat(probs);
        while (static_cast<int>(out.size()) < opts.count) {
            ++attempts;
            const Pattern& s = support[cat.draw(rng)];
            if (accept(s)) {
                out.push_back(s);
            }
        }
    };

    if (opts.detector == Detector::photon) {
        const Enumeration e = enumerate_photon(a, p, opts.cutoff);
        if (e.captured_mass < kMinCapturedMass) {
            throw Error(ErrorKind::budget_exceeded,
                        "sample: cutoff " + std::to_string(opts.cutoff) + " captures only " +
                            std::to_string(e.captured_mass) + " of the probability mass");
        }
        run_categorical(e.patterns, e.probs);
    } else if (m <= kClickEnumerationModes) {
        const Enumeration e = enumerate_click(a, p);
        run_categorical(e.patterns, e.probs);
    } else if (m <= kMaxClickModes) {
        ChainClickSampler chain(apply_waw(a, p));
        std::uint64_t accepted = 0;
        while (static_cast<int>(out.size()) < opts.count) {
            ++attempts;
            Pattern s = chain.draw(rng);
            if (accept(s)) {
                out.push_back(std::move(s));
                ++accepted;
            }
            if (attempts >= kRejectionProbe &&
                static_cast<double>(accepted) < kMinAcceptance * static_cast<double>(attempts)) {
                throw Error(ErrorKind::budget_exceeded,
                            "sample: conditioning acceptance below 1e-6");
            }
        }
    } else {
        throw Error(ErrorKind::budget_exceeded,
                    "sample: click sampling supports at most " + std::to_string(kMaxClickModes) +
                        " modes");
    }
    return SampleBatch(opts.detector, m, opts.seed, std::move(out), attempts);
}

std::uint64_t sampling_calls() noexcept { return g_sampling_calls.load(); }

void write_batch(std::ostream& os, const SampleBatch& batch) {
    os << batch.modes() << ' ' << batch.size() << ' ' << to_string(batch.detector()) << ' '
       << batch.seed() << '\n';
    for (const Pattern& s : batch.samples()) {
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (k != 0) {
                os << ' ';
            }
            os << s[k];
        }
        os << '\n';
    }
}

SampleBatch read_batch(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) {
        throw Error(ErrorKind::io, "read_batch: missing header");
    }
    std::istringstream header(line);
    int m = 0;
    int t = 0;
    std::string det;
    std::uint64_t seed = 0;
    if (!(header >> m >> t >> det >> seed) || m < 0 || t < 0) {
        throw Error(ErrorKind::io, "read_batch: malformed header '" + line + "'");
    }
    const Detector detector = detector_from_string(det);
    std::vector<Pattern> samples;
    samples.reserve(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) {
        if (!std::getline(is, line)) {
            throw Error(ErrorKind::io, "read_batch: expected " + std::to_string(t) + " samples");
        }
        std::istringstream row(line);
        Pattern s(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) {
            if (!(row >> s[static_cast<std::size_t>(k)])) {
                throw Error(ErrorKind::io, "read_batch: short sample line " + std::to_string(i + 1));
            }
        }
        samples.push_back(std::move(s));
    }
    return SampleBatch(detector, m, seed, std::move(samples));
}

}  // namespace gbs

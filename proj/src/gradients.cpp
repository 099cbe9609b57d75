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

#include "gbs/gradients.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "gbs/error.hpp"
#include "gbs/kernels.hpp"

namespace gbs {

namespace {

void require_detector(const SampleBatch& b, Detector d, const char* who) {
    if (b.detector() != d) {
        throw Error(ErrorKind::invalid_argument,
                    std::string(who) + ": expected a " + to_string(d) + "-detector batch");
    }
}

void require_modes(const AMatrix& a, const WawParams& p, const char* who) {
    if (p.modes() != a.modes()) {
        throw Error(ErrorKind::dimension_mismatch, std::string(who) + ": weight count mismatch");
    }
}

Vector to_vector(std::span<const int> n) {
    Vector v(static_cast<Eigen::Index>(n.size()));
    for (std::size_t k = 0; k < n.size(); ++k) {
        v(static_cast<Eigen::Index>(k)) = n[k];
    }
    return v;
}

Vector inverse_weights(const Vector& w) {
    return w.unaryExpr([](double x) { return 1.0 / std::max(x, WawParams::kMinWeight); });
}

bool any_clamped(const Vector& w) { return (w.array() < WawParams::kMinWeight).any(); }

// Mean and standard error of per-sample gradient terms; the reduction is
// serial in sample order so results do not depend on the thread count.
template <class Term>
GradEstimate sampled_mean(const std::vector<Pattern>& samples, Eigen::Index dim, Term&& term,
                          const char* who) {
    const auto t = static_cast<std::int64_t>(samples.size());
    if (t == 0) {
        throw Error(ErrorKind::invalid_argument, std::string(who) + ": empty batch");
    }
    std::vector<Vector> terms(samples.size());
#pragma omp parallel for schedule(static) num_threads(kernels::max_threads())
    for (std::int64_t i = 0; i < t; ++i) {
        terms[static_cast<std::size_t>(i)] = term(samples[static_cast<std::size_t>(i)]);
    }
    Vector mean = Vector::Zero(dim);
    for (const Vector& g : terms) {
        mean += g;
    }
    mean /= static_cast<double>(t);
    Vector var = Vector::Zero(dim);
    for (const Vector& g : terms) {
        var += (g - mean).cwiseAbs2();
    }
    Vector se = Vector::Zero(dim);
    if (t > 1) {
        se = (var / static_cast<double>(t - 1) / static_cast<double>(t)).cwiseSqrt();
    }
    GradEstimate out;
    out.value = std::move(mean);
    out.sampled = true;
    out.samples = static_cast<int>(t);
    out.std_error = std::move(se);
    return out;
}

template <class Term>
GradEstimate exact_sum(const Enumeration& e, Eigen::Index dim, Term&& term) {
    Vector sum = Vector::Zero(dim);
    for (std::size_t i = 0; i < e.patterns.size(); ++i) {
        if (e.probs[i] != 0.0) {
            sum += e.probs[i] * term(e.patterns[i]);
        }
    }
    GradEstimate out;
    out.value = std::move(sum);
    return out;
}

Vector explicit_term(const CostFn& h, std::span<const int> n, const WawParams& p) {
    if (!h.dtheta) {
        return Vector::Zero(p.dim());
    }
    Vector d = h.dtheta(n, p);
    if (d.size() != p.dim()) {
        throw Error(ErrorKind::dimension_mismatch, "CostFn::dtheta: wrong gradient length");
    }
    return d;
}

}  // namespace

CostFn CostFn::constant(double c) {
    return CostFn{[c](std::span<const int>) { return c; }, {}};
}

CostFn CostFn::of(std::function<double(std::span<const int>)> f) {
    return CostFn{std::move(f), {}};
}

CostFn CostFn::lifted(std::function<double(std::span<const int>)> click_cost) {
    return CostFn{[f = std::move(click_cost)](std::span<const int> n) {
                      const Pattern x = to_clicks(n);
                      return f(x);
                  },
                  {}};
}

Vector grad_prob_general(const AMatrix& a, std::span<const SymMatrix> directions,
                         std::span<const int> n) {
    const int m = a.modes();
    if (static_cast<int>(n.size()) != m) {
        throw Error(ErrorKind::dimension_mismatch, "grad_prob_general: pattern length mismatch");
    }
    const WawParams unit = WawParams::identity(m);
    const double prob = prob_photon(a, unit, n);
    const GaussianViews g = gaussian_views(a);
    const Matrix resolvent = inverse(g.x - g.cal_a);

    const SymMatrix a_n = reduce_matrix(a.sym(), n);
    const double haf = hafnian_reduced(a.sym(), n);
    double inv_fact = 1.0;
    for (int v : n) {
        for (int j = 2; j <= v; ++j) {
            inv_fact /= j;
        }
    }
    const double prefactor = normalization(a) * inv_fact;

    Vector out(static_cast<Eigen::Index>(directions.size()));
    for (std::size_t j = 0; j < directions.size(); ++j) {
        const SymMatrix& d = directions[j];
        if (d.dim() != m) {
            throw Error(ErrorKind::dimension_mismatch, "grad_prob_general: direction dimension");
        }
        Matrix dcal = Matrix::Zero(2 * m, 2 * m);
        dcal.topLeftCorner(m, m) = d.mat();
        dcal.bottomRightCorner(m, m) = d.mat();
        const double trace = (resolvent * dcal).trace();
        // Haf(calA_{n+n}) = Haf(A_n)^2 for a pure state.
        const double dhaf = hafnian_gradient(a_n, reduce_matrix(d, n));
        out(static_cast<Eigen::Index>(j)) = -0.5 * trace * prob + prefactor * 2.0 * haf * dhaf;
    }
    return out;
}

Vector grad_prob_waw(const AMatrix& a, const WawParams& p, std::span<const int> n) {
    require_modes(a, p, "grad_prob_waw");
    const AMatrix aw = apply_waw(a, p);
    const double prob = prob_photon(a, p, n);
    const Vector nk = mean_photon_modes(aw);
    return ((to_vector(n) - nk).cwiseProduct(inverse_weights(p.weights()))) * prob;
}

Vector grad_prob_theta(const AMatrix& a, const WawParams& p, std::span<const int> n) {
    require_modes(a, p, "grad_prob_theta");
    const AMatrix aw = apply_waw(a, p);
    const double prob = prob_photon(a, p, n);
    const Vector nk = mean_photon_modes(aw);
    return p.dlog_weights().transpose() * ((to_vector(n) - nk) * prob);
}

GradEstimate grad_cost_waw(const AMatrix& a, const WawParams& p, const CostFn& h,
                           const SampleBatch& batch) {
    require_modes(a, p, "grad_cost_waw");
    require_detector(batch, Detector::photon, "grad_cost_waw");
    const Vector nk = mean_photon_modes(apply_waw(a, p));
    const Matrix jt = p.dlog_weights().transpose();
    GradEstimate g = sampled_mean(
        batch.samples(), p.dim(),
        [&](const Pattern& n) -> Vector {
            return h.value(n) * (jt * (to_vector(n) - nk)) + explicit_term(h, n, p);
        },
        "grad_cost_waw");
    g.clamped = p.clamped();
    return g;
}

GradEstimate grad_cost_waw_exact(const AMatrix& a, const WawParams& p, const CostFn& h,
                                 int cutoff) {
    require_modes(a, p, "grad_cost_waw_exact");
    const Vector nk = mean_photon_modes(apply_waw(a, p));
    const Matrix jt = p.dlog_weights().transpose();
    GradEstimate g = exact_sum(enumerate_photon(a, p, cutoff), p.dim(), [&](const Pattern& n) -> Vector {
        return h.value(n) * (jt * (to_vector(n) - nk)) + explicit_term(h, n, p);
    });
    g.clamped = p.clamped();
    return g;
}

Vector grad_kl_classical(const AMatrix& a, const WawParams& p, const SampleBatch& data) {
    require_modes(a, p, "grad_kl_classical");
    require_detector(data, Detector::photon, "grad_kl_classical");
    const Vector nk = mean_photon_modes(apply_waw(a, p));
    return -(p.dlog_weights().transpose() * (data.means() - nk));
}

Vector grad_log_likelihood(const AMatrix& a, const WawParams& p, const SampleBatch& data) {
    return -static_cast<double>(data.size()) * grad_kl_classical(a, p, data);
}

Vector grad_kl_threshold(const AMatrix& a, const WawParams& p, const SampleBatch& data) {
    require_modes(a, p, "grad_kl_threshold");
    require_detector(data, Detector::click, "grad_kl_threshold");
    const Vector xk = click_probs(apply_waw(a, p));
    return -(p.dlog_weights().transpose() * (data.means() - xk));
}

double kl_photon(const AMatrix& a, const WawParams& p, const SampleBatch& data) {
    require_detector(data, Detector::photon, "kl_photon");
    if (data.size() == 0) {
        throw Error(ErrorKind::invalid_argument, "kl_photon: empty data");
    }
    std::map<Pattern, int> counts;
    for (const Pattern& n : data.samples()) {
        ++counts[n];
    }
    double kl = 0.0;
    const double t = data.size();
    for (const auto& [n, c] : counts) {
        const double q = c / t;
        kl += q * std::log(q / prob_photon(a, p, n));
    }
    return kl;
}

const char* to_string(ThresholdRegime r) noexcept {
    switch (r) {
        case ThresholdRegime::small_n: return "small_n";
        case ThresholdRegime::large_n: return "large_n";
        case ThresholdRegime::lower_bound: return "lower_bound";
    }
    return "unknown";
}

double threshold_factor(ThresholdRegime regime, int x, double mean_clicks, double mean_photons) {
    switch (regime) {
        case ThresholdRegime::small_n:
            return x - mean_clicks;
        case ThresholdRegime::large_n:
            return std::max(mean_photons * (x - 1), x - mean_photons);
        case ThresholdRegime::lower_bound:
            return x - mean_photons;
    }
    return 0.0;
}

namespace {

struct ThresholdTerm {
    const CostFn& h;
    const WawParams& p;
    ThresholdRegime regime;
    Vector xk;
    Vector nk;
    Matrix jt;

    Vector operator()(const Pattern& x) const {
        Vector f(xk.size());
        for (Eigen::Index k = 0; k < xk.size(); ++k) {
            f(k) = threshold_factor(regime, x[static_cast<std::size_t>(k)], xk(k), nk(k));
        }
        return h.value(x) * (jt * f) + explicit_term(h, x, p);
    }
};

ThresholdTerm make_threshold_term(const AMatrix& a, const WawParams& p, const CostFn& h,
                                  ThresholdRegime regime) {
    const AMatrix aw = apply_waw(a, p);
    return ThresholdTerm{h, p, regime, click_probs(aw), mean_photon_modes(aw),
                         p.dlog_weights().transpose()};
}

}  // namespace

GradEstimate grad_cost_threshold(const AMatrix& a, const WawParams& p, const CostFn& h,
                                 const SampleBatch& batch, ThresholdRegime regime) {
    require_modes(a, p, "grad_cost_threshold");
    require_detector(batch, Detector::click, "grad_cost_threshold");
    const ThresholdTerm term = make_threshold_term(a, p, h, regime);
    GradEstimate g = sampled_mean(batch.samples(), p.dim(), term, "grad_cost_threshold");
    g.clamped = p.clamped();
    return g;
}

GradEstimate grad_cost_threshold_exact(const AMatrix& a, const WawParams& p, const CostFn& h,
                                       ThresholdRegime regime) {
    require_modes(a, p, "grad_cost_threshold_exact");
    const ThresholdTerm term = make_threshold_term(a, p, h, regime);
    GradEstimate g = exact_sum(enumerate_click(a, p), p.dim(), term);
    g.clamped = p.clamped();
    return g;
}

double reparam_cost(const AMatrix& a, const WawParams& p, const CostFn& h, std::span<const int> n) {
    require_modes(a, p, "reparam_cost");
    if (static_cast<int>(n.size()) != a.modes()) {
        throw Error(ErrorKind::dimension_mismatch, "reparam_cost: pattern length mismatch");
    }
    const double ratio = normalization(apply_waw(a, p)) / normalization(a);
    double weight = 1.0;
    for (std::size_t k = 0; k < n.size(); ++k) {
        weight *= std::pow(p.weights()(static_cast<Eigen::Index>(k)), n[k]);
    }
    return h.value(n) * ratio * weight;
}

namespace {

struct ReparamTerm {
    const CostFn& h;
    Vector w;
    double ratio;
    Vector nk;
    Matrix jt;

    Vector operator()(const Pattern& n) const {
        double weight = ratio;
        for (std::size_t k = 0; k < n.size(); ++k) {
            weight *= std::pow(w(static_cast<Eigen::Index>(k)), n[k]);
        }
        return h.value(n) * weight * (jt * (to_vector(n) - nk));
    }
};

ReparamTerm make_reparam_term(const AMatrix& a, const WawParams& p, const CostFn& h) {
    const AMatrix aw = apply_waw(a, p);
    return ReparamTerm{h, p.weights(), normalization(aw) / normalization(a),
                       mean_photon_modes(aw), p.dlog_weights().transpose()};
}

}  // namespace

GradEstimate grad_cost_reparam(const AMatrix& a, const WawParams& p, const CostFn& h,
                               const SampleBatch& reference) {
    require_modes(a, p, "grad_cost_reparam");
    require_detector(reference, Detector::photon, "grad_cost_reparam");
    const ReparamTerm term = make_reparam_term(a, p, h);
    GradEstimate g = sampled_mean(reference.samples(), p.dim(), term, "grad_cost_reparam");
    g.clamped = p.clamped();
    return g;
}

GradEstimate grad_cost_reparam_exact(const AMatrix& a, const WawParams& p, const CostFn& h,
                                     int cutoff) {
    require_modes(a, p, "grad_cost_reparam_exact");
    const ReparamTerm term = make_reparam_term(a, p, h);
    const Enumeration ref = enumerate_photon(a, WawParams::identity(a.modes()), cutoff);
    GradEstimate g = exact_sum(ref, p.dim(), term);
    g.clamped = p.clamped();
    return g;
}

namespace {

struct NrdTerm {
    const CostFn& h;
    Vector inv_w;
    Vector nk;

    Vector operator()(const Pattern& n) const {
        return h.value(n) * (to_vector(n) - nk).cwiseProduct(inv_w);
    }
};

}  // namespace

GradEstimate grad_energy_nrd(const AMatrix& a, const WawParams& p, const CostFn& h,
                             const SampleBatch& batch) {
    require_modes(a, p, "grad_energy_nrd");
    require_detector(batch, Detector::photon, "grad_energy_nrd");
    const NrdTerm term{h, inverse_weights(p.weights()), mean_photon_modes(apply_waw(a, p))};
    GradEstimate g = sampled_mean(batch.samples(), a.modes(), term, "grad_energy_nrd");
    g.clamped = any_clamped(p.weights());
    return g;
}

GradEstimate grad_energy_nrd_exact(const AMatrix& a, const WawParams& p, const CostFn& h,
                                   int cutoff) {
    require_modes(a, p, "grad_energy_nrd_exact");
    const NrdTerm term{h, inverse_weights(p.weights()), mean_photon_modes(apply_waw(a, p))};
    GradEstimate g = exact_sum(enumerate_photon(a, p, cutoff), a.modes(), term);
    g.clamped = any_clamped(p.weights());
    return g;
}

}  // namespace gbs

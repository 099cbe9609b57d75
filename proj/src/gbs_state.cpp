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

#include "gbs/gbs_state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gbs/error.hpp"

namespace gbs {

namespace {

constexpr double kValidityTol = 1e-12;  // eigensolver rounding near the boundary
constexpr double kRescaleTol = 1e-8;
constexpr int kBisectionIters = 60;

double max_abs_eigenvalue(const SymMatrix& a) {
    if (a.dim() == 0) {
        return 0.0;
    }
    const Vector ev = sym_eigendecomposition(a).values;
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double photons_from_eigenvalues(const Vector& ev, double c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const double l2 = c * c * ev(i) * ev(i);
        total += l2 / (1.0 - l2);
    }
    return total;
}

}  // namespace

Validity validate(const SymMatrix& a) {
    const double s = max_abs_eigenvalue(a);
    return {s <= 1.0 - kPhysicalityMargin + kValidityTol, s};
}

AMatrix::AMatrix(SymMatrix a) : a_(std::move(a)) {
    const Validity v = validate(a_);
    if (!v.valid) {
        throw Error(ErrorKind::invalid_state,
                    "AMatrix: largest singular value " + std::to_string(v.max_singular_value) +
                        " is not below 1");
    }
}

WawParams WawParams::reparametrized(Vector theta, std::vector<Vector> features) {
    WawParams p;
    p.mode_ = Mode::reparametrized;
    const auto d = theta.size();
    p.weights_.resize(static_cast<Eigen::Index>(features.size()));
    for (std::size_t k = 0; k < features.size(); ++k) {
        if (features[k].size() != d) {
            throw Error(ErrorKind::dimension_mismatch,
                        "WawParams: feature " + std::to_string(k) + " has wrong length");
        }
        const double s = theta.dot(features[k]);
        if (!std::isfinite(s) || s < -1e-12) {
            throw Error(ErrorKind::invalid_argument,
                        "WawParams: theta . f_" + std::to_string(k) + " = " + std::to_string(s) +
                            " is negative, weight would exceed 1");
        }
        p.weights_(static_cast<Eigen::Index>(k)) = std::exp(-std::max(s, 0.0));
    }
    p.theta_ = std::move(theta);
    p.features_ = std::move(features);
    return p;
}

WawParams WawParams::basis(Vector theta) {
    const auto m = theta.size();
    std::vector<Vector> features;
    features.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index k = 0; k < m; ++k) {
        features.push_back(Vector::Unit(m, k));
    }
    WawParams p = reparametrized(std::move(theta), std::move(features));
    p.basis_ = true;
    return p;
}

WawParams WawParams::direct(Vector weights) {
    WawParams p;
    p.mode_ = Mode::direct;
    p.basis_ = true;
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
        if (!std::isfinite(weights(k))) {
            throw Error(ErrorKind::invalid_argument, "WawParams: non-finite weight");
        }
        weights(k) = std::clamp(weights(k), 0.0, 1.0);
    }
    p.theta_ = weights;
    p.weights_ = std::move(weights);
    return p;
}

WawParams WawParams::identity(int m) { return direct(Vector::Ones(m)); }

Matrix WawParams::dlog_weights() const {
    const int m = modes();
    Matrix j = Matrix::Zero(m, dim());
    if (mode_ == Mode::direct) {
        for (int k = 0; k < m; ++k) {
            j(k, k) = 1.0 / std::max(weights_(k), kMinWeight);
        }
    } else {
        for (int k = 0; k < m; ++k) {
            j.row(k) = -features_[static_cast<std::size_t>(k)].transpose();
        }
    }
    return j;
}

bool WawParams::clamped() const noexcept {
    if (mode_ != Mode::direct) {
        return false;
    }
    return (weights_.array() < kMinWeight).any();
}

WawParams WawParams::with_theta(Vector theta) const {
    if (theta.size() != theta_.size()) {
        throw Error(ErrorKind::dimension_mismatch, "WawParams::with_theta: length mismatch");
    }
    if (mode_ == Mode::direct) {
        return direct(std::move(theta));
    }
    WawParams p = reparametrized(std::move(theta), features_);
    p.basis_ = basis_;
    return p;
}

GaussianViews gaussian_views(const AMatrix& a) {
    const int m = a.modes();
    GaussianViews g;
    g.cal_a = Matrix::Zero(2 * m, 2 * m);
    g.cal_a.topLeftCorner(m, m) = a.mat();
    g.cal_a.bottomRightCorner(m, m) = a.mat();
    g.x = Matrix::Zero(2 * m, 2 * m);
    g.x.topRightCorner(m, m) = Matrix::Identity(m, m);
    g.x.bottomLeftCorner(m, m) = Matrix::Identity(m, m);
    const Matrix id = Matrix::Identity(2 * m, 2 * m);
    g.q = inverse(id - g.x * g.cal_a);
    g.v = g.q - 0.5 * id;
    return g;
}

SymMatrix apply_waw(const SymMatrix& a, const Vector& weights) {
    if (weights.size() != a.dim()) {
        throw Error(ErrorKind::dimension_mismatch,
                    "apply_waw: " + std::to_string(weights.size()) + " weights for " +
                        std::to_string(a.dim()) + " modes");
    }
    const Vector s = weights.cwiseMax(0.0).cwiseSqrt();
    Matrix out = s.asDiagonal() * a.mat() * s.asDiagonal();
    return SymMatrix::symmetrized(out);
}

AMatrix apply_waw(const AMatrix& a, const WawParams& p) {
    return AMatrix(apply_waw(a.sym(), p.weights()));
}

Vector mean_photon_modes(const AMatrix& a) {
    const int m = a.modes();
    if (m == 0) {
        return Vector(0);
    }
    const EigenDecomposition ed = sym_eigendecomposition(a.sym());
    Vector g(m);
    for (int i = 0; i < m; ++i) {
        const double l2 = ed.values(i) * ed.values(i);
        g(i) = l2 / (1.0 - l2);
    }
    return (ed.vectors.array().square().matrix() * g);
}

double mean_photons(const AMatrix& a) {
    if (a.modes() == 0) {
        return 0.0;
    }
    return photons_from_eigenvalues(sym_eigendecomposition(a.sym()).values, 1.0);
}

Vector click_probs(const AMatrix& a) {
    const int m = a.modes();
    const GaussianViews g = gaussian_views(a);
    Vector out(m);
    for (int k = 0; k < m; ++k) {
        const double det = g.q(k, k) * g.q(k + m, k + m) - g.q(k, k + m) * g.q(k + m, k);
        out(k) = 1.0 - 1.0 / std::sqrt(det);
    }
    return out;
}

double normalization(const AMatrix& a) {
    if (a.modes() == 0) {
        return 1.0;
    }
    const Vector ev = sym_eigendecomposition(a.sym()).values;
    double p = 1.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        p *= std::sqrt(1.0 - ev(i) * ev(i));
    }
    return p;
}

namespace {

struct MetricEval {
    const SymMatrix& a;
    Metric metric;
    Vector eigenvalues;

    double operator()(double c) const {
        if (metric == Metric::mean_photons) {
            return photons_from_eigenvalues(eigenvalues, c);
        }
        const AMatrix scaled(SymMatrix(c * a.mat()));
        return click_probs(scaled).sum();
    }
};

}  // namespace

double max_achievable(const SymMatrix& a, Metric metric) {
    const double smax = max_abs_eigenvalue(a);
    if (smax == 0.0) {
        return 0.0;
    }
    const MetricEval f{a, metric, sym_eigendecomposition(a).values};
    return f((1.0 - kPhysicalityMargin) / smax);
}

Rescaled rescale_to_target(const SymMatrix& a, double target, Metric metric) {
    if (!(target >= 0.0) || !std::isfinite(target)) {
        throw Error(ErrorKind::invalid_argument, "rescale_to_target: target must be >= 0");
    }
    if (target == 0.0) {
        return {AMatrix(SymMatrix::zeros(a.dim())), 0.0};
    }
    const double smax = max_abs_eigenvalue(a);
    if (smax == 0.0) {
        throw Error(ErrorKind::invalid_argument, "rescale_to_target: matrix is zero");
    }
    const MetricEval f{a, metric, sym_eigendecomposition(a).values};
    double hi = (1.0 - kPhysicalityMargin) / smax;
    const double top = f(hi);
    if (top < target - kRescaleTol) {
        throw Error(ErrorKind::infeasible_rescale,
                    "rescale_to_target: target " + std::to_string(target) +
                        " unreachable, max achievable " + std::to_string(top));
    }
    double lo = 0.0;
    double c = hi;
    double value = top;
    for (int it = 0; it < kBisectionIters && std::abs(value - target) > 1e-12; ++it) {
        c = 0.5 * (lo + hi);
        value = f(c);
        if (value < target) {
            lo = c;
        } else {
            hi = c;
        }
    }
    if (std::abs(value - target) > kRescaleTol) {
        throw Error(ErrorKind::numerical, "rescale_to_target: bisection did not reach tolerance");
    }
    return {AMatrix(SymMatrix(c * a.mat())), c};
}

AMatrix random_a_matrix(int m, double sigma_max, Rng& rng) {
    Matrix r(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            r(i, j) = r(j, i) = uniform_range(rng, -1.0, 1.0);
        }
    }
    SymMatrix s(r);
    const double smax = max_abs_eigenvalue(s);
    return AMatrix(SymMatrix(r * (sigma_max / smax)));
}

}  // namespace gbs

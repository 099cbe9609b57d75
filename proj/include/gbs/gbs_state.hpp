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

#include <vector>

#include "gbs/numerics.hpp"
#include "gbs/rng.hpp"

namespace gbs {

/// Singular values of a physical A-matrix must not exceed 1 - kPhysicalityMargin.
inline constexpr double kPhysicalityMargin = 1e-9;

struct Validity {
    bool valid = false;
    double max_singular_value = 0.0;
};

/// True iff the largest singular value of `a` is below 1 - kPhysicalityMargin.
Validity validate(const SymMatrix& a);

/// A pure-state GBS kernel: a real symmetric matrix with singular values in
/// [0, 1 - kPhysicalityMargin]. Immutable once built.
class AMatrix {
public:
    explicit AMatrix(SymMatrix a);

    int modes() const noexcept { return a_.dim(); }
    const SymMatrix& sym() const noexcept { return a_; }
    const Matrix& mat() const noexcept { return a_.mat(); }

private:
    SymMatrix a_;
};

/// Diagonal weights for the WAW parametrization.
///
/// Two modes share this type:
///  - reparametrized: w_k = exp(-theta . f_k) with features f_k of length d,
///    requiring theta . f_k >= 0 so that w_k lies in (0, 1];
///  - direct: theta *is* the weight vector (d = m), clipped to [0, 1].
///
/// `dlog_weights()` returns the m x d Jacobian of log w with respect to theta;
/// in direct mode its diagonal is 1 / max(w_k, kMinWeight) and `clamped()`
/// reports whether the floor was hit.
class WawParams {
public:
    enum class Mode { reparametrized, direct };

    static constexpr double kMinWeight = 1e-8;

    static WawParams reparametrized(Vector theta, std::vector<Vector> features);
    /// Reparametrized with f_k = e_k, so w_k = exp(-theta_k).
    static WawParams basis(Vector theta);
    static WawParams direct(Vector weights);
    /// Direct mode with every weight 1.
    static WawParams identity(int m);

    Mode mode() const noexcept { return mode_; }
    int modes() const noexcept { return static_cast<int>(weights_.size()); }
    int dim() const noexcept { return static_cast<int>(theta_.size()); }
    const Vector& theta() const noexcept { return theta_; }
    const Vector& weights() const noexcept { return weights_; }
    const std::vector<Vector>& features() const noexcept { return features_; }
    bool is_basis() const noexcept { return basis_; }

    Matrix dlog_weights() const;
    bool clamped() const noexcept;

    /// Same features and mode, new theta (or new weights in direct mode).
    WawParams with_theta(Vector theta) const;

private:
    WawParams() = default;

    Mode mode_ = Mode::direct;
    bool basis_ = false;
    Vector theta_;
    std::vector<Vector> features_;
    Vector weights_;
};

/// Matrices of the Gaussian-state description for a pure real A.
struct GaussianViews {
    Matrix cal_a;  // A (+) A, 2m x 2m
    Matrix x;      // [[0, 1], [1, 0]]
    Matrix q;      // (1 - X cal_a)^{-1}
    Matrix v;      // covariance, cal_a = X (1 - (V + 1/2)^{-1})
};

GaussianViews gaussian_views(const AMatrix& a);

/// (A_W)_ij = sqrt(w_i w_j) A_ij. No physicality requirement.
SymMatrix apply_waw(const SymMatrix& a, const Vector& weights);
/// Physical WAW: the weights of `p` lie in [0, 1], so the result is valid.
AMatrix apply_waw(const AMatrix& a, const WawParams& p);

/// Per-mode mean photon number, diag(A^2 (1 - A^2)^{-1}).
Vector mean_photon_modes(const AMatrix& a);
/// Total mean photon number sum_i l_i^2 / (1 - l_i^2) over eigenvalues l_i.
double mean_photons(const AMatrix& a);
/// Per-mode click probability 1 - det(Q^(k))^{-1/2}.
Vector click_probs(const AMatrix& a);
/// sqrt(det(1 - A^2)), the vacuum probability.
double normalization(const AMatrix& a);

enum class Metric { mean_photons, mean_clicks };

struct Rescaled {
    AMatrix a;
    double c;
};

/// Finds c so that c * a has the requested total (within 1e-8) by bisection
/// on [0, (1 - margin) / sigma_max]. Throws ErrorKind::infeasible_rescale with
/// the maximum achievable value when the target is out of reach.
Rescaled rescale_to_target(const SymMatrix& a, double target, Metric metric);

/// Largest achievable metric value for c * a below the physicality bound.
double max_achievable(const SymMatrix& a, Metric metric);

/// Random symmetric matrix with entries in [-1, 1], scaled to the given
/// largest singular value.
AMatrix random_a_matrix(int m, double sigma_max, Rng& rng);

}  // namespace gbs

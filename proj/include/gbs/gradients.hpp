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

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gbs/distribution.hpp"
#include "gbs/gbs_state.hpp"

namespace gbs {

/// A cost H over detector outcomes. `dtheta`, when set, is the explicit
/// derivative of a parameter-dependent cost and is added to the score term.
struct CostFn {
    std::function<double(std::span<const int>)> value;
    std::function<Vector(std::span<const int>, const WawParams&)> dtheta;

    static CostFn constant(double c);
    static CostFn of(std::function<double(std::span<const int>)> f);
    /// H(n) = H(x(n)) for a cost defined on click patterns.
    static CostFn lifted(std::function<double(std::span<const int>)> click_cost);
};

struct GradEstimate {
    Vector value;
    bool sampled = false;
    int samples = 0;
    std::optional<Vector> std_error;  // set iff sampled
    bool clamped = false;             // a weight hit WawParams::kMinWeight
};

// --- general parametrization -------------------------------------------------

/// d P(n) / d theta_j for A(theta) with dA/dtheta_j = directions[j]:
/// the normalization trace term -1/2 Tr[(X - calA)^{-1} dcalA] P(n) plus the
/// hafnian-derivative term on the reduced matrix.
Vector grad_prob_general(const AMatrix& a, std::span<const SymMatrix> directions,
                         std::span<const int> n);

// --- WAW parametrization -----------------------------------------------------

/// dP_{A,W}(n)/dw_k = (n_k - <n_k>) / w_k * P(n), <n_k> measured on A_W.
/// Weights are floored at WawParams::kMinWeight.
Vector grad_prob_waw(const AMatrix& a, const WawParams& p, std::span<const int> n);

/// Chain rule to theta: sum_k (n_k - <n_k>) P(n) dlog w_k / dtheta.
Vector grad_prob_theta(const AMatrix& a, const WawParams& p, std::span<const int> n);

/// Score-function estimate of dC/dtheta from photon samples of the current state.
GradEstimate grad_cost_waw(const AMatrix& a, const WawParams& p, const CostFn& h,
                           const SampleBatch& batch);
/// Same expectation summed over all photon patterns with total <= cutoff.
GradEstimate grad_cost_waw_exact(const AMatrix& a, const WawParams& p, const CostFn& h,
                                 int cutoff = kDefaultCutoff);

// --- classical KL / log-likelihood gradients --------------------------------

/// Gradient of KL(data || P_{A,W}) from photon data:
/// -sum_k (<n_k>_data - <n_k>_GBS) dlog w_k/dtheta. In reparametrized mode this
/// is F_data - sum_k <n_k>_GBS f_k.
Vector grad_kl_classical(const AMatrix& a, const WawParams& p, const SampleBatch& data);

/// Gradient of sum_t log P(n_t); equals -T * grad_kl_classical.
Vector grad_log_likelihood(const AMatrix& a, const WawParams& p, const SampleBatch& data);

/// Threshold-detector analogue using click marginals <x_k>.
Vector grad_kl_threshold(const AMatrix& a, const WawParams& p, const SampleBatch& data);

/// KL(data || P) over photon patterns, data taken as its empirical distribution.
double kl_photon(const AMatrix& a, const WawParams& p, const SampleBatch& data);

// --- threshold-detector cost gradients ---------------------------------------

enum class ThresholdRegime {
    small_n,      // x_k - <x_k>
    large_n,      // max{<n_k>(x_k - 1), x_k - <n_k>}
    lower_bound,  // x_k - <n_k>, a lower bound on the exact gradient for H >= 0
};

const char* to_string(ThresholdRegime r) noexcept;

/// Per-mode score factor for a click pattern under the given regime.
double threshold_factor(ThresholdRegime regime, int x, double mean_clicks, double mean_photons);

GradEstimate grad_cost_threshold(const AMatrix& a, const WawParams& p, const CostFn& h,
                                 const SampleBatch& batch, ThresholdRegime regime);
/// Exact expectation over all 2^m click patterns.
GradEstimate grad_cost_threshold_exact(const AMatrix& a, const WawParams& p, const CostFn& h,
                                       ThresholdRegime regime);

// --- fixed-state reparametrization ------------------------------------------

/// H_A(n, W) = H(n) sqrt(det(1 - A_W^2) / det(1 - A^2)) prod_j w_j^n_j, so that
/// E_{P_A}[H_A] = E_{P_{A,W}}[H].
double reparam_cost(const AMatrix& a, const WawParams& p, const CostFn& h, std::span<const int> n);

/// Estimate from a batch drawn once from the reference state A (W = 1).
GradEstimate grad_cost_reparam(const AMatrix& a, const WawParams& p, const CostFn& h,
                               const SampleBatch& reference);
GradEstimate grad_cost_reparam_exact(const AMatrix& a, const WawParams& p, const CostFn& h,
                                     int cutoff = kDefaultCutoff);

// --- photon-resolved Ising energy ------------------------------------------

/// Per-weight estimate of dE/dw_k = E[H(x(n)) (n_k - <n_k>) / w_k] from photon
/// samples; `h` is evaluated on the photon pattern (use CostFn::lifted).
GradEstimate grad_energy_nrd(const AMatrix& a, const WawParams& p, const CostFn& h,
                             const SampleBatch& batch);
GradEstimate grad_energy_nrd_exact(const AMatrix& a, const WawParams& p, const CostFn& h,
                                   int cutoff = kDefaultCutoff);

}  // namespace gbs

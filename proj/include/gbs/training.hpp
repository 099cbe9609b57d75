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
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gbs/distribution.hpp"
#include "gbs/gbs_state.hpp"
#include "gbs/gradients.hpp"
#include "gbs/graphs.hpp"

namespace gbs {

enum class OptimizerKind { sgd, momentum };

const char* to_string(OptimizerKind k) noexcept;
OptimizerKind optimizer_from_string(const std::string& s);

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::sgd;
    double lr = 0.1;
    double beta = 0.0;
    Vector velocity;

    static OptimizerState sgd(double lr, int dim);
    static OptimizerState momentum(double lr, double beta, int dim);
};

struct OptimizerStep {
    OptimizerState state;
    Vector theta;
};

/// sgd: theta - lr g. momentum: v = beta v + g, theta - lr v.
OptimizerStep optimizer_step(const OptimizerState& s, const Vector& theta, const Vector& g);

/// Nearest (Frobenius) symmetric matrix with spectrum in
/// [-(1 - kPhysicalityMargin), 1 - kPhysicalityMargin]. Symmetrizes first.
AMatrix project(const Matrix& x);
AMatrix project(const SymMatrix& x);

/// Gradient of the cost with respect to theta for the state a_w = W A W,
/// evaluated with parameters p.
using WawGradFn = std::function<Vector(const AMatrix& a_w, const WawParams& p)>;

/// One cycle: theta = 0 (all w = 1), one optimizer step, W A W with the new
/// weights (which may exceed 1), then project. `opt` keeps its velocity.
AMatrix projected_subgrad_step(const AMatrix& a, const WawGradFn& grad, OptimizerState& opt);

struct TraceRow {
    int iter = 0;
    double cost = 0.0;
    double grad_norm = 0.0;
    double metric = 0.0;  // success probability (VIS) or weight distance (unsupervised)
    double wall_ms = 0.0;
    Vector weights;
    double unconditioned = 0.0;  // VIS only: ground-state hits over all samples
    int k_click_samples = 0;     // VIS only
    bool saturated = false;      // VIS only: target clicks not reachable, state at the boundary
};

struct TrainingTrace {
    std::string metric_name;
    std::vector<TraceRow> rows;

    /// iter,cost,grad_norm,success_prob_or_wdist,wall_ms
    void write_csv(std::ostream& os) const;
};

std::vector<TraceRow> read_trace_csv(std::istream& is);

using IterationHook = std::function<void(const TraceRow&)>;

// ---- variational Ising solver ----

struct VisConfig {
    Graph graph{1};
    int k = 2;
    double c_v = 4.0;
    double c_e = 1.0;
    int samples = 1000;
    int iterations = 100;
    double lr = 0.05;
    double beta = 0.9;
    ThresholdRegime regime = ThresholdRegime::large_n;
    std::uint64_t seed = 0;

    /// c_v = 2K, c_e = 1.
    static VisConfig for_graph(Graph g, int k);
    void validate() const;
};

struct VisResult {
    TrainingTrace trace;
    Vector weights;                            // normalized, sum 1
    double scale = 0.0;                        // c of the last state
    std::vector<std::vector<int>> ground_states;  // bit strings
};

/// Ground-state bit strings of the max-clique Ising model: the oracle's
/// cliques when they have exactly K vertices, otherwise exhaustive search.
std::vector<std::vector<int>> ising_ground_states(const MaxCliqueIsing& ising, const Graph& g);

/// State c W A W with sum_k <x_k> = K, or the boundary state if K clicks
/// are out of reach.
struct VisState {
    AMatrix a;
    double c;
    bool saturated;
};
VisState vis_state(const SymMatrix& adjacency, const Vector& weights, int k);

VisResult vis_train(const VisConfig& cfg, const IterationHook& hook = {});

// ---- unsupervised KL training ----

struct KlResult {
    TrainingTrace trace;
    WawParams params;
};

/// theta <- theta - lr * grad_kl_threshold. The model matrix `a` need not be
/// physical on its own; every W A W it produces is validated. The metric is
/// ||w_true - w||_2 when true weights are given, else the gradient norm.
/// The cost column is the mean negative log-likelihood of `data`.
KlResult kl_train(const SymMatrix& a, const SampleBatch& data, const WawParams& p0, double lr,
                  int iterations, const std::optional<Vector>& true_weights = std::nullopt,
                  const IterationHook& hook = {});

/// Same, driven by click marginals directly; the cost column is then the
/// summed Bernoulli KL between data and model marginals.
KlResult kl_train_marginals(const SymMatrix& a, const Vector& data_clicks, const WawParams& p0,
                            double lr, int iterations,
                            const std::optional<Vector>& true_weights = std::nullopt,
                            const IterationHook& hook = {});

enum class WeightProfile { increasing, decreasing, random };

const char* to_string(WeightProfile w) noexcept;
WeightProfile weight_profile_from_string(const std::string& s);

/// increasing: w_k = (k+1)/m; decreasing: reversed; random: uniform in [0,1)
/// from the data stream.
Vector make_weights(WeightProfile profile, int m, std::uint64_t seed);

struct UnsupConfig {
    GraphKind kind = Circulant{{1, 2}};
    int m = 16;
    double mean_photons = 3.0;
    WeightProfile profile = WeightProfile::increasing;
    int samples = 1000;
    double lr = 0.1;
    int iterations = 200;
    double theta0 = 5.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct UnsupResult {
    Graph graph{1};
    SymMatrix a;           // c * adjacency, c fixed by the data photon number
    double scale = 0.0;
    Vector true_weights;
    SampleBatch data;
    KlResult fit;
    Vector data_clicks;    // empirical marginals
    Vector model_clicks;   // trained model marginals
};

UnsupResult run_unsupervised(const UnsupConfig& cfg, const IterationHook& hook = {});

}  // namespace gbs

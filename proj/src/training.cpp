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


#include "gbs/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "gbs/error.hpp"
#include "gbs/kernels.hpp"

namespace gbs {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void require_finite(const Vector& v, const char* who) {
    if (!v.allFinite()) {
        throw Error(ErrorKind::numerical, std::string(who) + ": non-finite gradient");
    }
}

// Saturated VIS states sit this far inside the boundary rather than at
// kPhysicalityMargin; Q is then still well conditioned for sampling.
constexpr double kSaturationMargin = 1e-6;

}  // namespace

const char* to_string(OptimizerKind k) noexcept {
    return k == OptimizerKind::sgd ? "sgd" : "momentum";
}

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd") {
        return OptimizerKind::sgd;
    }
    if (s == "momentum") {
        return OptimizerKind::momentum;
    }
    throw Error(ErrorKind::config, "unknown optimizer '" + s + "' (expected sgd or momentum)");
}

OptimizerState OptimizerState::sgd(double lr, int dim) {
    return OptimizerState{OptimizerKind::sgd, lr, 0.0, Vector::Zero(dim)};
}

OptimizerState OptimizerState::momentum(double lr, double beta, int dim) {
    return OptimizerState{OptimizerKind::momentum, lr, beta, Vector::Zero(dim)};
}

OptimizerStep optimizer_step(const OptimizerState& s, const Vector& theta, const Vector& g) {
    if (theta.size() != g.size() || s.velocity.size() != theta.size()) {
        throw Error(ErrorKind::dimension_mismatch, "optimizer_step: parameter and gradient sizes differ");
    }
    if (!(s.lr >= 0.0) || !std::isfinite(s.lr)) {
        throw Error(ErrorKind::invalid_argument, "optimizer_step: learning rate must be >= 0");
    }
    if (!(s.beta >= 0.0 && s.beta < 1.0)) {
        throw Error(ErrorKind::invalid_argument, "optimizer_step: momentum must lie in [0, 1)");
    }
    require_finite(g, "optimizer_step");
    OptimizerStep out{s, theta};
    if (s.kind == OptimizerKind::sgd) {
        out.theta -= s.lr * g;
    } else {
        out.state.velocity = s.beta * s.velocity + g;
        out.theta -= s.lr * out.state.velocity;
    }
    return out;
}

AMatrix project(const Matrix& x) {
    if (x.rows() != x.cols()) {
        throw Error(ErrorKind::dimension_mismatch, "project: matrix is not square");
    }
    if (!x.allFinite()) {
        throw Error(ErrorKind::invalid_argument, "project: non-finite entries");
    }
    return project(SymMatrix::symmetrized(x));
}

AMatrix project(const SymMatrix& x) {
    if (x.dim() == 0) {
        return AMatrix(x);
    }
    if (validate(x).valid) {
        return AMatrix(x);
    }
    const EigenDecomposition ed = sym_eigendecomposition(x);
    const double bound = 1.0 - kPhysicalityMargin;
    const Vector clipped = ed.values.cwiseMax(-bound).cwiseMin(bound);
    Matrix out = ed.vectors * clipped.asDiagonal() * ed.vectors.transpose();
    SymMatrix s = SymMatrix::symmetrized(out);
    // Reconstruction can land a few ulps outside the bound.
    const Validity v = validate(s);
    if (!v.valid) {
        s = SymMatrix(s.mat() * (bound / v.max_singular_value));
    }
    return AMatrix(std::move(s));
}

AMatrix projected_subgrad_step(const AMatrix& a, const WawGradFn& grad, OptimizerState& opt) {
    const int m = a.modes();
    const WawParams unit = WawParams::basis(Vector::Zero(m));
    const Vector g = grad(a, unit);
    if (g.size() != m) {
        throw Error(ErrorKind::dimension_mismatch, "projected_subgrad_step: gradient length");
    }
    OptimizerStep step = optimizer_step(opt, unit.theta(), g);
    opt = std::move(step.state);
    const Vector w = (-step.theta).array().exp().matrix();
    return project(apply_waw(a.sym(), w));
}

void TrainingTrace::write_csv(std::ostream& os) const {
    os << "iter,cost,grad_norm,success_prob_or_wdist,wall_ms\n";
    char buf[160];
    for (const TraceRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.3f\n", r.iter, r.cost, r.grad_norm,
                      r.metric, r.wall_ms);
        os << buf;
    }
}

std::vector<TraceRow> read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("iter,", 0) != 0) {
        throw Error(ErrorKind::io, "read_trace_csv: missing header");
    }
    std::vector<TraceRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        TraceRow r;
        if (!(ls >> r.iter >> r.cost >> r.grad_norm >> r.metric >> r.wall_ms)) {
            throw Error(ErrorKind::io, "read_trace_csv: malformed row '" + line + "'");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---- VIS ----

VisConfig VisConfig::for_graph(Graph g, int k) {
    VisConfig cfg;
    cfg.graph = std::move(g);
    cfg.k = k;
    cfg.c_v = 2.0 * k;
    cfg.c_e = 1.0;
    return cfg;
}

void VisConfig::validate() const {
    if (k < 2 || k > graph.vertices()) {
        throw Error(ErrorKind::config, "vis: K must lie in [2, m]");
    }
    if (samples < 1 || iterations < 1) {
        throw Error(ErrorKind::config, "vis: samples and iterations must be >= 1");
    }
    if (!(c_v > 0.0) || !(c_e > 0.0)) {
        throw Error(ErrorKind::config, "vis: c_V and c_E must be > 0");
    }
    if (graph.vertices() > 16) {
        throw Error(ErrorKind::config, "vis: graphs above 16 vertices are out of budget");
    }
    if (!(lr > 0.0) || !(beta >= 0.0 && beta < 1.0)) {
        throw Error(ErrorKind::config, "vis: need lr > 0 and momentum in [0, 1)");
    }
}

std::vector<std::vector<int>> ising_ground_states(const MaxCliqueIsing& ising, const Graph& g) {
    const int m = g.vertices();
    const CliqueSearch cs = max_clique_oracle(g);
    std::vector<std::vector<int>> out;
    if (cs.size == ising.k) {
        for (const auto& c : cs.cliques) {
            std::vector<int> x(static_cast<std::size_t>(m), 0);
            for (int v : c) {
                x[static_cast<std::size_t>(v)] = 1;
            }
            out.push_back(std::move(x));
        }
        std::sort(out.begin(), out.end());
        return out;
    }
    if (m > 20) {
        throw Error(ErrorKind::budget_exceeded, "ising_ground_states: exhaustive search above 20 vertices");
    }
    double best = INFINITY;
    std::vector<int> x(static_cast<std::size_t>(m));
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        for (int k = 0; k < m; ++k) {
            x[static_cast<std::size_t>(k)] = static_cast<int>((mask >> k) & 1U);
        }
        const double e = ising.energy(x);
        if (e < best - 1e-9) {
            best = e;
            out.clear();
        }
        if (std::abs(e - best) <= 1e-9) {
            out.push_back(x);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

VisState vis_state(const SymMatrix& adjacency, const Vector& weights, int k) {
    const SymMatrix waw = apply_waw(adjacency, weights);
    try {
        Rescaled r = rescale_to_target(waw, static_cast<double>(k), Metric::mean_clicks);
        return VisState{std::move(r.a), r.c, false};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::infeasible_rescale) {
            throw;
        }
    }
    const Vector ev = sym_eigendecomposition(waw).values;
    const double smax = ev.cwiseAbs().maxCoeff();
    const double c = (1.0 - kSaturationMargin) / smax;
    return VisState{AMatrix(SymMatrix(c * waw.mat())), c, true};
}

VisResult vis_train(const VisConfig& cfg, const IterationHook& hook) {
    cfg.validate();
    const int m = cfg.graph.vertices();
    const SymMatrix adj = cfg.graph.adjacency();
    const MaxCliqueIsing ising = ising_maxclique(cfg.graph, cfg.k, cfg.c_v, cfg.c_e);

    VisResult res;
    res.trace.metric_name = "success_prob";
    res.ground_states = ising_ground_states(ising, cfg.graph);

    const CostFn energy = CostFn::of([&ising](std::span<const int> x) {
        return ising.energy(std::vector<int>(x.begin(), x.end()));
    });
    const WawParams unit = WawParams::identity(m);

    Vector w = Vector::Constant(m, 1.0 / m);
    OptimizerState opt = OptimizerState::momentum(cfg.lr, cfg.beta, m);
    const auto t0 = Clock::now();

    for (int it = 0; it < cfg.iterations; ++it) {
        const VisState st = vis_state(adj, w, cfg.k);
        res.scale = st.c;

        SampleOptions so;
        so.detector = Detector::click;
        so.count = cfg.samples;
        so.seed = derive_seed(cfg.seed, Stream::sampler, static_cast<std::uint64_t>(it));
        const SampleBatch batch = sample(st.a, unit, so);

        int k_clicks = 0;
        int hits = 0;
        double cost = 0.0;
        for (const Pattern& x : batch.samples()) {
            cost += ising.energy(x);
            int ones = 0;
            for (int v : x) {
                ones += v;
            }
            if (ones != cfg.k) {
                continue;
            }
            ++k_clicks;
            if (std::binary_search(res.ground_states.begin(), res.ground_states.end(), x)) {
                ++hits;
            }
        }

        // Derivative in log w at the physical state, then 1/w for direct weights.
        const GradEstimate ge = grad_cost_threshold(st.a, unit, energy, batch, cfg.regime);
        const Vector g = ge.value.cwiseQuotient(w.cwiseMax(WawParams::kMinWeight));

        TraceRow row;
        row.iter = it;
        row.cost = cost / batch.size();
        row.grad_norm = g.norm();
        row.metric = k_clicks > 0 ? static_cast<double>(hits) / k_clicks : 0.0;
        row.unconditioned = static_cast<double>(hits) / batch.size();
        row.k_click_samples = k_clicks;
        row.saturated = st.saturated;
        row.weights = w;

        OptimizerStep step = optimizer_step(opt, w, g);
        opt = std::move(step.state);
        w = step.theta.cwiseMax(0.0);
        const double total = w.sum();
        if (!(total > 0.0)) {
            throw Error(ErrorKind::invalid_state, "vis: every weight was driven to zero at iteration " +
                                                      std::to_string(it));
        }
        w /= total;

        row.wall_ms = elapsed_ms(t0);
        res.trace.rows.push_back(row);
        if (hook) {
            hook(row);
        }
    }
    res.weights = w;
    return res;
}

// ---- unsupervised ----

namespace {

double bernoulli_kl(double p, double q) {
    constexpr double eps = 1e-15;
    q = std::clamp(q, eps, 1.0 - eps);
    double out = 0.0;
    if (p > 0.0) {
        out += p * std::log(p / q);
    }
    if (p < 1.0) {
        out += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    }
    return out;
}

// Mean -log P(x) over the data, sharing vacuum probabilities across patterns.
double click_nll(const AMatrix& state, const std::vector<Pattern>& data) {
    const int m = state.modes();
    const Matrix q = gaussian_views(state).q;
    const std::uint64_t full = (m == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << m) - 1);
    std::unordered_map<std::uint64_t, double> vac;
    std::unordered_map<std::uint64_t, int> counts;
    for (const Pattern& x : data) {
        std::uint64_t mask = 0;
        for (int k = 0; k < m; ++k) {
            if (x[static_cast<std::size_t>(k)] != 0) {
                mask |= std::uint64_t{1} << k;
            }
        }
        ++counts[mask];
    }
    double nll = 0.0;
    for (const auto& [clicked, c] : counts) {
        const std::uint64_t empty = full & ~clicked;
        double p = 0.0;
        std::uint64_t t = clicked;
        while (true) {
            const std::uint64_t key = t | empty;
            auto itv = vac.find(key);
            if (itv == vac.end()) {
                itv = vac.emplace(key, kernels::vacuum_prob(q, m, key)).first;
            }
            p += (std::popcount(t) % 2 == 0 ? 1.0 : -1.0) * itv->second;
            if (t == 0) {
                break;
            }
            t = (t - 1) & clicked;
        }
        nll -= c * std::log(std::max(p, 1e-300));
    }
    return nll / static_cast<double>(data.size());
}

template <class CostOf>
KlResult kl_loop(const SymMatrix& a, const Vector& data_clicks, const WawParams& p0, double lr,
                 int iterations, const std::optional<Vector>& true_weights,
                 const IterationHook& hook, CostOf&& cost_of) {
    const int m = a.dim();
    if (p0.modes() != m || data_clicks.size() != m) {
        throw Error(ErrorKind::dimension_mismatch, "kl_train: weight or marginal count mismatch");
    }
    if (p0.mode() != WawParams::Mode::reparametrized) {
        throw Error(ErrorKind::invalid_argument, "kl_train: parameters must be reparametrized");
    }
    if (true_weights && true_weights->size() != m) {
        throw Error(ErrorKind::dimension_mismatch, "kl_train: true weight count mismatch");
    }
    if (!(lr > 0.0) || iterations < 0) {
        throw Error(ErrorKind::config, "kl_train: need lr > 0 and iterations >= 0");
    }
    KlResult res{TrainingTrace{true_weights ? "weight_distance" : "grad_norm", {}}, p0};
    OptimizerState opt = OptimizerState::sgd(lr, p0.dim());
    const auto t0 = Clock::now();
    for (int it = 0; it <= iterations; ++it) {
        const WawParams& p = res.params;
        const AMatrix state(apply_waw(a, p.weights()));
        const Vector xk = click_probs(state);
        // d C / d log w_k = <x_k> - <x_k>_data, then chain through theta.
        const Vector g = p.dlog_weights().transpose() * (xk - data_clicks);

        TraceRow row;
        row.iter = it;
        row.cost = cost_of(state, xk);
        row.grad_norm = g.norm();
        row.metric = true_weights ? (*true_weights - p.weights()).norm() : row.grad_norm;
        row.weights = p.weights();
        row.wall_ms = elapsed_ms(t0);
        res.trace.rows.push_back(row);
        if (hook) {
            hook(row);
        }
        if (it == iterations) {
            break;
        }
        OptimizerStep step = optimizer_step(opt, p.theta(), g);
        opt = std::move(step.state);
        Vector theta = std::move(step.theta);
        if (p.is_basis()) {
            theta = theta.cwiseMax(0.0);  // keeps every w_k <= 1
        }
        res.params = p.with_theta(std::move(theta));
    }
    return res;
}

}  // namespace

KlResult kl_train(const SymMatrix& a, const SampleBatch& data, const WawParams& p0, double lr,
                  int iterations, const std::optional<Vector>& true_weights,
                  const IterationHook& hook) {
    if (data.detector() != Detector::click) {
        throw Error(ErrorKind::invalid_argument, "kl_train: data must come from threshold detectors");
    }
    if (data.size() == 0) {
        throw Error(ErrorKind::invalid_argument, "kl_train: empty data");
    }
    return kl_loop(a, data.means(), p0, lr, iterations, true_weights, hook,
                   [&data](const AMatrix& s, const Vector&) { return click_nll(s, data.samples()); });
}

KlResult kl_train_marginals(const SymMatrix& a, const Vector& data_clicks, const WawParams& p0,
                            double lr, int iterations, const std::optional<Vector>& true_weights,
                            const IterationHook& hook) {
    return kl_loop(a, data_clicks, p0, lr, iterations, true_weights, hook,
                   [&data_clicks](const AMatrix&, const Vector& xk) {
                       double kl = 0.0;
                       for (Eigen::Index k = 0; k < xk.size(); ++k) {
                           kl += bernoulli_kl(data_clicks(k), xk(k));
                       }
                       return kl;
                   });
}

const char* to_string(WeightProfile w) noexcept {
    switch (w) {
        case WeightProfile::increasing: return "increasing";
        case WeightProfile::decreasing: return "decreasing";
        case WeightProfile::random: return "random";
    }
    return "unknown";
}

WeightProfile weight_profile_from_string(const std::string& s) {
    if (s == "increasing") {
        return WeightProfile::increasing;
    }
    if (s == "decreasing") {
        return WeightProfile::decreasing;
    }
    if (s == "random") {
        return WeightProfile::random;
    }
    throw Error(ErrorKind::config,
                "unknown weight profile '" + s + "' (expected increasing, decreasing or random)");
}

Vector make_weights(WeightProfile profile, int m, std::uint64_t seed) {
    Vector w(m);
    Rng rng(derive_seed(seed, Stream::data, 1));
    for (int k = 0; k < m; ++k) {
        switch (profile) {
            case WeightProfile::increasing: w(k) = static_cast<double>(k + 1) / m; break;
            case WeightProfile::decreasing: w(k) = static_cast<double>(m - k) / m; break;
            case WeightProfile::random: w(k) = uniform01(rng); break;
        }
    }
    return w;
}

void UnsupConfig::validate() const {
    if (m < 2 || m > kMaxClickModes) {
        throw Error(ErrorKind::config, "unsup: m must lie in [2, " + std::to_string(kMaxClickModes) + "]");
    }
    if (!(mean_photons > 0.0) || samples < 1 || iterations < 0 || !(lr > 0.0)) {
        throw Error(ErrorKind::config, "unsup: need mean photons > 0, samples >= 1, lr > 0");
    }
    if (!(theta0 >= 0.0)) {
        throw Error(ErrorKind::config, "unsup: theta0 must be >= 0");
    }
}

UnsupResult run_unsupervised(const UnsupConfig& cfg, const IterationHook& hook) {
    cfg.validate();
    UnsupResult res{gen_graph(cfg.kind, cfg.m, derive_seed(cfg.seed, Stream::graph)),
                    SymMatrix::zeros(cfg.m),
                    0.0,
                    make_weights(cfg.profile, cfg.m, cfg.seed),
                    SampleBatch(Detector::click, cfg.m, 0, {}),
                    KlResult{{}, WawParams::basis(Vector::Constant(cfg.m, cfg.theta0))},
                    {},
                    {}};
    const SymMatrix adj = res.graph.adjacency();
    // The photon number fixes the data state c W A W; the model keeps c A.
    const Rescaled data_state =
        rescale_to_target(apply_waw(adj, res.true_weights), cfg.mean_photons, Metric::mean_photons);
    res.scale = data_state.c;
    res.a = SymMatrix(data_state.c * adj.mat());

    SampleOptions so;
    so.detector = Detector::click;
    so.count = cfg.samples;
    so.seed = derive_seed(cfg.seed, Stream::data);
    res.data = sample(data_state.a, WawParams::identity(cfg.m), so);
    res.data_clicks = res.data.means();

    res.fit = kl_train(res.a, res.data, WawParams::basis(Vector::Constant(cfg.m, cfg.theta0)), cfg.lr,
                       cfg.iterations, res.true_weights, hook);
    res.model_clicks = click_probs(AMatrix(apply_waw(res.a, res.fit.params.weights())));
    return res;
}

}  // namespace gbs

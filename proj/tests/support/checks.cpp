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


#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gbs/distribution.hpp"
#include "gbs/error.hpp"
#include "gbs/gradients.hpp"
#include "gbs/rng.hpp"

namespace gbs::checks {

namespace {

int cutoff_for(int modes) {
    switch (modes) {
        case 1: return 40;
        case 2: return 24;
        default: return 14;
    }
}

void require_modes(int modes, const char* who) {
    if (modes < 1 || modes > 3) {
        throw Error(ErrorKind::invalid_argument, std::string(who) + ": modes must be 1, 2 or 3");
    }
}

Vector random_theta(int m, Rng& rng) {
    Vector t(m);
    for (int k = 0; k < m; ++k) {
        t(k) = uniform_range(rng, 0.1, 1.0);
    }
    return t;
}

// Smooth, pattern-dependent costs so every gradient component is exercised.
double photon_cost(std::span<const int> n) {
    double h = 1.0;
    for (std::size_t k = 0; k < n.size(); ++k) {
        h += (static_cast<double>(k) + 1.0) * n[k] + 0.25 * n[k] * n[k];
    }
    return h;
}

double click_cost(std::span<const int> x) {
    double h = 0.5;
    for (std::size_t k = 0; k < x.size(); ++k) {
        h += (static_cast<double>(k) + 1.5) * x[k];
    }
    if (x.size() >= 2) {
        h -= 2.0 * x[0] * x[1];
    }
    return h;
}

double enumerated_cost(const AMatrix& a, const WawParams& p, const CostFn& h, int cutoff) {
    const Enumeration e = enumerate_photon(a, p, cutoff);
    double s = 0.0;
    for (std::size_t i = 0; i < e.patterns.size(); ++i) {
        s += e.probs[i] * h.value(e.patterns[i]);
    }
    return s;
}

// Even-total photon patterns with at most `total` photons.
std::vector<Pattern> small_patterns(int m, int total) {
    std::vector<Pattern> out;
    Pattern n(static_cast<std::size_t>(m), 0);
    const auto rec = [&](auto&& self, int k, int left) -> void {
        if (k == m) {
            int s = 0;
            for (int v : n) {
                s += v;
            }
            if (s > 0 && s % 2 == 0) {
                out.push_back(n);
            }
            return;
        }
        for (int v = 0; v <= left; ++v) {
            n[static_cast<std::size_t>(k)] = v;
            self(self, k + 1, left - v);
        }
        n[static_cast<std::size_t>(k)] = 0;
    };
    rec(rec, 0, total);
    return out;
}

Check make_check(std::string name, double err, double tol) {
    return Check{std::move(name), err <= tol, err, tol};
}

}  // namespace

double rel_err(const Vector& got, const Vector& want) {
    if (got.size() != want.size()) {
        return INFINITY;
    }
    const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-300);
    return (got - want).cwiseAbs().maxCoeff() / scale;
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector xp = x;
        Vector xm = x;
        xp(i) += h;
        xm(i) -= h;
        g(i) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

SymMatrix random_symmetric(int n, Rng& rng) {
    Matrix r(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            r(i, j) = r(j, i) = uniform_range(rng, -1.0, 1.0);
        }
    }
    return SymMatrix(std::move(r));
}

Check hafnian_oracle_check(int count, int max_dim, std::uint64_t seed, double tol) {
    Rng rng(derive_seed(seed, Stream::check, 1));
    double worst = 0.0;
    const int dims = std::max(1, max_dim / 2);
    for (int i = 0; i < count; ++i) {
        const int n = 2 * (1 + i % dims);
        const SymMatrix a = random_symmetric(n, rng);
        worst = std::max(worst, std::abs(hafnian(a) - hafnian_oracle(a)));
    }
    return make_check("hafnian_vs_matching_enumeration", worst, tol);
}

std::vector<Check> gradient_checks(int modes, std::uint64_t seed, double tol) {
    require_modes(modes, "gradient_checks");
    Rng rng(derive_seed(seed, Stream::check, 2 + static_cast<std::uint64_t>(modes)));
    const int m = modes;
    const int cutoff = cutoff_for(m);
    const double h = 1e-5;
    const AMatrix a = random_a_matrix(m, 0.4, rng);
    const Vector theta = random_theta(m, rng);
    const WawParams p = WawParams::basis(theta);
    const CostFn hp = CostFn::of(photon_cost);
    const CostFn hc = CostFn::lifted(click_cost);
    std::vector<Check> out;

    {  // general gradient of P(n) along random symmetric directions
        std::vector<SymMatrix> dirs{random_symmetric(m, rng), random_symmetric(m, rng)};
        double worst = 0.0;
        for (const Pattern& n : small_patterns(m, 4)) {
            const Vector g = grad_prob_general(a, dirs, n);
            const Vector fd = fd_gradient(
                [&](const Vector& t) {
                    Matrix x = a.mat();
                    for (std::size_t j = 0; j < dirs.size(); ++j) {
                        x += t(static_cast<Eigen::Index>(j)) * dirs[j].mat();
                    }
                    return prob_photon(AMatrix(SymMatrix(x)), WawParams::identity(m), n);
                },
                Vector::Zero(static_cast<Eigen::Index>(dirs.size())), h);
            worst = std::max(worst, rel_err(g, fd));
        }
        out.push_back(make_check("general_prob_gradient", worst, tol));
    }

    {  // WAW: per-pattern theta gradient and the enumerated cost gradient
        double worst = 0.0;
        for (const Pattern& n : small_patterns(m, 4)) {
            const Vector g = grad_prob_theta(a, p, n);
            const Vector fd = fd_gradient(
                [&](const Vector& t) { return prob_photon(a, WawParams::basis(t), n); }, theta, h);
            worst = std::max(worst, rel_err(g, fd));
        }
        const Vector g = grad_cost_waw_exact(a, p, hp, cutoff).value;
        const Vector fd = fd_gradient(
            [&](const Vector& t) { return enumerated_cost(a, WawParams::basis(t), hp, cutoff); },
            theta, h);
        worst = std::max(worst, rel_err(g, fd));
        out.push_back(make_check("waw_cost_gradient", worst, tol));
    }

    {  // classical KL against its own enumeration over the data patterns
        SampleOptions so;
        so.detector = Detector::photon;
        so.count = 64;
        so.seed = derive_seed(seed, Stream::data, static_cast<std::uint64_t>(m));
        const SampleBatch data = sample(a, WawParams::basis(random_theta(m, rng)), so);
        const Vector g = grad_kl_classical(a, p, data);
        const Vector fd = fd_gradient(
            [&](const Vector& t) { return kl_photon(a, WawParams::basis(t), data); }, theta, h);
        out.push_back(make_check("kl_classical_gradient", rel_err(g, fd), tol));
    }

    {  // reparametrized estimator against the cost under P_{A,W}
        const Vector g = grad_cost_reparam_exact(a, p, hp, cutoff).value;
        const Vector fd = fd_gradient(
            [&](const Vector& t) { return enumerated_cost(a, WawParams::basis(t), hp, cutoff); },
            theta, h);
        out.push_back(make_check("reparam_cost_gradient", rel_err(g, fd), tol));
    }

    {  // NRD energy gradient per weight, click cost seen through the threshold map
        const Vector w = (-theta).array().exp().matrix();
        const Vector g = grad_energy_nrd_exact(a, WawParams::direct(w), hc, cutoff).value;
        const Vector fd = fd_gradient(
            [&](const Vector& v) { return enumerated_cost(a, WawParams::direct(v), hc, cutoff); }, w,
            h);
        out.push_back(make_check("nrd_energy_gradient", rel_err(g, fd), tol));
    }

    {  // hafnian derivative
        const int n = 2 * (m + 1);
        const SymMatrix x = random_symmetric(n, rng);
        const SymMatrix d = random_symmetric(n, rng);
        const Vector g = Vector::Constant(1, hafnian_gradient(x, d));
        const Vector fd = fd_gradient(
            [&](const Vector& t) { return hafnian(SymMatrix(x.mat() + t(0) * d.mat())); },
            Vector::Zero(1), 1e-6);
        out.push_back(make_check("hafnian_derivative", rel_err(g, fd), tol));
    }
    return out;
}

std::vector<Check> distribution_checks(int modes, std::uint64_t seed) {
    if (modes < 1 || modes > kClickEnumerationModes) {
        throw Error(ErrorKind::invalid_argument, "distribution_checks: modes must lie in [1, 12]");
    }
    Rng rng(derive_seed(seed, Stream::check, 10 + static_cast<std::uint64_t>(modes)));
    std::vector<Check> out;
    const AMatrix a = random_a_matrix(modes, 0.7, rng);
    const WawParams unit = WawParams::identity(modes);

    const Enumeration clicks = enumerate_click(a, unit);
    out.push_back(make_check("click_table_sums_to_one", std::abs(clicks.captured_mass - 1.0), 1e-10));

    Vector marg = Vector::Zero(modes);
    for (std::size_t i = 0; i < clicks.patterns.size(); ++i) {
        for (int k = 0; k < modes; ++k) {
            marg(k) += clicks.probs[i] * clicks.patterns[i][static_cast<std::size_t>(k)];
        }
    }
    out.push_back(make_check("click_marginals_vs_table",
                             (click_probs(a) - marg).cwiseAbs().maxCoeff(), 1e-10));

    // Photon sums are only affordable on a few modes.
    const int pm = std::min(modes, 3);
    const AMatrix b = random_a_matrix(pm, 0.4, rng);
    const WawParams pu = WawParams::identity(pm);
    const Enumeration photons = enumerate_photon(b, pu, pm == 1 ? 60 : 24);
    std::map<Pattern, double> summed;
    for (std::size_t i = 0; i < photons.patterns.size(); ++i) {
        summed[to_clicks(photons.patterns[i])] += photons.probs[i];
    }
    double worst = 0.0;
    for (const auto& [x, s] : summed) {
        worst = std::max(worst, std::abs(prob_click(b, pu, x) - s));
    }
    out.push_back(make_check("click_prob_vs_photon_sum", worst, 1e-4));
    return out;
}

Check change_of_measure_check(int modes, std::uint64_t seed, double tol) {
    require_modes(modes, "change_of_measure_check");
    Rng rng(derive_seed(seed, Stream::check, 20 + static_cast<std::uint64_t>(modes)));
    const AMatrix a = random_a_matrix(modes, 0.4, rng);
    const WawParams p = WawParams::basis(random_theta(modes, rng));
    const CostFn h = CostFn::of(photon_cost);
    const int cutoff = cutoff_for(modes);
    const Enumeration ref = enumerate_photon(a, WawParams::identity(modes), cutoff);
    double lhs = 0.0;
    for (std::size_t i = 0; i < ref.patterns.size(); ++i) {
        lhs += reparam_cost(a, p, h, ref.patterns[i]) * ref.probs[i];
    }
    const double rhs = enumerated_cost(a, p, h, cutoff);
    return make_check("change_of_measure", std::abs(lhs - rhs), tol);
}

AMatrix two_mode_squeezed(double mean_photons) {
    const double a = std::sqrt(mean_photons / (2.0 + mean_photons));
    Matrix m(2, 2);
    m << 0.0, a, a, 0.0;
    return AMatrix(SymMatrix(std::move(m)));
}

std::vector<double> threshold_limit_errors(const std::vector<double>& mean_photons) {
    std::vector<double> out;
    const auto h_click = [](std::span<const int> x) { return static_cast<double>(x[0]); };
    for (double n : mean_photons) {
        const AMatrix a = two_mode_squeezed(n);
        const WawParams unit = WawParams::identity(2);
        const Vector est =
            grad_cost_threshold_exact(a, unit, CostFn::of(h_click), ThresholdRegime::small_n).value;
        const Vector nrd = grad_energy_nrd_exact(a, unit, CostFn::lifted(h_click), 60).value;
        out.push_back((est - nrd).norm() / nrd.norm());
    }
    return out;
}

}  // namespace gbs::checks

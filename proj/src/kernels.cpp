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

#include "gbs/kernels.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gbs/error.hpp"

namespace gbs::kernels {

int max_threads() {
    int n = 1;
#ifdef _OPENMP
    n = omp_get_max_threads();
#endif
    if (const char* env = std::getenv("GBS_TRAIN_THREADS"); env != nullptr && *env != '\0') {
        const int cap = std::atoi(env);
        if (cap > 0) {
            n = std::min(n, cap);
        }
    }
    return std::max(n, 1);
}

int configure_threads_from_env() {
    const int n = max_threads();
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
    return n;
}

double vacuum_prob(const Matrix& q, int m, std::uint64_t mask) {
    const int k = std::popcount(mask);
    if (k == 0) {
        return 1.0;
    }
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(2 * k));
    for (std::uint64_t b = mask; b != 0; b &= b - 1) {
        idx.push_back(std::countr_zero(b));
    }
    for (int i = 0; i < k; ++i) {
        idx.push_back(idx[static_cast<std::size_t>(i)] + m);
    }
    const int n = 2 * k;
    Matrix sub(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            sub(i, j) = q(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
    }
    return 1.0 / std::sqrt(determinant(sub));
}

std::vector<double> vacuum_table_serial(const Matrix& q, int m) {
    const std::size_t size = std::size_t{1} << m;
    std::vector<double> table(size);
    for (std::size_t mask = 0; mask < size; ++mask) {
        table[mask] = vacuum_prob(q, m, mask);
    }
    return table;
}

std::vector<double> vacuum_table(const Matrix& q, int m) {
    const auto size = static_cast<std::int64_t>(std::int64_t{1} << m);
    std::vector<double> table(static_cast<std::size_t>(size));
#pragma omp parallel for schedule(dynamic, 64) num_threads(max_threads())
    for (std::int64_t mask = 0; mask < size; ++mask) {
        table[static_cast<std::size_t>(mask)] =
            vacuum_prob(q, m, static_cast<std::uint64_t>(mask));
    }
    return table;
}

std::vector<double> clicks_from_vacuum(std::vector<double> table, int m) {
    const std::size_t size = std::size_t{1} << m;
    if (table.size() != size) {
        throw Error(ErrorKind::dimension_mismatch, "clicks_from_vacuum: table size mismatch");
    }
    for (int b = 0; b < m; ++b) {
        const std::size_t bit = std::size_t{1} << b;
        for (std::size_t u = 0; u < size; ++u) {
            if ((u & bit) == 0) {
                table[u] -= table[u | bit];
            }
        }
    }
    std::vector<double> probs(size);
    const std::size_t full = size - 1;
    for (std::size_t s = 0; s < size; ++s) {
        probs[s] = table[full & ~s];
    }
    return probs;
}

double photon_prob_term(const SymMatrix& a, const Vector& weights, double norm_w,
                        const Counts& n) {
    long total = 0;
    double factor = norm_w;
    for (std::size_t k = 0; k < n.size(); ++k) {
        total += n[k];
        for (int j = 1; j <= n[k]; ++j) {
            factor *= weights(static_cast<Eigen::Index>(k)) / j;
        }
    }
    if (total % 2 != 0 || factor == 0.0) {
        return 0.0;
    }
    const double h = hafnian_reduced(a, n);
    return factor * h * h;
}

std::vector<double> photon_probs_serial(const AMatrix& a, const Vector& weights,
                                        const std::vector<Counts>& patterns) {
    const double norm_w = normalization(AMatrix(apply_waw(a.sym(), weights)));
    std::vector<double> out(patterns.size());
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        out[i] = photon_prob_term(a.sym(), weights, norm_w, patterns[i]);
    }
    return out;
}

std::vector<double> photon_probs(const AMatrix& a, const Vector& weights,
                                 const std::vector<Counts>& patterns) {
    const double norm_w = normalization(AMatrix(apply_waw(a.sym(), weights)));
    const auto count = static_cast<std::int64_t>(patterns.size());
    std::vector<double> out(patterns.size());
#pragma omp parallel for schedule(dynamic, 16) num_threads(max_threads())
    for (std::int64_t i = 0; i < count; ++i) {
        const auto u = static_cast<std::size_t>(i);
        out[u] = photon_prob_term(a.sym(), weights, norm_w, patterns[u]);
    }
    return out;
}

}  // namespace gbs::kernels

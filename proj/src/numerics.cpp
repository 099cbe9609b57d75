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

#include "gbs/numerics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>

#include "gbs/error.hpp"

namespace gbs {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr int kMaxSubsetDim = 40;
constexpr int kOracleMaxDim = 12;
constexpr std::size_t kMaxReducedStates = 50'000'000;

class SubsetHafnian {
public:
    explicit SubsetHafnian(const Matrix& a) : a_(a) {}

    double operator()(std::uint64_t set) {
        if (set == 0) {
            return 1.0;
        }
        const int first = std::countr_zero(set);
        const std::uint64_t rest = set & (set - 1);
        if ((rest & (rest - 1)) == 0) {
            // exactly two indices left
            return a_(first, std::countr_zero(rest));
        }
        if (auto it = memo_.find(set); it != memo_.end()) {
            return it->second;
        }
        double sum = 0.0;
        for (std::uint64_t bits = rest; bits != 0; bits &= bits - 1) {
            const int j = std::countr_zero(bits);
            const double aij = a_(first, j);
            if (aij != 0.0) {
                sum += aij * (*this)(rest & ~(std::uint64_t{1} << j));
            }
        }
        memo_.emplace(set, sum);
        return sum;
    }

private:
    const Matrix& a_;
    std::unordered_map<std::uint64_t, double> memo_;
};

std::uint64_t full_mask(int n) {
    return n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
}

void check_subset_dim(int n) {
    if (n > kMaxSubsetDim) {
        throw Error(ErrorKind::budget_exceeded,
                    "hafnian: dimension " + std::to_string(n) + " exceeds the supported " +
                        std::to_string(kMaxSubsetDim));
    }
}

// Multiplicity-keyed expansion for reduced matrices.
class ReducedHafnian {
public:
    ReducedHafnian(const Matrix& a, std::vector<int> modes, std::vector<int> counts)
        : a_(a), modes_(std::move(modes)), counts_(std::move(counts)) {
        stride_.resize(counts_.size());
        std::size_t size = 1;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            stride_[i] = size;
            size *= static_cast<std::size_t>(counts_[i] + 1);
            if (size > kMaxReducedStates) {
                throw Error(ErrorKind::budget_exceeded, "hafnian_reduced: memo table too large");
            }
        }
        memo_.assign(size, std::numeric_limits<double>::quiet_NaN());
    }

    double evaluate() {
        std::size_t key = 0;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            key += stride_[i] * static_cast<std::size_t>(counts_[i]);
        }
        return recurse(key);
    }

private:
    double recurse(std::size_t key) {
        if (key == 0) {
            return 1.0;
        }
        double& slot = memo_[key];
        if (!std::isnan(slot)) {
            return slot;
        }
        std::size_t first = 0;
        while (counts_[first] == 0) {
            ++first;
        }
        --counts_[first];
        key -= stride_[first];
        const int mi = modes_[first];
        double sum = 0.0;
        for (std::size_t j = first; j < counts_.size(); ++j) {
            const int c = counts_[j];
            if (c == 0) {
                continue;
            }
            const double aij = a_(mi, modes_[j]);
            if (aij == 0.0) {
                continue;
            }
            --counts_[j];
            sum += c * aij * recurse(key - stride_[j]);
            ++counts_[j];
        }
        ++counts_[first];
        slot = sum;
        return sum;
    }

    const Matrix& a_;
    std::vector<int> modes_;
    std::vector<int> counts_;
    std::vector<std::size_t> stride_;
    std::vector<double> memo_;
};

double oracle_recurse(const Matrix& a, std::vector<int>& free_idx) {
    if (free_idx.empty()) {
        return 1.0;
    }
    const int first = free_idx.back();
    free_idx.pop_back();
    double sum = 0.0;
    for (std::size_t k = 0; k < free_idx.size(); ++k) {
        const int j = free_idx[k];
        std::swap(free_idx[k], free_idx.back());
        free_idx.pop_back();
        sum += a(first, j) * oracle_recurse(a, free_idx);
        free_idx.push_back(j);
        std::swap(free_idx[k], free_idx.back());
    }
    free_idx.push_back(first);
    return sum;
}

}  // namespace

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
        throw Error(ErrorKind::dimension_mismatch, "SymMatrix: matrix is not square");
    }
    const Eigen::Index n = m_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double a = m_(i, j);
            const double b = m_(j, i);
            if (!std::isfinite(a) || !std::isfinite(b)) {
                throw Error(ErrorKind::invalid_argument, "SymMatrix: non-finite entry");
            }
            if (std::abs(a - b) > kSymmetryTol * std::max(1.0, std::abs(a))) {
                throw Error(ErrorKind::invalid_argument,
                            "SymMatrix: asymmetric at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
            }
        }
    }
}

SymMatrix SymMatrix::zeros(int n) { return SymMatrix(Matrix::Zero(n, n)); }

SymMatrix SymMatrix::identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::symmetrized(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorKind::dimension_mismatch, "SymMatrix: matrix is not square");
    }
    Matrix s = 0.5 * (m + m.transpose());
    return SymMatrix(std::move(s));
}

SymMatrix reduce_matrix(const SymMatrix& a, std::span<const int> counts) {
    if (static_cast<int>(counts.size()) != a.dim()) {
        throw Error(ErrorKind::dimension_mismatch,
                    "reduce_matrix: counts length " + std::to_string(counts.size()) +
                        " != matrix dimension " + std::to_string(a.dim()));
    }
    std::vector<int> rows;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] < 0) {
            throw Error(ErrorKind::invalid_argument, "reduce_matrix: negative count");
        }
        rows.insert(rows.end(), static_cast<std::size_t>(counts[i]), static_cast<int>(i));
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out(i, j) = a(rows[i], rows[j]);
        }
    }
    return SymMatrix(std::move(out));
}

double hafnian(const SymMatrix& a) {
    const int n = a.dim();
    if (n % 2 != 0) {
        return 0.0;
    }
    if (n == 0) {
        return 1.0;
    }
    check_subset_dim(n);
    SubsetHafnian haf(a.mat());
    return haf(full_mask(n));
}

double hafnian_reduced(const SymMatrix& a, std::span<const int> counts) {
    if (static_cast<int>(counts.size()) != a.dim()) {
        throw Error(ErrorKind::dimension_mismatch, "hafnian_reduced: counts length mismatch");
    }
    std::vector<int> modes;
    std::vector<int> mult;
    long total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] < 0) {
            throw Error(ErrorKind::invalid_argument, "hafnian_reduced: negative count");
        }
        if (counts[i] > 0) {
            modes.push_back(static_cast<int>(i));
            mult.push_back(counts[i]);
            total += counts[i];
        }
    }
    if (total % 2 != 0) {
        return 0.0;
    }
    if (total == 0) {
        return 1.0;
    }
    ReducedHafnian haf(a.mat(), std::move(modes), std::move(mult));
    return haf.evaluate();
}

double hafnian_oracle(const SymMatrix& a) {
    const int n = a.dim();
    if (n > kOracleMaxDim) {
        throw Error(ErrorKind::budget_exceeded,
                    "hafnian_oracle: dimension " + std::to_string(n) + " exceeds " +
                        std::to_string(kOracleMaxDim));
    }
    if (n % 2 != 0) {
        return 0.0;
    }
    std::vector<int> free_idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        free_idx[static_cast<std::size_t>(i)] = n - 1 - i;
    }
    return oracle_recurse(a.mat(), free_idx);
}

double hafnian_gradient(const SymMatrix& a, const SymMatrix& da) {
    const int n = a.dim();
    if (da.dim() != n) {
        throw Error(ErrorKind::dimension_mismatch, "hafnian_gradient: direction dimension mismatch");
    }
    if (n % 2 != 0 || n == 0) {
        return 0.0;
    }
    check_subset_dim(n);
    SubsetHafnian haf(a.mat());
    const std::uint64_t all = full_mask(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = da(i, j);
            if (d == 0.0) {
                continue;
            }
            const std::uint64_t rest = all & ~(std::uint64_t{1} << i) & ~(std::uint64_t{1} << j);
            sum += d * haf(rest);
        }
    }
    return sum;
}

EigenDecomposition sym_eigendecomposition(const SymMatrix& a) {
    if (a.dim() == 0) {
        return {Vector(0), Matrix(0, 0)};
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a.mat());
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::numerical, "sym_eigendecomposition: solver did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

double determinant(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorKind::dimension_mismatch, "determinant: matrix is not square");
    }
    if (m.rows() == 0) {
        return 1.0;
    }
    return m.partialPivLu().determinant();
}

Matrix inverse(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorKind::dimension_mismatch, "inverse: matrix is not square");
    }
    Eigen::FullPivLU<Matrix> lu(m);
    if (!lu.isInvertible()) {
        throw Error(ErrorKind::numerical, "inverse: matrix is singular");
    }
    return lu.inverse();
}

}  // namespace gbs

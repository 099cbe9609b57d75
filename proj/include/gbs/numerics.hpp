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

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gbs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense real symmetric matrix. Construction rejects non-square,
/// non-finite or asymmetric input (tolerance 1e-12, relative for large entries).
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(Matrix m);

    static SymMatrix zeros(int n);
    static SymMatrix identity(int n);
    /// Symmetrizes (m + m^T)/2 before validation.
    static SymMatrix symmetrized(const Matrix& m);

    int dim() const noexcept { return static_cast<int>(m_.rows()); }
    const Matrix& mat() const noexcept { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

private:
    Matrix m_;
};

/// Photon counts used to build a reduced matrix A_n.
using Counts = std::vector<int>;

/// Deletes rows/columns with count 0 and repeats row/column i counts[i] times.
SymMatrix reduce_matrix(const SymMatrix& a, std::span<const int> counts);

/// Hafnian by Laplace expansion along the first remaining row, memoized on
/// the subset of remaining indices. Odd dimension gives 0, empty gives 1.
double hafnian(const SymMatrix& a);

/// Hafnian of reduce_matrix(a, counts) without materializing the reduced
/// matrix: the same expansion, with identical rows grouped so that the memo
/// is keyed by the remaining multiplicity vector instead of a subset.
double hafnian_reduced(const SymMatrix& a, std::span<const int> counts);

/// Direct sum over all perfect matchings. Reference only; dim <= 12.
double hafnian_oracle(const SymMatrix& a);

/// Directional derivative d/dt Haf(a + t da) at t = 0, i.e. the sum over
/// unordered pairs {i, j} of da(i, j) * Haf(a without rows/cols i, j).
double hafnian_gradient(const SymMatrix& a, const SymMatrix& da);

struct EigenDecomposition {
    Vector values;   // ascending
    Matrix vectors;  // columns are eigenvectors
};

EigenDecomposition sym_eigendecomposition(const SymMatrix& a);

double determinant(const Matrix& m);
Matrix inverse(const Matrix& m);

}  // namespace gbs

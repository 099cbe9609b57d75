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

// Data-parallel kernels. Each parallel kernel has a serial reference with the
// same contract; results agree bit for bit because every output element is
// computed independently and no parallel reductions are performed.

#include <cstdint>
#include <vector>

#include "gbs/gbs_state.hpp"
#include "gbs/numerics.hpp"

namespace gbs::kernels {

/// Upper bound on OpenMP threads: GBS_TRAIN_THREADS if set, else the runtime default.
int max_threads();
/// Applies GBS_TRAIN_THREADS to the OpenMP runtime. Returns the thread count.
int configure_threads_from_env();

/// Vacuum probability of the modes in `mask` (bit k = mode k), marginalizing
/// all other modes: det(Q_M)^{-1/2} with Q_M the rows/columns {k, k+m}.
double vacuum_prob(const Matrix& q, int m, std::uint64_t mask);

/// vacuum_prob for all 2^m masks.
std::vector<double> vacuum_table_serial(const Matrix& q, int m);
std::vector<double> vacuum_table(const Matrix& q, int m);

/// Turns a vacuum table into click-pattern probabilities indexed by the mask
/// of clicked modes, via the superset Moebius transform:
/// P(S) = sum_{T subset S} (-1)^|T| P_vac(T u complement(S)).
std::vector<double> clicks_from_vacuum(std::vector<double> table, int m);

/// Photon-pattern probabilities of the state W A W for a list of patterns.
std::vector<double> photon_probs_serial(const AMatrix& a, const Vector& weights,
                                        const std::vector<Counts>& patterns);
std::vector<double> photon_probs(const AMatrix& a, const Vector& weights,
                                 const std::vector<Counts>& patterns);

/// sqrt(det(1 - A_W^2)) * Haf(A_n)^2 * prod_k w_k^n_k / n_k! for one pattern,
/// given the precomputed normalization of A_W.
double photon_prob_term(const SymMatrix& a, const Vector& weights, double norm_w,
                        const Counts& n);

}  // namespace gbs::kernels

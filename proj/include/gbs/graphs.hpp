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
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gbs/numerics.hpp"

namespace gbs {

/// Simple undirected graph on vertices 0..m-1. Edges are stored as sorted
/// (u < v) pairs in ascending order.
class Graph {
public:
    using Edge = std::pair<int, int>;

    explicit Graph(int m, std::vector<Edge> edges = {});

    int vertices() const noexcept { return m_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    bool has_edge(int u, int v) const;
    int degree(int v) const;
    SymMatrix adjacency() const;

private:
    int m_;
    std::vector<Edge> edges_;
    std::vector<std::uint64_t> rows_;  // adjacency bitsets
};

struct Circulant {
    std::vector<int> offsets;
};
struct ErdosRenyi {
    double prob = 0.5;
};
struct BarabasiAlbertFromClique {
    int clique = 5;
    int attach = 3;
};
using GraphKind = std::variant<Circulant, ErdosRenyi, BarabasiAlbertFromClique>;

/// Deterministic given (kind, m, seed).
Graph gen_graph(const GraphKind& kind, int m, std::uint64_t seed);

struct CliqueSearch {
    int size = 0;
    std::vector<std::vector<int>> cliques;  // each sorted, list sorted
};

/// Exact maximum cliques by Bron-Kerbosch with pivoting; m <= 20.
CliqueSearch max_clique_oracle(const Graph& g);

/// H(x) = offset - sum_i h_i x_i - sum_{i,j} J_ij x_i x_j over x in {0,1}^m,
/// with J symmetric and zero on the diagonal (the double sum runs over
/// ordered pairs).
struct IsingModel {
    Vector h;
    Matrix j;
    double offset = 0.0;

    double energy(const std::vector<int>& x) const;
};

struct MaxCliqueIsing {
    IsingModel model;
    int k = 0;
    double c_v = 0.0;
    double c_e = 0.0;

    double energy(const std::vector<int>& x) const { return model.energy(x); }
};

/// Ising form of c_V (K - sum x)^2 + c_E (K(K-1)/2 - sum_{(u,v) in E} x_u x_v).
MaxCliqueIsing ising_maxclique(const Graph& g, int k, double c_v, double c_e);

/// Edge list: first non-comment line "m", then "u v" lines; '#' starts a comment.
Graph read_edge_list(std::istream& is);
void write_edge_list(std::ostream& os, const Graph& g);
Graph load_edge_list(const std::string& path);
/// JSON object with m, edges and adjacency.
std::string graph_to_json(const Graph& g);

}  // namespace gbs

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

#include "gbs/graphs.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "gbs/error.hpp"
#include "gbs/rng.hpp"

namespace gbs {

namespace {

constexpr int kMaxVertices = 64;
constexpr int kCliqueOracleBudget = 20;

}  // namespace

Graph::Graph(int m, std::vector<Edge> edges) : m_(m), rows_(static_cast<std::size_t>(std::max(m, 0)), 0) {
    if (m < 1 || m > kMaxVertices) {
        throw Error(ErrorKind::invalid_argument,
                    "Graph: vertex count must be in [1, " + std::to_string(kMaxVertices) + "]");
    }
    std::set<Edge> unique;
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || u >= m || v >= m) {
            throw Error(ErrorKind::invalid_argument,
                        "Graph: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") out of range");
        }
        if (u == v) {
            throw Error(ErrorKind::invalid_argument, "Graph: self-loops are not allowed");
        }
        unique.insert({std::min(u, v), std::max(u, v)});
    }
    edges_.assign(unique.begin(), unique.end());
    for (auto [u, v] : edges_) {
        rows_[static_cast<std::size_t>(u)] |= std::uint64_t{1} << v;
        rows_[static_cast<std::size_t>(v)] |= std::uint64_t{1} << u;
    }
}

bool Graph::has_edge(int u, int v) const {
    return (rows_.at(static_cast<std::size_t>(u)) >> v) & 1U;
}

int Graph::degree(int v) const { return std::popcount(rows_.at(static_cast<std::size_t>(v))); }

SymMatrix Graph::adjacency() const {
    Matrix a = Matrix::Zero(m_, m_);
    for (auto [u, v] : edges_) {
        a(u, v) = a(v, u) = 1.0;
    }
    return SymMatrix(std::move(a));
}

Graph gen_graph(const GraphKind& kind, int m, std::uint64_t seed) {
    if (m < 1) {
        throw Error(ErrorKind::invalid_argument, "gen_graph: m must be >= 1");
    }
    Rng rng(seed);
    std::vector<Graph::Edge> edges;
    if (const auto* c = std::get_if<Circulant>(&kind)) {
        for (int o : c->offsets) {
            if (o <= 0 || o > m / 2) {
                throw Error(ErrorKind::invalid_argument,
                            "gen_graph: circulant offset " + std::to_string(o) +
                                " must lie in [1, m/2]");
            }
            for (int i = 0; i < m; ++i) {
                edges.emplace_back(i, (i + o) % m);
            }
        }
    } else if (const auto* er = std::get_if<ErdosRenyi>(&kind)) {
        if (!(er->prob >= 0.0 && er->prob <= 1.0)) {
            throw Error(ErrorKind::invalid_argument, "gen_graph: probability must lie in [0, 1]");
        }
        for (int u = 0; u < m; ++u) {
            for (int v = u + 1; v < m; ++v) {
                if (uniform01(rng) < er->prob) {
                    edges.emplace_back(u, v);
                }
            }
        }
    } else {
        const auto& ba = std::get<BarabasiAlbertFromClique>(kind);
        if (ba.clique < 1 || ba.clique > m) {
            throw Error(ErrorKind::invalid_argument, "gen_graph: clique size must lie in [1, m]");
        }
        if (ba.attach < 0 || ba.attach > ba.clique) {
            throw Error(ErrorKind::invalid_argument,
                        "gen_graph: attach exceeds the current vertex count");
        }
        for (int u = 0; u < ba.clique; ++u) {
            for (int v = u + 1; v < ba.clique; ++v) {
                edges.emplace_back(u, v);
            }
        }
        for (int v = ba.clique; v < m; ++v) {
            // partial Fisher-Yates: `attach` distinct targets among 0..v-1
            std::vector<int> pool(static_cast<std::size_t>(v));
            for (int i = 0; i < v; ++i) {
                pool[static_cast<std::size_t>(i)] = i;
            }
            for (int i = 0; i < ba.attach; ++i) {
                const auto r = static_cast<std::size_t>(i) +
                               uniform_index(rng, static_cast<std::uint64_t>(v - i));
                std::swap(pool[static_cast<std::size_t>(i)], pool[r]);
                edges.emplace_back(pool[static_cast<std::size_t>(i)], v);
            }
        }
    }
    return Graph(m, std::move(edges));
}

namespace {

struct BronKerbosch {
    const std::vector<std::uint64_t>& adj;
    CliqueSearch result;

    void run(std::uint64_t r, std::uint64_t p, std::uint64_t x) {
        if (p == 0 && x == 0) {
            const int size = std::popcount(r);
            if (size > result.size) {
                result.size = size;
                result.cliques.clear();
            }
            if (size == result.size) {
                std::vector<int> c;
                for (std::uint64_t b = r; b != 0; b &= b - 1) {
                    c.push_back(std::countr_zero(b));
                }
                result.cliques.push_back(std::move(c));
            }
            return;
        }
        if (std::popcount(r) + std::popcount(p) < result.size) {
            return;
        }
        // pivot with the most neighbours in p
        const std::uint64_t px = p | x;
        int pivot = std::countr_zero(px);
        int best = -1;
        for (std::uint64_t b = px; b != 0; b &= b - 1) {
            const int u = std::countr_zero(b);
            const int c = std::popcount(p & adj[static_cast<std::size_t>(u)]);
            if (c > best) {
                best = c;
                pivot = u;
            }
        }
        for (std::uint64_t b = p & ~adj[static_cast<std::size_t>(pivot)]; b != 0; b &= b - 1) {
            const int v = std::countr_zero(b);
            const std::uint64_t bit = std::uint64_t{1} << v;
            const std::uint64_t nv = adj[static_cast<std::size_t>(v)];
            run(r | bit, p & nv, x & nv);
            p &= ~bit;
            x |= bit;
        }
    }
};

}  // namespace

CliqueSearch max_clique_oracle(const Graph& g) {
    const int m = g.vertices();
    if (m > kCliqueOracleBudget) {
        throw Error(ErrorKind::budget_exceeded,
                    "max_clique_oracle: " + std::to_string(m) + " vertices exceed the budget of " +
                        std::to_string(kCliqueOracleBudget));
    }
    std::vector<std::uint64_t> adj(static_cast<std::size_t>(m), 0);
    for (auto [u, v] : g.edges()) {
        adj[static_cast<std::size_t>(u)] |= std::uint64_t{1} << v;
        adj[static_cast<std::size_t>(v)] |= std::uint64_t{1} << u;
    }
    BronKerbosch bk{adj, {}};
    bk.run(0, (std::uint64_t{1} << m) - 1, 0);
    std::sort(bk.result.cliques.begin(), bk.result.cliques.end());
    return bk.result;
}

double IsingModel::energy(const std::vector<int>& x) const {
    const auto m = h.size();
    if (static_cast<Eigen::Index>(x.size()) != m) {
        throw Error(ErrorKind::dimension_mismatch, "IsingModel: pattern length mismatch");
    }
    double e = offset;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (x[static_cast<std::size_t>(i)] == 0) {
            continue;
        }
        e -= h(i);
        for (Eigen::Index k = 0; k < m; ++k) {
            if (x[static_cast<std::size_t>(k)] != 0) {
                e -= j(i, k);
            }
        }
    }
    return e;
}

MaxCliqueIsing ising_maxclique(const Graph& g, int k, double c_v, double c_e) {
    if (k < 2) {
        throw Error(ErrorKind::invalid_argument, "ising_maxclique: K must be >= 2");
    }
    if (!(c_v > 0.0) || !(c_e > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "ising_maxclique: c_V and c_E must be positive");
    }
    const int m = g.vertices();
    // Expand with x^2 = x:
    //   c_V (K - s)^2 = c_V K^2 - c_V (2K - 1) s + 2 c_V sum_{u<v} x_u x_v
    //   c_E (K(K-1)/2 - sum_E x_u x_v)
    IsingModel model;
    model.h = Vector::Constant(m, c_v * (2.0 * k - 1.0));
    model.j = Matrix::Zero(m, m);
    for (int u = 0; u < m; ++u) {
        for (int v = 0; v < m; ++v) {
            if (u != v) {
                model.j(u, v) = 0.5 * ((g.has_edge(u, v) ? c_e : 0.0) - 2.0 * c_v);
            }
        }
    }
    model.offset = c_v * k * k + c_e * k * (k - 1) / 2.0;
    return {std::move(model), k, c_v, c_e};
}

Graph read_edge_list(std::istream& is) {
    std::string line;
    int m = -1;
    std::vector<Graph::Edge> edges;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto pos = line.find('#'); pos != std::string::npos) {
            line.erase(pos);
        }
        std::istringstream row(line);
        std::string probe;
        if (!(row >> probe)) {
            continue;
        }
        row.clear();
        row.str(line);
        if (m < 0) {
            if (!(row >> m) || m < 1) {
                throw Error(ErrorKind::io, "edge list line " + std::to_string(lineno) +
                                               ": expected vertex count");
            }
            continue;
        }
        int u = 0;
        int v = 0;
        if (!(row >> u >> v)) {
            throw Error(ErrorKind::io,
                        "edge list line " + std::to_string(lineno) + ": expected 'u v'");
        }
        edges.emplace_back(u, v);
    }
    if (m < 0) {
        throw Error(ErrorKind::io, "edge list: missing vertex count");
    }
    return Graph(m, std::move(edges));
}

void write_edge_list(std::ostream& os, const Graph& g) {
    os << g.vertices() << '\n';
    for (auto [u, v] : g.edges()) {
        os << u << ' ' << v << '\n';
    }
}

Graph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open edge list '" + path + "'");
    }
    return read_edge_list(in);
}

std::string graph_to_json(const Graph& g) {
    nlohmann::json j;
    j["m"] = g.vertices();
    j["edges"] = nlohmann::json::array();
    for (auto [u, v] : g.edges()) {
        j["edges"].push_back({u, v});
    }
    const Matrix a = g.adjacency().mat();
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < g.vertices(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < g.vertices(); ++k) {
            row.push_back(static_cast<int>(a(i, k)));
        }
        rows.push_back(row);
    }
    j["adjacency"] = rows;
    return j.dump(2);
}

}  // namespace gbs

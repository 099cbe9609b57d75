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


// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// GBS_CLI is the path of the gbstrain binary, injected by the build.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "checks.hpp"
#include "gbs/graphs.hpp"
#include "gbs/training.hpp"

namespace {

namespace fs = std::filesystem;
using namespace gbs;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome hafnian_oracle() {
    const auto t0 = Clock::now();
    const checks::Check c = checks::hafnian_oracle_check(200, 10, 20260101);
    const double s = seconds_since(t0);
    return {c.pass && s < 60.0, fmt("max abs err %.2e (tol 1e-9), %.2fs", c.error, s)};
}

Outcome gradients() {
    const auto t0 = Clock::now();
    bool pass = true;
    double worst = 0.0;
    std::string worst_name;
    for (int modes = 1; modes <= 3; ++modes) {
        for (const auto& c : checks::gradient_checks(modes, 7 + modes)) {
            pass = pass && c.pass;
            if (c.error >= worst) {
                worst = c.error;
                worst_name = c.name + "/m" + std::to_string(modes);
            }
        }
    }
    const double s = seconds_since(t0);
    return {pass && s < 120.0,
            fmt("worst rel err %.2e at %s (tol 1e-4), %.2fs", worst, worst_name.c_str(), s)};
}

Outcome distribution() {
    bool pass = true;
    double sum_err = 0.0, marg_err = 0.0, photon_err = 0.0;
    for (int modes = 1; modes <= 12; ++modes) {
        for (const auto& c : checks::distribution_checks(modes, 100 + modes)) {
            pass = pass && c.pass;
            if (c.name == "click_table_sums_to_one") {
                sum_err = std::max(sum_err, c.error);
            } else if (c.name == "click_marginals_vs_table") {
                marg_err = std::max(marg_err, c.error);
            } else {
                photon_err = std::max(photon_err, c.error);
            }
        }
    }
    return {pass, fmt("sum err %.1e, marginal err %.1e, click-vs-photon err %.1e", sum_err,
                      marg_err, photon_err)};
}

Outcome change_of_measure() {
    double worst = 0.0;
    bool pass = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const checks::Check c = checks::change_of_measure_check(2, seed);
        pass = pass && c.pass;
        worst = std::max(worst, c.error);
    }
    return {pass, fmt("20 random 2-mode states, max err %.2e (tol 1e-6)", worst)};
}

Outcome threshold_limit() {
    const std::vector<double> e = checks::threshold_limit_errors({0.4, 0.2, 0.1, 0.05});
    bool monotone = true;
    for (std::size_t i = 1; i < e.size(); ++i) {
        monotone = monotone && e[i] < e[i - 1];
    }
    return {monotone && e.back() <= 0.10,
            fmt("rel err %.3f %.3f %.3f %.3f", e[0], e[1], e[2], e[3])};
}

Outcome vis_fixture() {
    const Graph g = load_edge_list(GBS_DATA_DIR "/clique5_n8.edges");
    const CliqueSearch cs = max_clique_oracle(g);
    if (cs.size != 5 || cs.cliques.size() != 1) {
        return {false, "fixture does not have a unique 5-clique"};
    }
    int good = 0;
    std::string runs;
    const auto t0 = Clock::now();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        VisConfig cfg = VisConfig::for_graph(g, 5);
        cfg.seed = seed;
        const VisResult r = vis_train(cfg);
        const double init = r.trace.rows.front().metric;
        double best = 0.0;
        for (const auto& row : r.trace.rows) {
            best = std::max(best, row.metric);
        }
        const double fin = r.trace.rows.back().metric;
        if (init <= 0.10 && fin >= 0.80) {
            ++good;
        }
        runs += fmt(" [%.3f->%.3f, unconditioned %.3f->%.3f]", init, fin,
                    r.trace.rows.front().unconditioned, r.trace.rows.back().unconditioned);
    }
    return {good >= 3, fmt("%d/5 seeds with initial <= 0.10 and final >= 0.80 (%.1fs):", good,
                           seconds_since(t0)) +
                           runs};
}

Outcome vis_random() {
    int good = 0, used = 0;
    std::string runs;
    for (std::uint64_t seed = 0; used < 5 && seed < 1000; ++seed) {
        const Graph g = gen_graph(ErdosRenyi{0.5}, 10, seed);
        const int k = max_clique_oracle(g).size;
        if (k != 4 && k != 5) {
            continue;
        }
        ++used;
        VisConfig cfg = VisConfig::for_graph(g, k);
        cfg.seed = seed;
        const VisResult r = vis_train(cfg);
        const double fin = r.trace.rows.back().metric;
        good += fin >= 0.50 ? 1 : 0;
        runs += fmt(" [seed %llu K=%d %.3f]", static_cast<unsigned long long>(seed), k, fin);
    }
    return {used == 5 && good >= 3, fmt("%d/%d instances with final >= 0.50:", good, used) + runs};
}

Outcome unsupervised() {
    const auto t0 = Clock::now();
    UnsupConfig cfg;  // circulant {1,2}, m 16, <n> 3, increasing weights, T 1000, lr 0.1, theta0 5
    cfg.seed = 0;
    const UnsupResult r = run_unsupervised(cfg);
    const double s = seconds_since(t0);
    const auto& rows = r.fit.trace.rows;
    const double ratio = rows.back().metric / rows.front().metric;
    const double gap = (r.model_clicks - r.data_clicks).cwiseAbs().maxCoeff();
    return {ratio <= 0.25 && gap <= 0.03 && s < 120.0,
            fmt("||w - w_model|| %.3f -> %.3f (ratio %.3f, need <= 0.25), max marginal gap "
                "%.3f (need <= 0.03), %.1fs",
                rows.front().metric, rows.back().metric, ratio, gap, s)};
}

bool sym_valid(const AMatrix& a) { return validate(a.sym()).valid; }

Outcome projection() {
    Rng rng(derive_seed(42, Stream::check));
    const int trials = 1000;
    int idem_fail = 0, valid_fail = 0, expand_fail = 0;
    double worst_excess = -1e300;
    for (int t = 0; t < trials; ++t) {
        const int n = 1 + static_cast<int>(uniform_index(rng, 6));
        // infeasible-ish input: general (asymmetric) matrix, spectrum up to ~3
        Matrix x(n, n);
        const double scale = uniform_range(rng, 0.1, 3.0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                x(i, j) = scale * uniform_range(rng, -1.0, 1.0);
            }
        }
        const AMatrix p = project(x);
        valid_fail += sym_valid(p) ? 0 : 1;
        const AMatrix pp = project(p.sym());
        idem_fail += (pp.mat() - p.mat()).norm() <= 1e-12 ? 0 : 1;
        const AMatrix y = random_a_matrix(n, uniform_range(rng, 0.0, 0.999), rng);
        // nearest feasible point, and no farther from Y than X was
        const double nearest = (p.mat() - x).norm() - (y.mat() - x).norm();
        const double excess = (p.mat() - y.mat()).norm() - (x - y.mat()).norm();
        worst_excess = std::max({worst_excess, nearest, excess});
        expand_fail += (nearest <= 1e-12 && excess <= 1e-12) ? 0 : 1;
    }
    return {idem_fail == 0 && valid_fail == 0 && expand_fail == 0,
            fmt("%d trials: %d not idempotent, %d invalid, %d expansive (max excess %.2e)", trials,
                idem_fail, valid_fail, expand_fail, worst_excess)};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Drops the last CSV column (wall time).
std::string strip_wall(const std::string& csv) {
    std::istringstream is(csv);
    std::string line, out;
    while (std::getline(is, line)) {
        out += line.substr(0, line.rfind(',')) + '\n';
    }
    return out;
}

bool same_outputs(const fs::path& a, const fs::path& b, std::string& why) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a)) {
        files.push_back(e.path().filename());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        why = "no outputs";
        return false;
    }
    for (const auto& f : files) {
        if (!fs::exists(b / f)) {
            why = f.string() + " missing in second run";
            return false;
        }
        std::string x = slurp(a / f), y = slurp(b / f);
        if (f == "trace.csv") {
            x = strip_wall(x);
            y = strip_wall(y);
        }
        if (x != y) {
            why = f.string() + " differs";
            return false;
        }
    }
    return true;
}

Outcome reproducibility() {
    const fs::path root = fs::temp_directory_path() / ("gbs_repro_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::vector<std::pair<std::string, std::string>> cmds = {
        {"vis", "vis --graph " GBS_DATA_DIR "/clique5_n8.edges --iters 40 --seed 3"},
        {"vis_er", "vis --kind er --m 10 --iters 30 --seed 5"},
        {"unsup", "unsup --iters 20 --seed 11"},
        {"sample", "sample --kind ba --m 10 --count 500 --mean-photons 2 --seed 4"},
        {"graph", "graph --kind er --m 12 --seed 9"},
        {"gradcheck", "gradcheck --modes 2 --seed 1"},
    };
    int ok = 0;
    std::string detail;
    for (const auto& [name, args] : cmds) {
        const fs::path d1 = root / (name + "_1"), d2 = root / (name + "_2");
        const std::string base = std::string(GBS_CLI) + " " + args + " > /dev/null --out ";
        const int r1 = std::system((base + d1.string()).c_str());
        const int r2 = std::system((base + d2.string()).c_str());
        std::string why;
        if (r1 != 0 || r2 != 0) {
            why = "exit status " + std::to_string(r1) + "/" + std::to_string(r2);
        } else if (same_outputs(d1, d2, why) && same_outputs(d2, d1, why)) {
            ++ok;
            continue;
        }
        detail += " " + name + ": " + why + ";";
    }
    fs::remove_all(root);
    return {ok == static_cast<int>(cmds.size()),
            fmt("%d/%zu commands reproduced byte-for-byte (trace wall time excluded)", ok,
                cmds.size()) +
                detail};
}

}  // namespace

int main() {
    struct Item {
        const char* name;
        Outcome (*run)();
    };
    const Item items[] = {
        {"hafnian_oracle_equivalence", hafnian_oracle},
        {"gradient_correctness", gradients},
        {"distribution_consistency", distribution},
        {"change_of_measure_identity", change_of_measure},
        {"threshold_gradient_limit", threshold_limit},
        {"vis_unique_5_clique_8_vertices", vis_fixture},
        {"vis_erdos_renyi_10_vertices", vis_random},
        {"unsupervised_weight_recovery", unsupervised},
        {"projection_properties", projection},
        {"cli_reproducibility", reproducibility},
    };
    int failed = 0;
    for (const Item& it : items) {
        Outcome o;
        try {
            o = it.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", it.name, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(items)) - failed,
                std::size(items));
    return failed == 0 ? 0 : 1;
}

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


// gbstrain: train and sample GBS distributions from the command line.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "checks.hpp"
#include "gbs/distribution.hpp"
#include "gbs/error.hpp"
#include "gbs/gbs_state.hpp"
#include "gbs/graphs.hpp"
#include "gbs/kernels.hpp"
#include "gbs/training.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace gbs;

constexpr const char* kVersion = "0.1.0";

struct GraphSource {
    std::string file;
    std::string kind = "circulant";
    int m = 8;
    std::string offsets = "1,2";
    double prob = 0.5;
    int clique = 5;
    int attach = 3;
};

void add_graph_options(CLI::App* app, GraphSource& g, bool with_file) {
    if (with_file) {
        app->add_option("--graph", g.file, "Edge-list file; overrides the generator")
            ->check(CLI::ExistingFile);
    }
    app->add_option("--kind", g.kind, "Generator: circulant, er or ba")
        ->check(CLI::IsMember({"circulant", "er", "ba"}))
        ->capture_default_str();
    app->add_option("--m", g.m, "Vertex count")->check(CLI::Range(1, 64))->capture_default_str();
    app->add_option("--offsets", g.offsets, "Circulant offsets, comma separated")->capture_default_str();
    app->add_option("--prob", g.prob, "Erdos-Renyi edge probability")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--clique", g.clique, "Barabasi-Albert seed clique size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--attach", g.attach, "Barabasi-Albert edges per new vertex")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

std::vector<int> parse_offsets(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, "--offsets: '" + item + "' is not an integer");
        }
    }
    if (out.empty()) {
        throw Error(ErrorKind::config, "--offsets: empty list");
    }
    return out;
}

GraphKind graph_kind(const GraphSource& g) {
    if (g.kind == "circulant") {
        return Circulant{parse_offsets(g.offsets)};
    }
    if (g.kind == "er") {
        return ErdosRenyi{g.prob};
    }
    return BarabasiAlbertFromClique{g.clique, g.attach};
}

Graph make_graph(const GraphSource& g, std::uint64_t seed) {
    if (!g.file.empty()) {
        return load_edge_list(g.file);
    }
    return gen_graph(graph_kind(g), g.m, derive_seed(seed, Stream::graph));
}

json graph_json(const GraphSource& g) {
    if (!g.file.empty()) {
        return json{{"file", g.file}};
    }
    json j{{"kind", g.kind}, {"m", g.m}};
    if (g.kind == "circulant") {
        j["offsets"] = parse_offsets(g.offsets);
    } else if (g.kind == "er") {
        j["prob"] = g.prob;
    } else {
        j["clique"] = g.clique;
        j["attach"] = g.attach;
    }
    return j;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error(ErrorKind::io, "cannot create output directory '" + dir.string() + "'");
    }
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) {
        throw Error(ErrorKind::io, "cannot write '" + p.string() + "'");
    }
    return os;
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream os = open_out(p);
    os << j.dump(2) << '\n';
}

json run_header(const std::string& command, std::uint64_t seed) {
    return json{{"tool", "gbstrain"},
                {"version", kVersion},
                {"command", command},
                {"seed", seed},
                {"rng", kRngName},
                {"threads", kernels::max_threads()}};
}

void write_trace(const fs::path& p, const TrainingTrace& t) {
    std::ofstream os = open_out(p);
    t.write_csv(os);
}

// ---------------------------------------------------------------- vis

struct VisArgs {
    GraphSource graph;
    int k = 0;
    double cv = 0.0;
    double ce = 1.0;
    int samples = 1000;
    int iters = 100;
    double lr = 0.05;
    double beta = 0.9;
    std::string regime = "large_n";
    std::uint64_t seed = 0;
    std::string out = ".";
};

ThresholdRegime regime_from_string(const std::string& s) {
    if (s == "small_n") {
        return ThresholdRegime::small_n;
    }
    if (s == "large_n") {
        return ThresholdRegime::large_n;
    }
    return ThresholdRegime::lower_bound;
}

int run_vis(const VisArgs& a) {
    const Graph g = make_graph(a.graph, a.seed);
    int k = a.k;
    if (k == 0) {
        k = max_clique_oracle(g).size;
    }
    VisConfig cfg = VisConfig::for_graph(g, k);
    if (a.cv > 0.0) {
        cfg.c_v = a.cv;
    }
    cfg.c_e = a.ce;
    cfg.samples = a.samples;
    cfg.iterations = a.iters;
    cfg.lr = a.lr;
    cfg.beta = a.beta;
    cfg.regime = regime_from_string(a.regime);
    cfg.seed = a.seed;
    cfg.validate();

    const fs::path out(a.out);
    prepare_dir(out);
    json summary = run_header("vis", a.seed);
    summary["config"] = json{{"graph", graph_json(a.graph)},
                             {"m", g.vertices()},
                             {"edges", g.edges().size()},
                             {"k", cfg.k},
                             {"c_v", cfg.c_v},
                             {"c_e", cfg.c_e},
                             {"samples", cfg.samples},
                             {"iterations", cfg.iterations},
                             {"optimizer", "momentum"},
                             {"lr", cfg.lr},
                             {"beta", cfg.beta},
                             {"regime", to_string(cfg.regime)},
                             {"initial_weights", "uniform"},
                             {"target_mean_clicks", cfg.k}};
    summary["status"] = "running";
    write_json(out / "summary.json", summary);

    const VisResult r = vis_train(cfg);
    write_trace(out / "trace.csv", r.trace);
    {
        std::ofstream os = open_out(out / "vis_detail.csv");
        os << "iter,unconditioned_success,k_click_samples,saturated\n";
        for (const TraceRow& row : r.trace.rows) {
            os << row.iter << ',' << row.unconditioned << ',' << row.k_click_samples << ','
               << (row.saturated ? 1 : 0) << '\n';
        }
    }
    json gs = json::array();
    for (const auto& x : r.ground_states) {
        gs.push_back(x);
    }
    write_json(out / "final_weights.json",
               json{{"weights", to_std(r.weights)}, {"scale", r.scale}, {"ground_states", gs}});

    const TraceRow& last = r.trace.rows.back();
    summary["status"] = "done";
    summary["result"] = json{{"initial_success", r.trace.rows.front().metric},
                             {"final_success", last.metric},
                             {"final_unconditioned_success", last.unconditioned},
                             {"final_cost", last.cost},
                             {"ground_states", gs},
                             {"final_weights", to_std(r.weights)}};
    write_json(out / "summary.json", summary);
    std::cout << "vis: K=" << cfg.k << " success " << r.trace.rows.front().metric << " -> "
              << last.metric << " over " << cfg.iterations << " iterations\n";
    return 0;
}

// ---------------------------------------------------------------- unsup

struct UnsupArgs {
    GraphSource graph{.file = "", .kind = "circulant", .m = 16, .offsets = "1,2", .prob = 2.0 / 3.0};
    std::string profile = "increasing";
    double mean_photons = 3.0;
    int samples = 1000;
    double lr = 0.1;
    int iters = 200;
    double theta0 = 5.0;
    std::uint64_t seed = 0;
    std::string out = ".";
};

int run_unsup(const UnsupArgs& a) {
    UnsupConfig cfg;
    cfg.kind = graph_kind(a.graph);
    cfg.m = a.graph.m;
    cfg.mean_photons = a.mean_photons;
    cfg.profile = weight_profile_from_string(a.profile);
    cfg.samples = a.samples;
    cfg.lr = a.lr;
    cfg.iterations = a.iters;
    cfg.theta0 = a.theta0;
    cfg.seed = a.seed;
    cfg.validate();

    const fs::path out(a.out);
    prepare_dir(out);
    json summary = run_header("unsup", a.seed);
    summary["config"] = json{{"graph", graph_json(a.graph)},
                             {"profile", a.profile},
                             {"mean_photons", cfg.mean_photons},
                             {"samples", cfg.samples},
                             {"optimizer", "sgd"},
                             {"lr", cfg.lr},
                             {"iterations", cfg.iterations},
                             {"theta0", cfg.theta0},
                             {"features", "basis"},
                             {"gradient", "click marginals"}};
    summary["status"] = "running";
    write_json(out / "summary.json", summary);

    const UnsupResult r = run_unsupervised(cfg);
    write_trace(out / "trace.csv", r.fit.trace);
    {
        std::ofstream os = open_out(out / "data.samples");
        write_batch(os, r.data);
    }
    write_json(out / "recovered_weights.json",
               json{{"true_weights", to_std(r.true_weights)},
                    {"recovered_weights", to_std(r.fit.params.weights())},
                    {"theta", to_std(r.fit.params.theta())},
                    {"data_click_marginals", to_std(r.data_clicks)},
                    {"model_click_marginals", to_std(r.model_clicks)},
                    {"scale", r.scale}});
    const auto& rows = r.fit.trace.rows;
    summary["status"] = "done";
    summary["result"] = json{{"initial_weight_distance", rows.front().metric},
                             {"final_weight_distance", rows.back().metric},
                             {"max_marginal_gap", (r.model_clicks - r.data_clicks).cwiseAbs().maxCoeff()},
                             {"final_nll", rows.back().cost}};
    write_json(out / "summary.json", summary);
    std::cout << "unsup: ||w - w_model|| " << rows.front().metric << " -> " << rows.back().metric
              << " over " << cfg.iterations << " iterations\n";
    return 0;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
    int modes = 2;
    std::uint64_t seed = 0;
    std::string out = ".";
};

int run_gradcheck(const GradcheckArgs& a) {
    const fs::path out(a.out);
    prepare_dir(out);
    std::vector<checks::Check> all;
    all.push_back(checks::hafnian_oracle_check(50, 2 * a.modes + 6, a.seed));
    for (auto& c : checks::gradient_checks(a.modes, a.seed)) {
        all.push_back(std::move(c));
    }
    for (auto& c : checks::distribution_checks(a.modes, a.seed)) {
        all.push_back(std::move(c));
    }
    all.push_back(checks::change_of_measure_check(a.modes, a.seed));

    std::ofstream os = open_out(out / "gradcheck.txt");
    json report = run_header("gradcheck", a.seed);
    report["modes"] = a.modes;
    report["checks"] = json::array();
    int failed = 0;
    for (const auto& c : all) {
        char line[256];
        std::snprintf(line, sizeof line, "%s %-34s error=%.3e tol=%.1e", c.pass ? "PASS" : "FAIL",
                      c.name.c_str(), c.error, c.tolerance);
        os << line << '\n';
        std::cout << line << '\n';
        report["checks"].push_back(
            json{{"name", c.name}, {"pass", c.pass}, {"error", c.error}, {"tolerance", c.tolerance}});
        failed += c.pass ? 0 : 1;
    }
    report["failed"] = failed;
    write_json(out / "gradcheck.json", report);
    return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
    GraphSource graph;
    std::string detector = "click";
    int count = 1000;
    double mean_photons = 1.0;
    int clicks = -1;
    int cutoff = kDefaultCutoff;
    std::uint64_t seed = 0;
    std::string out = ".";
};

int run_sample(const SampleArgs& a) {
    const Graph g = make_graph(a.graph, a.seed);
    const Rescaled st = rescale_to_target(g.adjacency(), a.mean_photons, Metric::mean_photons);
    SampleOptions so;
    so.detector = detector_from_string(a.detector);
    so.count = a.count;
    so.seed = derive_seed(a.seed, Stream::sampler);
    so.cutoff = a.cutoff;
    if (a.clicks >= 0) {
        so.clicks = a.clicks;
    }
    const fs::path out(a.out);
    prepare_dir(out);
    json summary = run_header("sample", a.seed);
    summary["config"] = json{{"graph", graph_json(a.graph)},
                             {"detector", a.detector},
                             {"count", a.count},
                             {"mean_photons", a.mean_photons},
                             {"clicks", a.clicks >= 0 ? json(a.clicks) : json(nullptr)},
                             {"cutoff", a.cutoff},
                             {"scale", st.c}};
    summary["status"] = "running";
    write_json(out / "summary.json", summary);

    const SampleBatch b = sample(st.a, WawParams::identity(g.vertices()), so);
    {
        std::ofstream os = open_out(out / "samples.txt");
        write_batch(os, b);
    }
    summary["status"] = "done";
    summary["result"] = json{{"attempts", b.attempts()}, {"means", to_std(b.means())}};
    write_json(out / "summary.json", summary);
    std::cout << "sample: " << b.size() << " " << a.detector << " patterns on " << g.vertices()
              << " modes\n";
    return 0;
}

// ---------------------------------------------------------------- graph

struct GraphArgs {
    GraphSource graph;
    std::uint64_t seed = 0;
    std::string out = ".";
    std::string name = "graph";
};

int run_graph(const GraphArgs& a) {
    const Graph g = make_graph(a.graph, a.seed);
    const fs::path out(a.out);
    prepare_dir(out);
    {
        std::ofstream os = open_out(out / (a.name + ".edges"));
        write_edge_list(os, g);
    }
    {
        std::ofstream os = open_out(out / (a.name + ".json"));
        os << graph_to_json(g) << '\n';
    }
    const CliqueSearch cs = g.vertices() <= 20 ? max_clique_oracle(g) : CliqueSearch{};
    std::cout << "graph: " << g.vertices() << " vertices, " << g.edges().size() << " edges";
    if (cs.size > 0) {
        std::cout << ", max clique " << cs.size << " (" << cs.cliques.size() << ")";
    }
    std::cout << '\n';
    return 0;
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::config:
        case ErrorKind::invalid_argument:
        case ErrorKind::dimension_mismatch: return 2;
        case ErrorKind::infeasible_rescale: return 3;
        case ErrorKind::budget_exceeded: return 4;
        default: return 5;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Train and sample Gaussian boson sampling distributions"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    VisArgs vis;
    auto* vis_cmd = app.add_subcommand("vis", "Variational Ising solver for max clique");
    add_graph_options(vis_cmd, vis.graph, true);
    vis_cmd->add_option("--k", vis.k, "Clique size K (default: the maximum clique size)")
        ->check(CLI::NonNegativeNumber);
    vis_cmd->add_option("--cv", vis.cv, "Vertex penalty c_V (default 2K)")->check(CLI::PositiveNumber);
    vis_cmd->add_option("--ce", vis.ce, "Edge reward c_E")->check(CLI::PositiveNumber)->capture_default_str();
    vis_cmd->add_option("--samples", vis.samples, "Samples per iteration")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    vis_cmd->add_option("--iters", vis.iters, "Iterations")->check(CLI::PositiveNumber)->capture_default_str();
    vis_cmd->add_option("--lr", vis.lr, "Learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    vis_cmd->add_option("--beta", vis.beta, "Momentum coefficient")
        ->check(CLI::Range(0.0, 0.999999))
        ->capture_default_str();
    vis_cmd->add_option("--regime", vis.regime, "Threshold gradient: small_n, large_n or lower_bound")
        ->check(CLI::IsMember({"small_n", "large_n", "lower_bound"}))
        ->capture_default_str();
    vis_cmd->add_option("--seed", vis.seed, "Seed")->capture_default_str();
    vis_cmd->add_option("--out", vis.out, "Output directory")->capture_default_str();

    UnsupArgs unsup;
    auto* unsup_cmd = app.add_subcommand("unsup", "Recover hidden weights from threshold samples");
    add_graph_options(unsup_cmd, unsup.graph, false);
    unsup_cmd->add_option("--profile", unsup.profile, "Hidden weights: increasing, decreasing or random")
        ->check(CLI::IsMember({"increasing", "decreasing", "random"}))
        ->capture_default_str();
    unsup_cmd->add_option("--mean-photons", unsup.mean_photons, "Mean photon number of the data state")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    unsup_cmd->add_option("--samples", unsup.samples, "Training samples")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    unsup_cmd->add_option("--lr", unsup.lr, "Learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    unsup_cmd->add_option("--iters", unsup.iters, "Iterations")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    unsup_cmd->add_option("--theta0", unsup.theta0, "Initial theta")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    unsup_cmd->add_option("--seed", unsup.seed, "Seed")->capture_default_str();
    unsup_cmd->add_option("--out", unsup.out, "Output directory")->capture_default_str();

    GradcheckArgs gc;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Check gradients and probabilities against oracles");
    gc_cmd->add_option("--modes", gc.modes, "Modes (1-3)")->check(CLI::Range(1, 3))->capture_default_str();
    gc_cmd->add_option("--seed", gc.seed, "Seed")->capture_default_str();
    gc_cmd->add_option("--out", gc.out, "Output directory")->capture_default_str();

    SampleArgs sm;
    auto* sm_cmd = app.add_subcommand("sample", "Sample from the rescaled adjacency state");
    add_graph_options(sm_cmd, sm.graph, true);
    sm_cmd->add_option("--detector", sm.detector, "photon or click")
        ->check(CLI::IsMember({"photon", "click"}))
        ->capture_default_str();
    sm_cmd->add_option("--count", sm.count, "Samples")->check(CLI::PositiveNumber)->capture_default_str();
    sm_cmd->add_option("--mean-photons", sm.mean_photons, "Mean photon number")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sm_cmd->add_option("--clicks", sm.clicks, "Condition on this many clicks")->check(CLI::NonNegativeNumber);
    sm_cmd->add_option("--cutoff", sm.cutoff, "Photon cutoff")->check(CLI::PositiveNumber)->capture_default_str();
    sm_cmd->add_option("--seed", sm.seed, "Seed")->capture_default_str();
    sm_cmd->add_option("--out", sm.out, "Output directory")->capture_default_str();

    GraphArgs gr;
    auto* gr_cmd = app.add_subcommand("graph", "Generate a graph and write its edge list");
    add_graph_options(gr_cmd, gr.graph, false);
    gr_cmd->add_option("--seed", gr.seed, "Seed")->capture_default_str();
    gr_cmd->add_option("--out", gr.out, "Output directory")->capture_default_str();
    gr_cmd->add_option("--name", gr.name, "Output file stem")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    kernels::configure_threads_from_env();
    try {
        if (*vis_cmd) {
            return run_vis(vis);
        }
        if (*unsup_cmd) {
            return run_unsup(unsup);
        }
        if (*gc_cmd) {
            return run_gradcheck(gc);
        }
        if (*sm_cmd) {
            return run_sample(sm);
        }
        return run_graph(gr);
    } catch (const Error& e) {
        std::cerr << "gbstrain: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "gbstrain: internal: " << e.what() << '\n';
        return 5;
    }
}

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


// Serial reference vs OpenMP kernels. Thread count follows GBS_TRAIN_THREADS.

#include <benchmark/benchmark.h>

#include "gbs/distribution.hpp"
#include "gbs/gbs_state.hpp"
#include "gbs/graphs.hpp"
#include "gbs/kernels.hpp"
#include "gbs/training.hpp"

namespace {

using namespace gbs;

Matrix q_for(int m) {
    const Graph g = gen_graph(ErdosRenyi{0.5}, m, 1);
    const Rescaled st = rescale_to_target(g.adjacency(), 2.0, Metric::mean_photons);
    return gaussian_views(st.a).q;
}

void BM_VacuumTableSerial(benchmark::State& s) {
    const int m = static_cast<int>(s.range(0));
    const Matrix q = q_for(m);
    for (auto _ : s) {
        benchmark::DoNotOptimize(kernels::vacuum_table_serial(q, m));
    }
}

void BM_VacuumTable(benchmark::State& s) {
    const int m = static_cast<int>(s.range(0));
    const Matrix q = q_for(m);
    for (auto _ : s) {
        benchmark::DoNotOptimize(kernels::vacuum_table(q, m));
    }
}

struct PhotonCase {
    AMatrix a;
    Vector w;
    std::vector<Counts> patterns;
};

PhotonCase photon_case(int m) {
    Rng rng(derive_seed(7, Stream::check));
    AMatrix a = random_a_matrix(m, 0.7, rng);
    Enumeration e = enumerate_photon(a, WawParams::identity(m), 8);
    return {std::move(a), Vector::Constant(m, 0.9), std::move(e.patterns)};
}

void BM_PhotonProbsSerial(benchmark::State& s) {
    const PhotonCase c = photon_case(static_cast<int>(s.range(0)));
    for (auto _ : s) {
        benchmark::DoNotOptimize(kernels::photon_probs_serial(c.a, c.w, c.patterns));
    }
    s.counters["patterns"] = static_cast<double>(c.patterns.size());
}

void BM_PhotonProbs(benchmark::State& s) {
    const PhotonCase c = photon_case(static_cast<int>(s.range(0)));
    for (auto _ : s) {
        benchmark::DoNotOptimize(kernels::photon_probs(c.a, c.w, c.patterns));
    }
    s.counters["patterns"] = static_cast<double>(c.patterns.size());
}

void BM_VisIteration(benchmark::State& s) {
    VisConfig cfg = VisConfig::for_graph(gen_graph(ErdosRenyi{0.5}, 10, 3), 4);
    cfg.iterations = 1;
    for (auto _ : s) {
        benchmark::DoNotOptimize(vis_train(cfg));
    }
}

}  // namespace

BENCHMARK(BM_VacuumTableSerial)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VacuumTable)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PhotonProbsSerial)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PhotonProbs)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VisIteration)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
    kernels::configure_threads_from_env();
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) {
        return 1;
    }
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}

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


#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "gbs/error.hpp"
#include "gbs/training.hpp"

using namespace gbs;

namespace {

Vector vec2(double a, double b) { return (Vector(2) << a, b).finished(); }

}  // namespace

TEST_SUITE("training") {
    TEST_CASE("optimizer steps") {
        for (OptimizerState s : {OptimizerState::sgd(0.1, 2), OptimizerState::momentum(0.1, 0.9, 2)}) {
            CHECK(optimizer_step(s, vec2(1, 1), Vector::Zero(2)).theta == vec2(1, 1));
        }
        const OptimizerStep s1 = optimizer_step(OptimizerState::sgd(0.1, 2), vec2(1, 1), vec2(1, -1));
        CHECK((s1.theta - vec2(0.9, 1.1)).norm() <= 1e-15);

        const Vector g = vec2(0.3, -0.2);
        const OptimizerStep m1 = optimizer_step(OptimizerState::momentum(0.05, 0.9, 2), Vector::Zero(2), g);
        const OptimizerStep m2 = optimizer_step(m1.state, m1.theta, g);
        CHECK(((m1.theta - m2.theta) - 0.05 * 1.9 * g).norm() <= 1e-15);

        OptimizerState zero = OptimizerState::sgd(0.1, 2);
        zero.lr = 0.0;
        CHECK(optimizer_step(zero, vec2(2, 3), vec2(5, 5)).theta == vec2(2, 3));
        CHECK_THROWS_AS(optimizer_step(OptimizerState::sgd(0.1, 2), vec2(1, 1), Vector::Zero(3)), Error);
        CHECK(optimizer_from_string("momentum") == OptimizerKind::momentum);
        CHECK_THROWS_AS(optimizer_from_string("adam"), Error);
    }

    TEST_CASE("projection") {
        Rng rng(derive_seed(31, Stream::check));
        const AMatrix a = random_a_matrix(4, 0.9, rng);
        CHECK((project(a.sym()).mat() - a.mat()).norm() <= 1e-12);

        const AMatrix p = project(SymMatrix(2.0 * Matrix::Identity(3, 3)));
        CHECK((p.mat() - (1.0 - kPhysicalityMargin) * Matrix::Identity(3, 3)).norm() <= 1e-12);
        CHECK(validate(p.sym()).valid);

        Matrix x = Matrix::Random(5, 5) * 3.0;
        const AMatrix px = project(x);
        CHECK(validate(px.sym()).valid);
        CHECK((project(px.sym()).mat() - px.mat()).norm() <= 1e-12);
        CHECK_THROWS_AS(project(Matrix(2, 3)), Error);
    }

    TEST_CASE("projected subgradient step") {
        Matrix m(2, 2);
        m << 0.1, 0.5, 0.5, 0.2;
        const AMatrix a{SymMatrix(m)};
        OptimizerState opt = OptimizerState::sgd(0.1, 2);
        const WawGradFn zero = [](const AMatrix&, const WawParams&) { return Vector::Zero(2).eval(); };
        CHECK((projected_subgrad_step(a, zero, opt).mat() - a.mat()).norm() <= 1e-15);

        // theta = 0 - 0.1 * g, w = exp(-theta)
        const WawGradFn push = [](const AMatrix&, const WawParams&) { return vec2(-3.0, 0.0); };
        const AMatrix next = projected_subgrad_step(a, push, opt);
        const Vector w = vec2(std::exp(-0.3), 1.0);
        const AMatrix want = project(apply_waw(a.sym(), w));
        CHECK((next.mat() - want.mat()).norm() <= 1e-15);
        CHECK(validate(next.sym()).valid);

        // a big step leaves the feasible set and is clipped back
        OptimizerState big = OptimizerState::sgd(5.0, 2);
        const WawGradFn pull = [](const AMatrix&, const WawParams&) { return vec2(3.0, 3.0); };
        const AMatrix clipped = projected_subgrad_step(a, pull, big);
        CHECK(validate(clipped.sym()).valid);
        CHECK(validate(clipped.sym()).max_singular_value == doctest::Approx(1.0 - kPhysicalityMargin));
    }

    TEST_CASE("trace CSV round trip") {
        TrainingTrace t{"success_prob", {}};
        for (int i = 0; i < 3; ++i) {
            TraceRow r;
            r.iter = i;
            r.cost = 1.0 / (i + 3);
            r.grad_norm = std::sqrt(2.0) * i;
            r.metric = 0.1 * i;
            r.wall_ms = 1.5 * i;
            t.rows.push_back(r);
        }
        std::stringstream ss;
        t.write_csv(ss);
        CHECK(ss.str().rfind("iter,cost,grad_norm,success_prob_or_wdist,wall_ms\n", 0) == 0);
        const auto rows = read_trace_csv(ss);
        REQUIRE(rows.size() == 3);
        CHECK(rows[2].cost == t.rows[2].cost);
        CHECK(rows[2].grad_norm == t.rows[2].grad_norm);
        CHECK(rows[1].metric == t.rows[1].metric);
        std::stringstream bad("nope\n");
        CHECK_THROWS_AS(read_trace_csv(bad), Error);
    }

    TEST_CASE("VIS on a bare clique") {
        const Graph g = gen_graph(ErdosRenyi{1.0}, 4, 0);
        VisConfig cfg = VisConfig::for_graph(g, 4);
        cfg.iterations = 3;
        cfg.samples = 500;
        const VisResult r = vis_train(cfg);
        CHECK(r.ground_states == std::vector<std::vector<int>>{{1, 1, 1, 1}});
        CHECK(r.trace.rows.front().metric == doctest::Approx(1.0));
        CHECK(r.trace.rows.front().saturated);  // 4 clicks on 4 modes needs infinite squeezing
    }

    TEST_CASE("VIS weight invariants") {
        const Graph g = load_edge_list(GBS_DATA_DIR "/clique5_n8.edges");
        VisConfig cfg = VisConfig::for_graph(g, 5);
        cfg.iterations = 25;
        int rows = 0;
        const VisResult r = vis_train(cfg, [&](const TraceRow& row) {
            ++rows;
            CHECK(row.weights.minCoeff() >= 0.0);
            CHECK(row.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
            const VisState st = vis_state(g.adjacency(), row.weights, 5);
            CHECK(validate(st.a.sym()).valid);
            if (!st.saturated) {
                CHECK(std::abs(click_probs(st.a).sum() - 5.0) <= 1e-6);
            }
        });
        CHECK(rows == 25);
        CHECK(r.trace.rows.back().metric > r.trace.rows.front().metric);
        CHECK(r.weights.minCoeff() >= 0.0);
    }

    TEST_CASE("VIS is deterministic per seed") {
        VisConfig cfg = VisConfig::for_graph(load_edge_list(GBS_DATA_DIR "/clique5_n8.edges"), 5);
        cfg.iterations = 10;
        cfg.seed = 4;
        const VisResult a = vis_train(cfg), b = vis_train(cfg);
        CHECK(a.weights == b.weights);
        for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
            CHECK(a.trace.rows[i].cost == b.trace.rows[i].cost);
            CHECK(a.trace.rows[i].metric == b.trace.rows[i].metric);
        }
    }

    TEST_CASE("VIS on two degenerate cliques finds both") {
        const Graph g = load_edge_list(GBS_DATA_DIR "/twin_clique5_n10.edges");
        std::set<int> winners;
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            VisConfig cfg = VisConfig::for_graph(g, 5);
            cfg.iterations = 60;
            cfg.seed = seed;
            const VisResult r = vis_train(cfg);
            REQUIRE(r.ground_states.size() == 2);
            const double left = r.weights.head(5).sum();
            const double right = r.weights.tail(5).sum();
            CHECK(std::max(left, right) >= 0.9);
            winners.insert(left > right ? 0 : 1);
        }
        CHECK(winners.size() == 2);
    }

    TEST_CASE("VIS config validation") {
        VisConfig cfg = VisConfig::for_graph(gen_graph(Circulant{{1}}, 6, 0), 7);
        CHECK_THROWS_AS(vis_train(cfg), Error);
        cfg.k = 3;
        cfg.beta = 1.0;
        CHECK_THROWS_AS(cfg.validate(), Error);
    }

    TEST_CASE("KL training is stationary at the truth") {
        const Graph g = gen_graph(Circulant{{1, 2}}, 8, 0);
        const Rescaled st = rescale_to_target(g.adjacency(), 1.5, Metric::mean_photons);
        const Vector w = make_weights(WeightProfile::increasing, 8, 0);
        const WawParams truth = WawParams::basis((-w.array().log()).matrix());
        SampleOptions so;
        so.count = 5000;
        so.seed = 3;
        const SampleBatch data = sample(st.a, truth, so);
        const KlResult r = kl_train(st.a.sym(), data, truth, 0.1, 10, w);
        const double noise = (click_probs(apply_waw(st.a, truth)) - data.means()).norm();
        CHECK(r.trace.rows.front().grad_norm <= noise + 1e-12);
        CHECK(r.trace.rows.size() == 11);
        CHECK(r.trace.rows.back().metric <= 10 * 0.1 * noise + 1e-12);
    }

    TEST_CASE("KL training on exact marginals converges") {
        const Graph g = gen_graph(Circulant{{1, 2}}, 16, 0);
        const Rescaled st = rescale_to_target(g.adjacency(), 3.0, Metric::mean_photons);
        const Vector w = make_weights(WeightProfile::increasing, 16, 0);
        const AMatrix model_a = st.a;
        const Vector target = click_probs(apply_waw(model_a, WawParams::direct(w)));
        const WawParams p0 = WawParams::basis(Vector::Constant(16, 5.0));
        const KlResult r = kl_train_marginals(model_a.sym(), target, p0, 0.1, 2000, w);
        const auto& rows = r.trace.rows;
        int increases = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            increases += rows[i].grad_norm > rows[i - 1].grad_norm + 1e-12 ? 1 : 0;
        }
        CHECK(increases == 0);
        CHECK(rows.back().grad_norm < 0.1 * rows.front().grad_norm);
        CHECK(rows.back().metric < rows.front().metric);
    }

    TEST_CASE("unsupervised driver shapes") {
        UnsupConfig cfg;
        cfg.m = 8;
        cfg.samples = 200;
        cfg.iterations = 5;
        const UnsupResult r = run_unsupervised(cfg);
        CHECK(r.data.size() == 200);
        CHECK(r.fit.trace.rows.size() == 6);
        CHECK(r.true_weights.size() == 8);
        CHECK(r.model_clicks.size() == 8);
        CHECK(std::abs(mean_photons(AMatrix(apply_waw(r.a, r.true_weights))) - 3.0) <= 1e-8);
        cfg.profile = WeightProfile::random;
        CHECK(make_weights(WeightProfile::random, 8, 1) == make_weights(WeightProfile::random, 8, 1));
        CHECK(make_weights(WeightProfile::decreasing, 4, 0)(0) == doctest::Approx(1.0));
        cfg.lr = 0.0;
        CHECK_THROWS_AS(run_unsupervised(cfg), Error);
    }
}

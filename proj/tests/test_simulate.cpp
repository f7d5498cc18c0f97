#include "helpers.hpp"

#include "quasidiff/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace qd;

namespace {

QuasiPair five_atoms() { return load_pair(data_file("five_atoms.json")).validate(); }

QuasiPair three_atoms() {
    return pair_json(R"({"interval": {"left": "reflect", "r": 3, "r_included": true},
        "measure": {"atoms": [[1, 1], [2, 1], [3, 1]]}})");
}

}  // namespace

TEST_CASE("paths are reproducible from the seed") {
    auto P = five_atoms();
    auto a = simulate_paths(P, 1.0, 20.0, 5, 42, Sampler::Chain);
    auto b = simulate_paths(P, 1.0, 20.0, 5, 42, Sampler::Chain);
    auto c = simulate_paths(P, 1.0, 20.0, 5, 43, Sampler::Chain);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].times == b[i].times);
        CHECK(a[i].states == b[i].states);
        CHECK(a[i].stream == i);
    }
    CHECK(a[0].times != c[0].times);
    auto t1 = simulate_paths(P, 1.0, 2.0, 2, 42, Sampler::TimeChange);
    auto t2 = simulate_paths(P, 1.0, 2.0, 2, 42, Sampler::TimeChange);
    CHECK(t1[1].times == t2[1].times);
}

TEST_CASE("a single atom never moves") {
    auto P = pair_json(R"({"interval": {"left": "reflect", "r": 1, "r_included": true},
        "measure": {"atoms": [[0.5, 2]]}})");
    auto rng = path_rng(1, 0);
    auto p = simulate_chain(P, 0.5, 100.0, rng);
    CHECK(p.times.size() == 1);
    CHECK(p.states.front() == 0.5);
    CHECK(std::isinf(p.lifetime));
    auto tc = simulate_paths(P, 0.5, 5.0, 3, 1, Sampler::TimeChange);
    for (const auto& q : tc) CHECK(q.times.size() == 1);
}

TEST_CASE("symmetric three-atom chain leaves the middle both ways equally often") {
    auto P = three_atoms();
    auto ch = atomic_chain(P);
    CHECK(ch.up[1] == doctest::Approx(ch.down[1]));
    const long n = 20000;
    long up = 0;
    double hold = 0.0;
    for (long k = 0; k < n; ++k) {
        auto rng = path_rng(5, k);
        auto p = simulate_chain(ch, 2.0, 50.0, rng);
        // first jump only
        if (p.states.size() < 2) continue;
        hold += p.times[1];
        if (p.states[1] > 2.0) ++up;
        if (k == 0) CHECK(p.states.size() > 1);
    }
    double frac = double(up) / n;
    CHECK(std::fabs(frac - 0.5) < 4 * 0.5 / std::sqrt(double(n)));
    double mean = hold / n, want = 1.0 / ch.holding_rate(1);
    CHECK(std::fabs(mean - want) < 4 * want / std::sqrt(double(n)));
}

TEST_CASE("Laplace functional of f = 1") {
    auto P = five_atoms();
    auto paths = simulate_paths(P, 1.5, 40.0, 200, 3, Sampler::Chain);
    auto e = laplace_functional(paths, PiecewiseFunction::constant(1.0), 0.5);
    CHECK(std::fabs(e.value - 2.0) <= e.bias_bound + 1e-12);
    CHECK(e.std_error < 1e-9);

    auto A = pair_json(R"({"interval": {"left": "reflect", "r": 4, "r_included": false},
        "measure": {"atoms": [[1, 1], [2, 1], [3, 1]]}})");
    auto pa = simulate_paths(A, 3.0, 40.0, 2000, 3, Sampler::Chain);
    auto ea = laplace_functional(pa, PiecewiseFunction::constant(1.0), 0.5);
    CHECK(ea.value < 2.0 - 5 * ea.std_error);
    long killed = 0;
    for (const auto& p : pa) killed += std::isfinite(p.lifetime);
    CHECK(killed > 0);
}

TEST_CASE("long-run occupation is proportional to the image masses") {
    auto P = five_atoms();
    auto ch = atomic_chain(P);
    const double T = 20000.0;
    auto rng = path_rng(11, 0);
    auto p = simulate_chain(ch, 1.0, T, rng);
    std::vector<double> occ(ch.size(), 0.0);
    for (std::size_t i = 0; i < p.states.size(); ++i) {
        double t1 = i + 1 < p.times.size() ? p.times[i + 1] : T;
        occ[ch.index_of(p.states[i])] += t1 - p.times[i];
    }
    double total_mass = std::accumulate(ch.mass.begin(), ch.mass.end(), 0.0);
    for (int i = 0; i < ch.size(); ++i) CHECK(occ[i] / T == doctest::Approx(ch.mass[i] / total_mass).epsilon(0.05));
}

TEST_CASE("time change agrees with the chain") {
    auto P = five_atoms();
    auto f = PiecewiseFunction::indicator(0.9, 1.6);
    auto chain = laplace_functional(simulate_paths(P, 2.0, 30.0, 20000, 17, Sampler::Chain), f, 1.0);
    auto tc = laplace_functional(simulate_paths(P, 2.0, 25.0, 400, 17, Sampler::TimeChange), f, 1.0);
    double se = std::hypot(chain.std_error, tc.std_error);
    CHECK(std::fabs(chain.value - tc.value) < 4 * se);
}

TEST_CASE("path audit") {
    auto P = five_atoms();
    auto chain = simulate_paths(P, 1.0, 30.0, 200, 2, Sampler::Chain);
    auto rep = path_property_audit(chain, P);
    CHECK(rep.passed());
    CHECK(rep.paths == 200);
    CHECK(rep.jumps > 0);
    auto tc = simulate_paths(P, 1.0, 3.0, 20, 2, Sampler::TimeChange);
    CHECK(path_property_audit(tc, P).passed());

    // a jump from 0.5 straight to 2 skips the atoms at 1 and 1.5
    PathSample bad;
    bad.times = {0.0, 1.0};
    bad.states = {0.5, 2.0};
    bad.states_hat = {P.s(0.5), P.s(2.0)};
    bad.horizon = 2.0;
    auto rb = path_property_audit({bad}, P);
    CHECK_FALSE(rb.passed());
    CHECK(rb.violations == 1);
}

TEST_CASE("input checks") {
    auto P = five_atoms();
    auto rng = path_rng(1, 0);
    CHECK_THROWS_AS(simulate_chain(P, 1.25, 1.0, rng), ValidationError);
    CHECK_THROWS_AS(simulate_timechange(P, 1.0, -1.0, rng), ValidationError);
    CHECK(timechange_step_warning(P, 0.1));
    CHECK_FALSE(timechange_step_warning(P, 1e-6));
    std::vector<PathSample> none;
    CHECK_THROWS_AS(laplace_functional(none, PiecewiseFunction::constant(1.0), 1.0), ValidationError);
}

#include "helpers.hpp"

#include "quasidiff/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace qd;

namespace {

BDChain random_chain(int K, std::uint64_t seed, Truncation mode) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.5, 2.0);
    std::vector<double> a(K), b(K);
    for (int k = 0; k < K; ++k) {
        a[k] = k == 0 ? 0.0 : U(rng);
        b[k] = U(rng);
    }
    return BDChain::from_rates(a, b, mode);
}

// Dense Gaussian elimination for (lambda - Q) x = f.
std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> f) {
    const std::size_t n = f.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t p = i;
        for (std::size_t r = i + 1; r < n; ++r)
            if (std::fabs(A[r][i]) > std::fabs(A[p][i])) p = r;
        std::swap(A[i], A[p]);
        std::swap(f[i], f[p]);
        for (std::size_t r = i + 1; r < n; ++r) {
            double m = A[r][i] / A[i][i];
            for (std::size_t c = i; c < n; ++c) A[r][c] -= m * A[i][c];
            f[r] -= m * f[i];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = f[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= A[i][c] * x[c];
        x[i] = s / A[i][i];
    }
    return x;
}

}  // namespace

TEST_CASE("generator identity on small chains") {
    std::vector<double> one(20, 1.0), zero(20, 0.0);
    one[0] = 0.0;
    std::vector<double> ones(20, 1.0);
    for (auto mode : {Truncation::AbsorbingAtTop, Truncation::ReflectingAtTop}) {
        CHECK(verify_generator_identity(BDChain::from_rates(one, ones, mode)) <= 1e-12);
        for (std::uint64_t seed : {1u, 2u, 3u}) CHECK(verify_generator_identity(random_chain(20, seed, mode)) <= 1e-12);
        CHECK(verify_generator_identity(BDChain::regular_at_infinity(20, mode)) <= 1e-12);
        CHECK(verify_generator_identity(BDChain::regular_at_infinity(50, mode)) <= 1e-12);
    }
}

TEST_CASE("two-state chain against the explicit inverse") {
    const double b0 = 1.5, a1 = 0.7, b1 = 0.4, lam = 0.9;
    std::vector<double> f{1.0, -2.0};
    for (auto mode : {Truncation::ReflectingAtTop, Truncation::AbsorbingAtTop}) {
        auto ch = BDChain::from_rates({0, a1}, {b0, b1}, mode);
        double kill = mode == Truncation::AbsorbingAtTop ? b1 : 0.0;
        double A = lam + b0, B = -b0, C = -a1, D = lam + a1 + kill;
        double det = A * D - B * C;
        double x0 = (D * f[0] - B * f[1]) / det, x1 = (A * f[1] - C * f[0]) / det;
        auto x = bd_matrix_resolvent(ch, lam, f);
        CHECK(x[0] == doctest::Approx(x0).epsilon(1e-14));
        CHECK(x[1] == doctest::Approx(x1).epsilon(1e-14));
    }
    CHECK_THROWS_AS(bd_matrix_resolvent(BDChain::from_rates({0, a1}, {b0, b1}, Truncation::AbsorbingAtTop), 0.0, f),
                    ValidationError);
}

TEST_CASE("tridiagonal solver against dense elimination") {
    auto ch = random_chain(12, 9, Truncation::AbsorbingAtTop);
    const int K = ch.size();
    const double lam = 0.3;
    std::vector<std::vector<double>> A(K, std::vector<double>(K, 0.0));
    for (int k = 0; k < K; ++k) {
        A[k][k] = lam + ch.b[k] + (k ? ch.a[k] : 0.0);
        if (k) A[k][k - 1] = -ch.a[k];
        if (k + 1 < K) A[k][k + 1] = -ch.b[k];
    }
    std::vector<double> f(K);
    for (int k = 0; k < K; ++k) f[k] = std::sin(k + 1.0);
    auto want = dense_solve(A, f);
    auto got = bd_matrix_resolvent(ch, lam, f);
    for (int k = 0; k < K; ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
}

TEST_CASE("conservative chain: f = 1 gives 1/lambda") {
    auto ch = BDChain::regular_at_infinity(30, Truncation::ReflectingAtTop);
    for (double lam : {0.5, 1.0, 4.0}) {
        auto x = bd_matrix_resolvent(ch, lam, std::vector<double>(30, 1.0));
        for (double v : x) CHECK(v == doctest::Approx(1.0 / lam).epsilon(1e-12));
    }
}

TEST_CASE("minimal resolvent increases with the truncation and stays below the conservative one") {
    const double lam = 1.0;
    double prev = 0.0;
    for (int K : {10, 20, 30, 40, 50}) {
        auto mini = bd_matrix_resolvent(BDChain::regular_at_infinity(K, Truncation::AbsorbingAtTop), lam,
                                        std::vector<double>(K, 1.0));
        auto full = bd_matrix_resolvent(BDChain::regular_at_infinity(K, Truncation::ReflectingAtTop), lam,
                                        std::vector<double>(K, 1.0));
        CHECK(mini[0] >= prev);
        prev = mini[0];
        for (int k = 0; k < K; ++k) CHECK(mini[k] <= full[k] + 1e-15);
        CHECK(mini[K - 1] < full[K - 1]);
    }
}

TEST_CASE("atomic chain read off a pair") {
    auto P = load_pair(data_file("five_atoms.json")).validate();
    auto ch = atomic_chain(P);
    REQUIRE(ch.size() == 5);
    CHECK(ch.down[0] == 0.0);
    CHECK(ch.up[4] == 0.0);  // r included: reflecting
    CHECK(ch.kill_up == 0.0);
    for (int i = 0; i < 5; ++i) CHECK(ch.holding_rate(i) == doctest::Approx(ch.up[i] + ch.down[i]));
    // detailed balance mass_i up_i = mass_{i+1} down_{i+1}
    for (int i = 0; i + 1 < 5; ++i) CHECK(ch.mass[i] * ch.up[i] == doctest::Approx(ch.mass[i + 1] * ch.down[i + 1]));
    CHECK(ch.index_of(1.5) == 2);
    CHECK_THROWS_AS(ch.index_of(1.25), ValidationError);
    CHECK_THROWS_AS(atomic_chain(load_pair(data_file("natural.json")).validate()), ValidationError);
}

TEST_CASE("normalization calibration") {
    auto cal = calibrate_normalization(calibration_pairs(), {0.5, 1.0, 2.0});
    CHECK(cal.fits.size() == 9);
    CHECK(cal.consistent);
    CHECK(cal.spread <= 1e-6);
    CHECK(cal.c_prob == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(cal.identity_factor == doctest::Approx(cal.c_prob).epsilon(1e-6));
    for (const auto& f : cal.fits) CHECK(f.residual <= 1e-8);
}

TEST_CASE("series pipeline against the oracles") {
    for (double alpha : {0.5, 1.0, 2.0})
        for (double kappa : {0.5, 1.0, 5.0}) {
            auto c = compare_snapping_out(alpha, kappa, 11);
            CHECK(c.pass());
        }
    auto P = load_pair(data_file("five_atoms.json")).validate();
    for (double alpha : {0.5, 2.0}) CHECK(compare_atomic_pair("five_atoms", P, alpha, 2.0).pass());
    // without the calibrated constant the comparison must fail
    CHECK_FALSE(compare_atomic_pair("five_atoms", P, 1.0, 1.0).pass());
}

TEST_CASE("large kappa approaches the continuous kernel") {
    auto P = pair_json(R"({"interval": {"left": "minus_infinity", "r": "inf", "base": 0},
        "measure": {"densities": [["-inf", 0, [1]], [0, "inf", [1]]]}})");
    auto K = Kernel(HarmonicSolution::build(P, 1.0), Regime::Plain);
    for (double x : {-1.0, 0.0, 0.5})
        for (double y : {-0.3, 0.0, 2.0}) {
            double snap = snapping_out_kernel(1.0, 1e8, {x, 0}, {y, 0});
            CHECK(snap == doctest::Approx(K(x, y)).epsilon(1e-6));
        }
}

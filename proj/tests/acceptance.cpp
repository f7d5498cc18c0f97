// Acceptance run: one PASS/FAIL line per criterion.

#include "property_suite.hpp"

#include "quasidiff/boundary.hpp"
#include "quasidiff/kernel.hpp"
#include "quasidiff/oracle.hpp"
#include "quasidiff/simulate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using namespace qd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("%s  [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

// Not a numbered criterion; printed for the record and kept out of the exit status.
void note(bool ok, const char* name, const std::string& detail) {
    std::printf("%s  [-] %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string data_file(const std::string& name) { return std::string(QD_DATA_DIR) + "/" + name; }

void snapping_out() {
    auto t0 = Clock::now();
    double worst = 0.0;
    long points = 0;
    bool ok = true;
    for (double alpha : {0.5, 1.0, 2.0})
        for (double kappa : {0.5, 1.0, 5.0}) {
            auto c = compare_snapping_out(alpha, kappa, 41, 1e-8);
            worst = std::max(worst, c.max_rel);
            points += c.points;
            ok = ok && c.pass();
        }
    double dt = seconds_since(t0);
    report(1, "snapping-out closed form", ok && dt < 10.0,
           fmt("max rel %.3g (tol 1e-8) over %ld values, %.2f s (limit 10 s)", worst, points, dt));
}

// max over f in {1, 1_j}, lambda and states of |R_K - R_{K+10}| / max |R_{K+10}|
double truncation_sensitivity(int K, Truncation mode) {
    auto A = BDChain::regular_at_infinity(K, mode), B = BDChain::regular_at_infinity(K + 10, mode);
    double worst = 0.0;
    for (double lam : {0.5, 1.0, 2.0})
        for (int j = -1; j < K; ++j) {
            std::vector<double> fa(K, j < 0 ? 1.0 : 0.0), fb(K + 10, j < 0 ? 1.0 : 0.0);
            if (j >= 0) fa[j] = fb[j] = 1.0;
            auto ra = bd_matrix_resolvent(A, lam, fa), rb = bd_matrix_resolvent(B, lam, fb);
            double scale = 0.0;
            for (int k = 0; k < K; ++k) scale = std::max(scale, std::fabs(rb[k]));
            for (int k = 0; k < K; ++k) worst = std::max(worst, std::fabs(ra[k] - rb[k]) / scale);
        }
    return worst;
}

void birth_death(double c_prob) {
    auto t0 = Clock::now();
    const int K = 50;
    bool ok = true;
    double worst = 0.0;
    std::string gammas;
    for (auto mode : {Truncation::AbsorbingAtTop, Truncation::ReflectingAtTop}) {
        auto ch = BDChain::regular_at_infinity(K, mode);
        for (double alpha : {0.5, 1.0, 2.0}) {
            auto c = compare_birth_death(ch, alpha, c_prob, 1e-6);
            worst = std::max(worst, c.max_rel);
            ok = ok && c.pass();
        }
    }
    {
        auto S = HarmonicSolution::build(BDChain::regular_at_infinity(K, Truncation::ReflectingAtTop).to_pair().validate(),
                                         1.0);
        double gu = S.gamma_underline(), gb = S.gamma_bar();
        ok = ok && gu < gb;
        gammas = fmt("gamma_ %.12g < gamma^ %.12g", gu, gb);
    }
    double dt = seconds_since(t0);
    report(2, "birth-death kernels (50 states, both truncations)", ok && dt < 5.0,
           fmt("max rel %.3g (tol 1e-6), %s, %.2f s (limit 5 s)", worst, gammas.c_str(), dt));

    double gen = 0.0;
    for (auto mode : {Truncation::AbsorbingAtTop, Truncation::ReflectingAtTop})
        gen = std::max(gen, verify_generator_identity(BDChain::regular_at_infinity(K, mode)));
    note(gen <= 1e-12, "generator identity, 50 states", fmt("max rel residual %.3g (tol 1e-12)", gen));
    for (auto mode : {Truncation::ReflectingAtTop, Truncation::AbsorbingAtTop}) {
        double s = truncation_sensitivity(K, mode);
        note(s < 1e-7, fmt("truncation K -> K+10, %s", to_string(mode)).c_str(),
             fmt("max change %.3g (limit 0.1 x 1e-6)", s));
    }
}

double calibration() {
    auto cal = calibrate_normalization(calibration_pairs(), {0.5, 1.0, 2.0});
    bool ok = cal.fits.size() >= 9 && cal.consistent && cal.spread <= 1e-6 &&
              std::fabs(cal.identity_factor / cal.c_prob - 1.0) <= 1e-6;
    report(3, "normalization calibration", ok,
           fmt("c_prob %.12g from %zu fits, spread %.3g (tol 1e-6), identity factor %.12g", cal.c_prob,
               cal.fits.size(), cal.spread, cal.identity_factor));
    return cal.c_prob;
}

void monte_carlo(double c_prob) {
    auto t0 = Clock::now();
    auto P = load_pair(data_file("five_atoms.json")).validate();
    const double lambda = 1.0, horizon = 30.0;
    auto f = PiecewiseFunction::indicator(0.9, 1.6);
    Kernel K(HarmonicSolution::build(P, lambda), Regime::Plain);
    ResolventTable R(K, f);
    bool ok = true;
    std::string detail;
    std::uint64_t seed = 20;
    for (double x : {1.0, 1.5, 2.0}) {
        double want = c_prob * R(x);
        auto chain = laplace_functional(simulate_paths(P, x, horizon, 100000, seed++, Sampler::Chain), f, lambda);
        auto tc = laplace_functional(simulate_paths(P, x, horizon, 2000, seed++, Sampler::TimeChange), f, lambda);
        double z_chain = std::fabs(chain.value - want) / chain.std_error;
        double z_tc = std::fabs(tc.value - chain.value) / std::hypot(chain.std_error, tc.std_error);
        ok = ok && z_chain <= 3.0 && z_tc <= 3.0;
        detail += fmt("x=%g: chain %.5f vs %.5f (%.2f SE), time change %.5f (%.2f SE); ", x, chain.value, want, z_chain,
                      tc.value, z_tc);
    }
    double dt = seconds_since(t0);
    report(4, "Monte Carlo agreement", ok && dt < 60.0, detail + fmt("%.1f s (limit 60 s)", dt));
}

void property_suite(double c_prob) {
    int passed = 0;
    std::string failed;
    for (int i = 0; i < 50; ++i) {
        auto rp = props::random_pair(i);
        if (props::check_pair(rp, c_prob).passed())
            ++passed;
        else
            failed += " " + rp.label;
    }
    report(5, "property suite", passed == 50,
           fmt("%d/50 randomized pairs pass%s", passed, failed.empty() ? "" : (", failing:" + failed).c_str()));
}

void classification_table() {
    struct Row {
        const char* file;
        BoundaryKind want;
    };
    bool ok = true;
    std::string detail;
    for (Row row : {Row{"natural.json", BoundaryKind::Natural}, Row{"regular_reflecting.json", BoundaryKind::Regular},
                    Row{"exit.json", BoundaryKind::Exit}, Row{"entrance.json", BoundaryKind::Entrance}}) {
        auto got = classify(load_pair(data_file(row.file)).validate()).kind;
        ok = ok && got == row.want;
        detail += fmt("%s %s; ", row.file, to_string(got));
    }
    auto S = snapping_out_pair(1.0).validate();
    auto l = classify_left(S).kind, r = classify(S).kind;
    ok = ok && l == BoundaryKind::Natural && r == BoundaryKind::Natural;
    detail += fmt("snapping-out left %s, right %s", to_string(l), to_string(r));
    report(6, "boundary classification table", ok, detail);
}

}  // namespace

int main() {
    auto t0 = Clock::now();
    snapping_out();
    double c_prob = calibration();
    birth_death(c_prob);
    monte_carlo(c_prob);
    property_suite(c_prob);
    classification_table();
    std::printf("%s: %d criteria failed, %.1f s\n", failures ? "FAIL" : "PASS", failures, seconds_since(t0));
    return failures ? 1 : 0;
}

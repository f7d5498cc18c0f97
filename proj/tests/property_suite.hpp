#pragma once

// Randomized pairs and the invariants checked on each of them; shared by the unit
// tests and the acceptance binary.

#include "quasidiff/boundary.hpp"
#include "quasidiff/config.hpp"
#include "quasidiff/kernel.hpp"
#include "quasidiff/oracle.hpp"
#include "quasidiff/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace qd::props {

struct RandomPair {
    PairConfig config;
    double alpha = 1.0;
    double x0 = 0.0;  // a charged start point
    bool atomic = false;
    bool strict = true;
    std::string label;
};

inline double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

// Pair number `index`: piecewise-affine scale on [0, 4] (or [0, inf)) with random jumps,
// or one flat interval for every fifth pair; random atoms and polynomial densities.
inline RandomPair random_pair(int index) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        std::seed_seq seq{std::uint64_t(index), attempt, std::uint64_t(0x5eed)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        auto unif = [&](double a, double b) { return a + (b - a) * U(rng); };

        RandomPair rp;
        rp.strict = index % 5 != 4;
        const int end_kind = index % 3;  // 0: [0,4], 1: [0,4), 2: [0,inf)
        const double R = 4.0;
        const double r = end_kind == 2 ? kInf : R;

        std::vector<double> knots{0.0, round3(1 + unif(-0.3, 0.3)), round3(2 + unif(-0.3, 0.3)),
                                  round3(3 + unif(-0.3, 0.3)), r};
        std::vector<Segment> segs;
        std::vector<Breakpoint> jumps;
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
            Segment g;
            g.x0 = knots[k];
            g.x1 = knots[k + 1];
            if (k > 0 && rp.strict && U(rng) < 0.4) {
                double jl = s, jr = s + round3(unif(0.2, 1.0));
                double pick = U(rng);
                double jv = pick < 1.0 / 3 ? jl : (pick < 2.0 / 3 ? 0.5 * (jl + jr) : jr);
                jumps.push_back({knots[k], jl, jv, jr});
                s = jr;
            }
            g.value = s;
            g.slope = (!rp.strict && k == 1) ? 0.0 : round3(unif(0.5, 2.0));
            segs.push_back(g);
            if (std::isfinite(g.x1)) s = g.at(g.x1);
        }

        Measure m;
        int natoms = static_cast<int>(U(rng) * 5);
        for (int i = 0; i < natoms; ++i) m.atoms.push_back({round3(unif(0.1, 3.9)), round3(unif(0.2, 1.5))});
        if (!jumps.empty() && U(rng) < 0.5) m.atoms.push_back({jumps.front().x, round3(unif(0.2, 1.5))});
        if (end_kind == 0 && U(rng) < 0.3) m.atoms.push_back({R, round3(unif(0.2, 1.0))});
        if (U(rng) < 0.6 || natoms == 0) {
            double a = round3(unif(0.0, 2.0)), b = round3(unif(a + 0.5, 4.0));
            m.densities.push_back(DensityPiece::poly(a, b, {round3(unif(0.3, 1.5)), round3(unif(0.0, 0.5))}));
        }
        if (end_kind == 2) m.densities.push_back(DensityPiece::poly(R, kInf, {round3(unif(0.5, 1.0))}));
        m.normalize();

        rp.config.scale = ScaleFunction::build(segs, jumps);
        rp.config.measure = m;
        rp.config.spec.left = LeftKind::Reflect;
        rp.config.spec.r = r;
        rp.config.spec.r_included = end_kind == 0;
        rp.alpha = round3(unif(0.3, 3.0));
        rp.atomic = m.densities.empty();
        rp.x0 = !m.atoms.empty() ? m.atoms.front().x : 0.5 * (m.densities.front().x0 + m.densities.front().x1);
        rp.label = "pair " + std::to_string(index);
        try {
            (void)rp.config.validate();
        } catch (const ValidationError&) {
            continue;
        }
        return rp;
    }
}

struct PropertyReport {
    std::string label;
    bool classification_invariant = false;
    double wronskian_drift = 0.0;        // relative
    double monotonicity = 0.0;           // worst violation
    bool gamma_order = false;            // gamma_underline <= gamma_bar, equality iff not Regular
    double kernel_asymmetry = 0.0;       // relative
    double measure_asymmetry = 0.0;      // int (Rf) g dm vs int f (Rg) dm, relative
    double min_positive = 0.0;           // min of R f over samples for f >= 0, relative to max
    double left_derivative = 0.0;        // relative to sup R f
    bool regimes_agree = true;           // strict pairs only
    double split_continuity = 0.0;       // worst one-sided gap across former jumps, relative
    double sub_markov = 0.0;             // max alpha c_prob R 1
    double truncation_change = 0.0;      // u at tol vs tol/10
    bool flats_constant = true;
    long audit_paths = 0, audit_violations = 0;

    bool passed() const {
        return classification_invariant && wronskian_drift <= 1e-9 && monotonicity <= 1e-12 && gamma_order &&
               kernel_asymmetry <= 1e-12 && measure_asymmetry <= 1e-8 && min_positive >= -1e-12 &&
               left_derivative <= 1e-8 && regimes_agree && split_continuity <= 1e-5 && sub_markov <= 1 + 1e-8 &&
               truncation_change <= 1e-10 && flats_constant && audit_violations == 0;
    }
};

inline PiecewiseFunction random_function(std::mt19937_64& rng, bool nonnegative) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<FunctionPiece> pieces;
    for (int i = 0; i < 3; ++i) {
        double a = round3(4 * U(rng)), b = round3(4 * U(rng));
        if (a > b) std::swap(a, b);
        double c = nonnegative ? U(rng) : 2 * U(rng) - 1;
        double d = nonnegative ? 0.0 : U(rng) - 0.5;
        pieces.push_back({a, b, {c, d}});
    }
    return PiecewiseFunction(pieces);
}

inline PropertyReport check_pair(const RandomPair& rp, double c_prob, bool with_paths = true) {
    PropertyReport rep;
    rep.label = rp.label;
    const QuasiPair P = rp.config.validate();
    const double alpha = rp.alpha;
    std::mt19937_64 rng(std::hash<std::string>{}(rp.label));

    // classification of (s, m) against (identity, m-hat)
    {
        PairConfig id;
        id.scale = ScaleFunction::identity(0.0, P.r_hat());
        id.measure = P.image_measure();
        id.spec.r = P.r_hat();
        id.spec.r_included = P.r_included();
        auto a = classify(P), b = classify(id.validate());
        rep.classification_invariant = a.conclusive == b.conclusive && a.kind == b.kind &&
                                       a.refinement == b.refinement && a.instantaneous == b.instantaneous;
    }

    HarmonicOptions opt;
    const HarmonicSolution S = HarmonicSolution::build(P, alpha, opt);
    const BoundaryClass bc = classify(P);
    auto grid = S.grid(2);
    std::vector<double> gpts;
    for (double x : grid)
        if (std::isfinite(x) && x >= S.lo() && x <= std::min(S.hi(), P.s(4.0) + 2.0)) gpts.push_back(x);

    for (double x : gpts) {
        if (std::isfinite(P.r_hat()) && x >= P.r_hat()) continue;
        double w = S.wronskian_at(x);
        if (std::isfinite(w)) rep.wronskian_drift = std::max(rep.wronskian_drift, std::fabs(w / S.wronskian() - 1));
    }
    rep.monotonicity = monotonicity_violation(S);
    {
        double gb = S.gamma_bar(), gu = S.gamma_underline();
        double scale = std::max(1.0, std::fabs(gb));
        rep.gamma_order = bc.regular() ? gu < gb - 64 * std::numeric_limits<double>::epsilon() * scale
                                       : std::fabs(gb - gu) <= 1e-10 * scale;
    }
    {
        HarmonicOptions fine = opt;
        opt.tol = 1e-10;
        fine.tol = 1e-11;
        auto A = HarmonicSolution::build(P, alpha, opt), B = HarmonicSolution::build(P, alpha, fine);
        for (double x : gpts)
            rep.truncation_change = std::max(rep.truncation_change, std::fabs(A.u(x) - B.u(x)) / std::max(1.0, A.u(x)));
    }

    // kernel symmetry in the pair's own state space
    const Kernel K(S, Regime::Plain);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> xs;
    for (int i = 0; i < 12; ++i) xs.push_back(round3(4 * U(rng)));
    for (const auto& a : P.measure().atoms) xs.push_back(a.x);
    for (double x : xs)
        for (double y : xs) {
            double kxy = K(x, y), kyx = K(y, x);
            double scale = std::max(std::fabs(kxy), 1e-300);
            rep.kernel_asymmetry = std::max(rep.kernel_asymmetry, std::fabs(kxy - kyx) / scale);
        }
    if (!P.scale().flats().empty()) {
        const Kernel Kd(S, Regime::Darned);
        const DarnedSpace& D = *Kd.darned();
        for (double x : xs)
            for (double y : xs) {
                double kxy = Kd(D.point(x), D.point(y)), kyx = Kd(D.point(y), D.point(x));
                rep.kernel_asymmetry = std::max(rep.kernel_asymmetry,
                                                std::fabs(kxy - kyx) / std::max(std::fabs(kxy), 1e-300));
            }
        for (const auto& fl : D.flats()) {
            auto fh = [](double y) { return std::sin(3 * y) + y * y; };
            double v0 = pull_back(fh, P, fl.a);
            for (double t : {0.25, 0.5, 0.75, 1.0})
                if (pull_back(fh, P, fl.a + t * (fl.b - fl.a)) != v0) rep.flats_constant = false;
        }
    }

    // resolvent: m-symmetry, positivity, boundary derivative, sub-Markov bound
    {
        auto f = random_function(rng, false), g = random_function(rng, false);
        std::vector<double> br = f.breakpoints();
        auto gb = g.breakpoints();
        br.insert(br.end(), gb.begin(), gb.end());
        MeasureQuadrature Q(S, br);
        ResolventTable Rf(K, f), Rg(K, g);
        double lhs = Q.integrate([&](double x, double yh) { return Rf.at_hat(yh) * g(x); });
        double rhs = Q.integrate([&](double x, double yh) { return f(x) * Rg.at_hat(yh); });
        double mag = Q.integrate([&](double x, double yh) { return std::fabs(Rf.at_hat(yh) * g(x)); }) +
                     Q.integrate([&](double x, double yh) { return std::fabs(f(x) * Rg.at_hat(yh)); });
        rep.measure_asymmetry = mag > 0 ? std::fabs(lhs - rhs) / mag : 0.0;

        auto h = random_function(rng, true);
        ResolventTable Rh(K, h);
        double lo = 0.0, hi = 0.0;
        for (double x : gpts) {
            double v = Rh.at_hat(x);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        rep.min_positive = hi > 0 ? lo / hi : lo;
        auto bcc = boundary_condition_check(K, h);
        rep.left_derivative = std::fabs(bcc.left) / std::max(hi, 1e-300);

        ResolventTable R1(K, PiecewiseFunction::constant(1.0));
        for (double x : gpts) rep.sub_markov = std::max(rep.sub_markov, alpha * c_prob * R1.at_hat(x));
    }

    // regime agreement on F-dot x F-dot and continuity of the split kernel
    if (rp.strict) {
        const Kernel Km(S, Regime::Modified), Kr(S, Regime::Restricted), Ks(S, Regime::Split);
        const Supports& sp = *Km.supports_info();
        std::vector<double> fd;
        for (double x : xs)
            if (sp.in_F_dot(x)) fd.push_back(x);
        for (double x : fd)
            for (double y : fd) {
                double a = Kr(x, y), b = Km(x, y), c = Ks(StarPoint{x, 0}, StarPoint{y, 0});
                if (!(a == b && b == c)) rep.regimes_agree = false;
            }
        double kmax = 0.0;
        for (double x : xs)
            for (double y : xs) kmax = std::max(kmax, std::fabs(K(x, y)));
        const double delta = 1e-7;
        for (const auto& j : P.scale().jumps()) {
            for (double y : xs) {
                double left = Ks(StarPoint{j.x - delta, 0}, StarPoint{y, 0});
                double right = Ks(StarPoint{j.x + delta, 0}, StarPoint{y, 0});
                double at_l = Ks(StarPoint{j.x, -1}, StarPoint{y, 0});
                double at_r = Ks(StarPoint{j.x, 1}, StarPoint{y, 0});
                rep.split_continuity = std::max(
                    {rep.split_continuity, std::fabs(left - at_l) / kmax, std::fabs(right - at_r) / kmax});
            }
        }
    }

    // skip-free audit
    if (with_paths) {
        std::vector<PathSample> paths;
        double resolution = 0.0;
        if (rp.atomic) {
            paths = simulate_paths(P, rp.x0, 20.0, 20, 7, Sampler::Chain);
        } else {
            TimeChangeOptions to;
            resolution = 8.0 * std::sqrt(to.dt);
            paths = simulate_paths(P, rp.x0, 0.5, 4, 7, Sampler::TimeChange, to);
        }
        auto audit = path_property_audit(paths, P, resolution);
        rep.audit_paths = audit.paths;
        rep.audit_violations = audit.violations;
    }
    return rep;
}

}  // namespace qd::props

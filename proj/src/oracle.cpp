#include "quasidiff/oracle.hpp"

#include <algorithm>

namespace qd {

namespace {

bool negative_copy(const StarPoint& p) { return p.x < 0 || (p.x == 0 && p.side < 0); }

// Order on the two-origin line: 0- sits just below 0.
bool star_le(const StarPoint& a, const StarPoint& b) {
    if (a.x != b.x) return a.x < b.x;
    return negative_copy(a) || !negative_copy(b);
}

}  // namespace

double snapping_out_u(double alpha, double x) { return std::cosh(std::sqrt(2.0 * alpha) * x); }

double snapping_out_u_plus(double alpha, double kappa, const StarPoint& x) {
    double c = std::sqrt(2.0 * alpha);
    double v = std::exp(-c * x.x) / c;
    if (negative_copy(x)) v += (std::exp(c * x.x) + std::exp(-c * x.x)) / kappa;
    return v;
}

double snapping_out_u_minus(double alpha, double kappa, const StarPoint& x) {
    double c = std::sqrt(2.0 * alpha);
    double v = std::exp(c * x.x) / c;
    if (!negative_copy(x)) v += (std::exp(c * x.x) + std::exp(-c * x.x)) / kappa;
    return v;
}

double snapping_out_kernel(double alpha, double kappa, const StarPoint& x, const StarPoint& y) {
    const StarPoint& lo = star_le(x, y) ? x : y;
    const StarPoint& hi = star_le(x, y) ? y : x;
    double pref = 1.0 / (2.0 / std::sqrt(2.0 * alpha) + 2.0 / kappa);
    return pref * snapping_out_u_minus(alpha, kappa, lo) * snapping_out_u_plus(alpha, kappa, hi);
}

PairConfig snapping_out_pair(double kappa) {
    if (!(kappa > 0)) throw ValidationError("kappa must be positive");
    PairConfig cfg;
    cfg.spec.left = LeftKind::MinusInfinity;
    cfg.spec.r = kInf;
    cfg.spec.base = 0.0;
    cfg.scale = ScaleFunction::build({{-kInf, 0.0, 0.0, 1.0}, {0.0, kInf, 2.0 / kappa, 1.0}},
                                     {{0.0, 0.0, 2.0 / kappa, 2.0 / kappa}});
    cfg.measure.densities.push_back(DensityPiece::poly(-kInf, kInf, {1.0}));
    return cfg;
}

const char* to_string(Truncation t) { return t == Truncation::AbsorbingAtTop ? "absorbing" : "reflecting"; }

std::vector<double> BDChain::mu() const {
    std::vector<double> m(b.size());
    if (m.empty()) return m;
    m[0] = 1.0;
    for (std::size_t k = 1; k < m.size(); ++k) m[k] = m[k - 1] * b[k - 1] / a[k];
    return m;
}

std::vector<double> BDChain::scale() const {
    auto m = mu();
    std::vector<double> s(b.size() + 1, 0.0);
    for (std::size_t k = 0; k < b.size(); ++k) s[k + 1] = s[k] + 1.0 / (2.0 * m[k] * b[k]);
    return s;
}

PairConfig BDChain::to_pair() const {
    const int K = size();
    if (K < 1) throw ValidationError("birth-death chain needs at least one state");
    auto m = mu();
    auto s = scale();
    PairConfig cfg;
    cfg.spec.left = LeftKind::BirthDeathAtom;
    cfg.spec.r = K;
    cfg.spec.r_included = mode == Truncation::ReflectingAtTop;
    cfg.spec.base = 0.5;
    std::vector<Segment> segs;
    for (int k = 0; k < K; ++k) {
        segs.push_back({double(k), double(k + 1), s[k], 1.0 / (2.0 * m[k] * b[k])});
        cfg.measure.atoms.push_back({double(k), m[k]});
    }
    cfg.scale = ScaleFunction::build(segs, {});
    return cfg;
}

BDChain BDChain::regular_at_infinity(int K, Truncation mode, double rho) {
    std::vector<double> a(K, 0.0), b(K);
    for (int k = 0; k < K; ++k) {
        double mu = std::pow(2.0, -k);
        b[k] = std::pow(rho, k) / mu;
        if (k >= 1) a[k] = b[k - 1] * std::pow(2.0, -(k - 1)) / mu;
    }
    return from_rates(std::move(a), std::move(b), mode);
}

BDChain BDChain::from_rates(std::vector<double> a, std::vector<double> b, Truncation mode) {
    if (a.size() != b.size()) throw ValidationError("birth-death rates: a and b differ in length");
    for (std::size_t k = 0; k < b.size(); ++k) {
        if (!(b[k] > 0)) throw ValidationError("birth-death rates: b_k must be positive");
        if (k >= 1 && !(a[k] > 0)) throw ValidationError("birth-death rates: a_k must be positive");
    }
    BDChain c;
    c.a = std::move(a);
    c.b = std::move(b);
    c.mode = mode;
    return c;
}

int AtomicChain::index_of(double xx) const {
    for (int i = 0; i < size(); ++i)
        if (same_value(x[i], xx)) return i;
    throw ValidationError("point " + format_real(xx) + " is not a state of the chain");
}

AtomicChain atomic_chain(const QuasiPair& pair) {
    const Measure& mh = pair.image_measure();
    if (!mh.densities.empty() || mh.has_infinite_families())
        throw ValidationError("chain sampler needs a purely atomic measure with finitely many atoms");
    AtomicChain ch;
    auto atoms = mh.all_atoms();
    std::sort(atoms.begin(), atoms.end(), [](const Atom& p, const Atom& q) { return p.x < q.x; });
    for (const auto& a : atoms) {
        if (!(a.mass > 0)) continue;
        ch.yh.push_back(a.x);
        ch.mass.push_back(a.mass);
        ch.x.push_back(merge_point(pair, a.x));
    }
    const int n = ch.size();
    if (n == 0) throw ValidationError("chain sampler needs at least one atom");
    ch.up.assign(n, 0.0);
    ch.down.assign(n, 0.0);
    const auto& sc = pair.scale();
    // within one affine segment the slope gives the increment without cancellation
    auto increment = [&](double a, double b, double ya, double yb) {
        const Breakpoint* pa = sc.breakpoint_at(a);
        const Breakpoint* pb = sc.breakpoint_at(b);
        if (std::isfinite(a) && std::isfinite(b) && a < sc.right_end() && !(pa && pa->jump()) &&
            !(pb && pb->jump())) {
            const Segment& seg = sc.segments()[sc.segment_index(a)];
            if (!seg.flat() && b <= seg.x1) return seg.slope * (b - a);
        }
        return yb - ya;
    };
    for (int i = 0; i + 1 < n; ++i) {
        double h = increment(ch.x[i], ch.x[i + 1], ch.yh[i], ch.yh[i + 1]);
        ch.up[i] = 1.0 / (2.0 * ch.mass[i] * h);
        ch.down[i + 1] = 1.0 / (2.0 * ch.mass[i + 1] * h);
    }
    const double rh = pair.r_hat();
    if (std::isfinite(rh) && !same_value(ch.yh[n - 1], rh) && !pair.image_set().contains(rh)) {
        ch.kill_up = 1.0 / (2.0 * ch.mass[n - 1] * increment(ch.x[n - 1], pair.r(), ch.yh[n - 1], rh));
        ch.up[n - 1] = ch.kill_up;
    }
    return ch;
}

std::vector<double> tridiagonal_resolvent(const std::vector<double>& down, const std::vector<double>& up,
                                          double lambda, const std::vector<double>& f) {
    if (!(lambda > 0)) throw ValidationError("resolvent parameter must be positive");
    const std::size_t n = f.size();
    std::vector<double> c(n), d(n);
    double prev_c = 0.0, prev_d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double lo = i > 0 ? -down[i] : 0.0;
        double diag = lambda + down[i] + up[i];
        double hi = i + 1 < n ? -up[i] : 0.0;
        double den = diag - lo * prev_c;
        if (!(std::fabs(den) > 0)) throw Error("tridiagonal resolvent: singular system");
        c[i] = hi / den;
        d[i] = (f[i] - lo * prev_d) / den;
        prev_c = c[i];
        prev_d = d[i];
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) x[i] = d[i] - (i + 1 < n ? c[i] * x[i + 1] : 0.0);
    return x;
}

std::vector<double> chain_resolvent(const AtomicChain& ch, double lambda, const std::vector<double>& f) {
    return tridiagonal_resolvent(ch.down, ch.up, lambda, f);
}

std::vector<double> bd_matrix_resolvent(const BDChain& chain, double lambda, const std::vector<double>& f) {
    const int K = chain.size();
    if (static_cast<int>(f.size()) != K) throw ValidationError("f must have one value per state");
    std::vector<double> down(K, 0.0), up(K, 0.0);
    for (int k = 0; k < K; ++k) {
        if (k >= 1) down[k] = chain.a[k];
        up[k] = chain.b[k];
    }
    if (chain.mode == Truncation::ReflectingAtTop) up[K - 1] = 0.0;
    return tridiagonal_resolvent(down, up, lambda, f);
}

double verify_generator_identity(const BDChain& chain) {
    const QuasiPair P = chain.to_pair().validate();
    const AtomicChain ch = atomic_chain(P);
    const int K = chain.size();
    if (ch.size() != K) throw Error("generator identity: state count mismatch");
    double worst = 0.0;
    for (int k = 0; k < K; ++k) {
        double a = k >= 1 ? chain.a[k] : 0.0;
        double b = (k + 1 < K || chain.mode == Truncation::AbsorbingAtTop) ? chain.b[k] : 0.0;
        double q = a + b;
        double r = std::fabs(ch.down[k] - a) + std::fabs(ch.up[k] - b);
        worst = std::max(worst, q > 0 ? r / q : r);
    }
    return worst;
}

std::vector<double> series_resolvent_on_states(const Kernel& K, const AtomicChain& ch, const std::vector<double>& f) {
    const int n = ch.size();
    std::vector<double> out(n);
    std::vector<double> terms(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) terms[j] = K.eval_hat(ch.yh[i], ch.yh[j]) * f[j] * ch.mass[j];
        out[i] = pairwise_sum(terms);
    }
    return out;
}

std::vector<NamedPair> calibration_pairs() {
    std::vector<NamedPair> out;
    out.push_back({"birth_death_20", BDChain::regular_at_infinity(20, Truncation::ReflectingAtTop).to_pair()});
    out.push_back({"three_atoms_jump", parse_pair(nlohmann::json::parse(R"({
        "interval": {"left": "reflect", "r": 3, "r_included": false},
        "scale": {"segments": [[0, 1.5, "affine", [0, 1]], [1.5, 3, "affine", [2, 2]]],
                  "jumps": [[1.5, 1.5, 1.75, 2]]},
        "measure": {"atoms": [[0.5, 1.0], [1.5, 0.5], [2.5, 2.0]]}})"))});
    out.push_back({"five_atoms_sticky", parse_pair(nlohmann::json::parse(R"({
        "interval": {"left": "reflect", "r": 3, "r_included": true},
        "scale": {"segments": [[0, 1.5, "affine", [0, 1]], [1.5, 3, "affine", [2, 1]]],
                  "jumps": [[1.5, 1.5, 1.75, 2]]},
        "measure": {"atoms": [[0.5, 0.5], [1, 1.0], [1.5, 0.7], [2, 1.2], [3, 0.8]]}})"))});
    return out;
}

Calibration calibrate_normalization(const std::vector<NamedPair>& pairs, const std::vector<double>& alphas,
                                    const HarmonicOptions& opt) {
    if (pairs.size() < 1 || alphas.empty()) throw ValidationError("calibration needs pairs and alpha values");
    Calibration cal;
    double cmin = kInf, cmax = -kInf;
    std::vector<double> cs;
    for (const auto& np : pairs) {
        const QuasiPair P = np.config.validate();
        const AtomicChain ch = atomic_chain(P);
        const int n = ch.size();
        for (double alpha : alphas) {
            Kernel K(HarmonicSolution::build(P, alpha, opt), Regime::Plain, 1.0);
            std::vector<std::vector<double>> fs;
            fs.push_back(std::vector<double>(n, 1.0));
            for (int j = 0; j < n; ++j) {
                std::vector<double> e(n, 0.0);
                e[j] = 1.0;
                fs.push_back(e);
            }
            double sm = 0.0, ss = 0.0;
            std::vector<std::pair<std::vector<double>, std::vector<double>>> samples;
            for (const auto& f : fs) {
                auto s = series_resolvent_on_states(K, ch, f);
                auto m = chain_resolvent(ch, alpha, f);
                for (int i = 0; i < n; ++i) {
                    sm += s[i] * m[i];
                    ss += s[i] * s[i];
                }
                samples.emplace_back(std::move(s), std::move(m));
            }
            CalibrationFit fit;
            fit.pair = np.name;
            fit.alpha = alpha;
            fit.c = sm / ss;
            double worst = 0.0;
            for (const auto& [s, m] : samples)
                for (int i = 0; i < n; ++i) {
                    worst = std::max(worst, std::fabs(m[i] - fit.c * s[i]) / std::fabs(m[i]));
                    ++fit.samples;
                }
            fit.residual = worst;
            cmin = std::min(cmin, fit.c);
            cmax = std::max(cmax, fit.c);
            cs.push_back(fit.c);
            cal.fits.push_back(fit);
        }
    }
    cal.c_prob = pairwise_sum(cs) / static_cast<double>(cs.size());
    cal.spread = cmax - cmin;
    cal.consistent = cal.spread <= 1e-6;

    const QuasiPair P = pairs.front().config.validate();
    const AtomicChain ch = atomic_chain(P);
    double a = alphas.front(), b = alphas.size() > 1 ? alphas[1] : 2.0 * a;
    Kernel Ka(HarmonicSolution::build(P, a, opt), Regime::Plain, 1.0);
    Kernel Kb(HarmonicSolution::build(P, b, opt), Regime::Plain, 1.0);
    cal.identity_factor = resolvent_identity_check(Ka, Kb, PiecewiseFunction::constant(1.0), ch.yh).factor;
    return cal;
}

}  // namespace qd

namespace qd {

namespace {

double rel_err(double got, double want) {
    double d = std::fabs(got - want);
    return want != 0.0 ? d / std::fabs(want) : d;
}

Comparison compare_chain(const std::string& name, const QuasiPair& P, const AtomicChain& ch, double alpha, double c,
                         double tol, const HarmonicOptions& opt,
                         const std::function<std::vector<double>(const std::vector<double>&)>& matrix) {
    Comparison out;
    out.name = name;
    out.alpha = alpha;
    out.tol = tol;
    Kernel K(HarmonicSolution::build(P, alpha, opt), Regime::Plain, c);
    const int n = ch.size();
    std::vector<std::vector<double>> fs{std::vector<double>(n, 1.0)};
    for (int j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        fs.push_back(e);
    }
    for (const auto& f : fs) {
        auto s = series_resolvent_on_states(K, ch, f);
        auto m = matrix(f);
        for (int i = 0; i < n; ++i) {
            out.max_rel = std::max(out.max_rel, rel_err(s[i], m[i]));
            ++out.points;
        }
    }
    return out;
}

}  // namespace

Comparison compare_snapping_out(double alpha, double kappa, int n, double tol, const HarmonicOptions& opt) {
    Comparison out;
    out.name = "snapping_out kappa=" + format_real(kappa);
    out.alpha = alpha;
    out.tol = tol;
    const QuasiPair P = snapping_out_pair(kappa).validate();
    Kernel K(HarmonicSolution::build(P, alpha, opt), Regime::Split, 1.0);
    const HarmonicSolution& S = K.solution();
    std::vector<StarPoint> pts;
    for (int i = 0; i < n; ++i) {
        double x = -2.0 + 4.0 * i / (n - 1);
        if (std::fabs(x) < 1e-12) {
            pts.push_back({0.0, -1});
            pts.push_back({0.0, 0});
        } else {
            pts.push_back({x, 0});
        }
    }
    for (const auto& p : pts) {
        double yh = K.map(p);
        out.max_rel = std::max(out.max_rel, rel_err(S.u(yh), snapping_out_u(alpha, p.x)));
        out.max_rel = std::max(out.max_rel, rel_err(S.u_plus(yh), snapping_out_u_plus(alpha, kappa, p)));
        out.max_rel = std::max(out.max_rel, rel_err(S.u_minus(yh), snapping_out_u_minus(alpha, kappa, p)));
        for (const auto& q : pts) {
            out.max_rel = std::max(out.max_rel, rel_err(K(p, q), snapping_out_kernel(alpha, kappa, p, q)));
            ++out.points;
        }
    }
    return out;
}

Comparison compare_birth_death(const BDChain& chain, double alpha, double c, double tol, const HarmonicOptions& opt) {
    const QuasiPair P = chain.to_pair().validate();
    const AtomicChain ch = atomic_chain(P);
    std::string name = "birth_death K=" + std::to_string(chain.size()) + " " + to_string(chain.mode);
    return compare_chain(name, P, ch, alpha, c, tol, opt,
                         [&](const std::vector<double>& f) { return bd_matrix_resolvent(chain, alpha, f); });
}

Comparison compare_atomic_pair(const std::string& name, const QuasiPair& pair, double alpha, double c, double tol,
                               const HarmonicOptions& opt) {
    const AtomicChain ch = atomic_chain(pair);
    return compare_chain(name, pair, ch, alpha, c, tol, opt,
                         [&](const std::vector<double>& f) { return chain_resolvent(ch, alpha, f); });
}

}  // namespace qd

#include "quasidiff/harmonic.hpp"

#include <algorithm>
#include <sstream>

namespace qd {

const char* to_string(GammaChoice g) {
    switch (g) {
        case GammaChoice::Auto: return "auto";
        case GammaChoice::Bar: return "bar";
        case GammaChoice::Underline: return "underline";
    }
    return "?";
}

namespace {

constexpr double kGrowthStop = 1e16;
constexpr double kTailRel = 1e-17;
constexpr std::size_t kMaxCells = 2000000;

// Outward problem on one side of the base point, in t = |x - e|.
struct SideProblem {
    int dir = 1;
    double e = 0.0;
    double T = 0.0;
    bool end_singular = false;
    const Measure* m = nullptr;
    std::vector<Atom> atoms;
    std::vector<double> pivots;
    std::vector<double> breaks;

    double x_of(double t) const { return e + dir * t; }
    double w(double t) const { return m->density(x_of(t)); }
    double moment(double a, double b, double ct, int k) const {
        double xa = dir > 0 ? x_of(a) : x_of(b);
        double xb = dir > 0 ? x_of(b) : x_of(a);
        if (std::isinf(b)) (dir > 0 ? xb : xa) = dir * kInf;
        double c = x_of(ct);
        double s = 0.0;
        for (const auto& d : m->densities) s += d.moment(xa, xb, c, k);
        return s;
    }
    double sigma(double a, double b) const { return moment(a, b, b, 1); }
    double mass(double a, double b) const { return moment(a, b, a, 0); }
    double atom_at(double t) const {
        for (const auto& a : atoms)
            if (same_value(a.x, t)) return a.mass;
        return 0.0;
    }
    double pivot_distance(double a, double b) const {
        double d = kInf;
        for (double p : pivots) {
            if (p <= a) d = std::min(d, a - p);
            else if (p >= b) d = std::min(d, p - b);
            else return 0.0;
        }
        return d;
    }
};

double gauss_inv_sq(const std::vector<double>& cf, double t0, double t1, double a, double b) {
    if (!(a < b)) return 0.0;
    std::vector<double> gx, gw;
    gauss_rule(a, b, gx, gw);
    double s = 0.0;
    for (std::size_t i = 0; i < gx.size(); ++i) {
        double tau = (2.0 * gx[i] - t0 - t1) / (t1 - t0);
        double f = ChebBasis::eval(cf, tau);
        s += gw[i] / (f * f);
    }
    return s;
}

SweepCell affine_cell(double a, double b, double A, double B) {
    SweepCell c;
    c.t0 = a;
    c.t1 = b;
    c.A = A;
    c.B = B;
    if (std::isinf(b)) {
        c.f1 = kInf;
        c.df1 = B;
        c.integral = 1.0 / (B * A);
    } else {
        c.f1 = A + B * (b - a);
        c.df1 = B;
        c.integral = (b - a) / (A * c.f1);
    }
    return c;
}

SweepCell cheb_cell(const SideProblem& P, double a, double b, double A, double B, double alpha,
                    const HarmonicOptions& opt) {
    const ChebBasis& cb = cheb_basis();
    const int n = cb.size();
    const double h = b - a, half = 0.5 * h;
    std::vector<double> t(n), w(n), sf(n), sd(n, B), cur(n), g(n);
    for (int j = 0; j < n; ++j) {
        t[j] = a + (cb.nodes()[j] + 1.0) * half;
        w[j] = P.w(t[j]);
        cur[j] = A + B * (t[j] - a);
        sf[j] = cur[j];
    }
    const double M = std::max(std::fabs(A), std::fabs(A + B * h));
    const double th = 2.0 * alpha * P.sigma(a, b);
    const double ms = P.mass(a, b);
    const double eth = std::exp(th);
    const double dscale = B + 2.0 * alpha * ms * A;
    double pf = th;   // th^n / n! for the current n
    int terms = 0;
    bool done = false;
    for (int k = 1; k <= opt.max_terms; ++k) {
        for (int j = 0; j < n; ++j) g[j] = w[j] * cur[j];
        auto d = cb.cumulative(g);
        for (auto& x : d) x *= 2.0 * alpha * half;
        auto f = cb.cumulative(d);
        for (int j = 0; j < n; ++j) {
            f[j] *= half;
            sf[j] += f[j];
            sd[j] += d[j];
        }
        cur = std::move(f);
        terms = k;
        // remainder bounds after k terms
        double bf = M * pf * th / (k + 1) * eth;
        double bd = 2.0 * alpha * ms * M * pf * eth;
        if (bf <= opt.tol * A && bd <= opt.tol * dscale) {
            done = true;
            break;
        }
        pf *= th / (k + 1);
    }
    if (!done) {
        std::ostringstream os;
        os << "cell series did not reach the remainder bound within " << opt.max_terms << " terms";
        throw Error(os.str());
    }
    SweepCell c;
    c.t0 = a;
    c.t1 = b;
    c.cheb = true;
    c.A = A;
    c.B = B;
    c.cf = cb.coeffs(sf);
    c.cdf = cb.coeffs(sd);
    c.f1 = ChebBasis::eval(c.cf, 1.0);
    c.df1 = ChebBasis::eval(c.cdf, 1.0);
    c.integral = gauss_inv_sq(c.cf, a, b, a, b);
    c.terms = terms;
    return c;
}

// Lumped cell across a tiny sliver next to a singular point.
SweepCell lumped_cell(const SideProblem& P, double a, double b, double A, double B, double alpha) {
    SweepCell c = affine_cell(a, b, A, B);
    double sg = P.sigma(a, b), ms = P.mass(a, b);
    c.f1 = A + B * (b - a) + 2.0 * alpha * A * sg;
    c.df1 = B + 2.0 * alpha * A * ms;
    return c;
}

Sweep run_sweep(const SideProblem& P, double alpha, const HarmonicOptions& opt, double other_total) {
    Sweep S;
    S.dir = P.dir;
    S.T = P.T;
    S.reach = P.T;
    if (P.T == 0.0) return S;

    double f = 1.0, df = 0.0, near = 0.0, mass_so_far = 0.0;
    const double xscale = std::max({1.0, std::fabs(P.e), std::isfinite(P.T) ? P.T : 0.0});
    auto push = [&](SweepCell c) {
        c.near0 = near;
        near += c.integral;
        f = c.f1;
        df = c.df1;
        S.cells.push_back(std::move(c));
        if (S.cells.size() > kMaxCells) throw Error("sweep exceeded the cell budget");
    };

    std::vector<double> pts = P.breaks;
    bool cut = false;
    for (std::size_t i = 0; i + 1 < pts.size() && !cut; ++i) {
        const double a = pts[i], b = pts[i + 1];
        const bool last = i + 2 == pts.size();
        if (a > 0) {
            double ma = P.atom_at(a);
            df += 2.0 * alpha * ma * f;
            mass_so_far += ma;
        }
        double mab = P.mass(a, b);
        if (mab == 0.0) {
            if (std::isinf(b) && df <= 0.0)
                throw Error("the integral of u^-2 diverges toward an unbounded end without mass");
            push(affine_cell(a, b, f, df));
            continue;
        }
        const bool singular_end = last && (std::isinf(b) || P.end_singular);
        double cur = a;
        double hprev = std::isinf(b) ? 1.0 : b - a;
        bool first = true;
        while (cur < b) {
            // stopping rules near a singular or unbounded end
            if (singular_end) {
                if (f >= kGrowthStop && df > 0 && f * df >= 1.0 / (kTailRel * (other_total + near))) {
                    S.reach = cur;
                    S.tail_bound = 1.0 / (f * df);
                    cut = true;
                    break;
                }
                if (std::isfinite(b)) {
                    double rest = P.mass(cur, b);
                    if (b - cur <= 1e-14 * xscale || (mass_so_far > 0 && rest <= 1e-15 * mass_so_far)) {
                        push(lumped_cell(P, cur, b, f, df, alpha));
                        cur = b;
                        break;
                    }
                }
            }
            double h = std::isinf(b) ? 2.0 * hprev : (first ? b - cur : std::min(b - cur, 2.0 * hprev));
            if (!std::isinf(b)) h = std::min(h, b - cur);
            bool lumped = false;
            for (;;) {
                double e = cur + h;
                if (!(e > cur)) throw Error("sweep cell width underflow");
                bool at_end = !std::isinf(b) && e >= b;
                if (at_end) e = b;
                double dist = P.pivot_distance(cur, e);
                double th = 2.0 * alpha * P.sigma(cur, e);
                if (dist == 0.0) {
                    double ms = P.mass(cur, e);
                    if (std::isfinite(ms) && 2.0 * alpha * ms * (e - cur) <= 0.1 * opt.tol) {
                        lumped = true;
                        h = e - cur;
                        break;
                    }
                } else if (th <= opt.theta && (e - cur) <= dist) {
                    h = e - cur;
                    break;
                }
                h *= 0.5;
            }
            double e = cur + h;
            if (!std::isinf(b) && (e >= b || same_value(e, b))) e = b;
            double mce = P.mass(cur, e);
            if (lumped)
                push(lumped_cell(P, cur, e, f, df, alpha));
            else if (mce == 0.0)
                push(affine_cell(cur, e, f, df));
            else
                push(cheb_cell(P, cur, e, f, df, alpha, opt));
            mass_so_far += mce;
            hprev = e - cur;
            cur = e;
            first = false;
        }
    }
    // far integrals from the end inwards
    double far = 0.0;
    for (std::size_t i = S.cells.size(); i-- > 0;) {
        S.cells[i].far1 = far;
        far += S.cells[i].integral;
    }
    S.total = near;
    for (const auto& c : S.cells) S.max_terms = std::max(S.max_terms, c.terms);
    return S;
}

SideProblem make_side(const QuasiPair& pair, const std::vector<Atom>& atoms, int dir) {
    SideProblem P;
    P.dir = dir;
    P.e = pair.base_hat();
    P.m = &pair.image_measure();
    const double end = dir > 0 ? pair.r_hat() : pair.l_hat();
    P.T = std::isinf(end) ? kInf : std::fabs(end - P.e);
    if (P.T == 0.0) return P;
    auto t_of = [&](double x) { return dir * (x - P.e); };
    for (const auto& a : atoms) {
        double t = t_of(a.x);
        if (t <= 0 || same_value(a.x, P.e)) continue;
        if (std::isfinite(P.T) && (t >= P.T || same_value(a.x, end))) continue;
        P.atoms.push_back({t, a.mass});
    }
    P.breaks.push_back(0.0);
    for (const auto& a : P.atoms) P.breaks.push_back(a.x);
    for (const auto& d : P.m->densities) {
        for (double x : {d.x0, d.x1}) {
            if (std::isinf(x)) continue;
            double t = t_of(x);
            if (t > 0 && t < P.T) P.breaks.push_back(t);
        }
        double w;
        if (d.singular(w)) {
            double t = t_of(w);
            if (t >= 0 && t <= P.T) P.pivots.push_back(t);
            if (t > 0 && t < P.T) P.breaks.push_back(t);
            if (std::isfinite(P.T) && same_value(w, end)) P.end_singular = true;
        }
    }
    P.breaks.push_back(P.T);
    std::sort(P.breaks.begin(), P.breaks.end());
    std::vector<double> u;
    for (double t : P.breaks)
        if (u.empty() || !(t == u.back() || (std::isfinite(t) && same_value(t + P.e, u.back() + P.e)))) u.push_back(t);
    u.back() = P.T;
    P.breaks = std::move(u);
    std::sort(P.pivots.begin(), P.pivots.end());
    return P;
}

}  // namespace

std::size_t Sweep::locate(double t) const {
    if (cells.empty() || t < 0 || t > reach) {
        std::ostringstream os;
        os << "point at distance " << format_real(t) << " from the base lies outside the computed range";
        throw ValidationError(os.str());
    }
    auto it = std::upper_bound(cells.begin(), cells.end(), t, [](double v, const SweepCell& c) { return v < c.t0; });
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - cells.begin()) - 1));
}

double Sweep::f(double t) const {
    if (cells.empty() && t == 0.0) return 1.0;
    const auto& c = cells[locate(t)];
    if (t >= c.t1) return c.f1;
    if (c.cheb) return ChebBasis::eval(c.cf, (2.0 * t - c.t0 - c.t1) / (c.t1 - c.t0));
    return c.A + c.B * (t - c.t0);
}

double Sweep::df_plus(double t) const {
    if (cells.empty() && t == 0.0) return 0.0;
    const auto& c = cells[locate(t)];
    if (t >= c.t1) return c.df1;
    if (t == c.t0) return c.B;
    if (c.cheb) return ChebBasis::eval(c.cdf, (2.0 * t - c.t0 - c.t1) / (c.t1 - c.t0));
    return c.B;
}

double Sweep::df_minus(double t) const {
    if (t == 0.0) return 0.0;
    std::size_t i = locate(t);
    const auto& c = cells[i];
    if (t == c.t0 && i > 0) return cells[i - 1].df1;
    if (t >= c.t1) return c.df1;
    if (c.cheb) return ChebBasis::eval(c.cdf, (2.0 * t - c.t0 - c.t1) / (c.t1 - c.t0));
    return c.B;
}

double Sweep::near(double t) const {
    if (cells.empty() && t == 0.0) return 0.0;
    const auto& c = cells[locate(t)];
    if (t >= c.t1) return c.near0 + c.integral;
    if (c.cheb) return c.near0 + gauss_inv_sq(c.cf, c.t0, c.t1, c.t0, t);
    return c.near0 + (t - c.t0) / (c.A * (c.A + c.B * (t - c.t0)));
}

double Sweep::far(double t) const {
    if (cells.empty() && t == 0.0) return 0.0;
    const auto& c = cells[locate(t)];
    if (t >= c.t1) return c.far1;
    if (c.cheb) return c.far1 + gauss_inv_sq(c.cf, c.t0, c.t1, t, c.t1);
    double ft = c.A + c.B * (t - c.t0);
    if (std::isinf(c.t1)) return 1.0 / (c.B * ft);
    return c.far1 + (c.t1 - t) / (ft * (c.A + c.B * (c.t1 - c.t0)));
}

HarmonicSolution HarmonicSolution::build(const QuasiPair& pair, double alpha, const HarmonicOptions& opt) {
    if (!(alpha > 0)) throw ValidationError("alpha must be positive");
    if (!(opt.tol > 0)) throw ValidationError("tol must be positive");
    HarmonicSolution s;
    s.pair_ = std::make_shared<const QuasiPair>(pair);
    const QuasiPair& P = *s.pair_;
    s.alpha_ = alpha;
    s.choice_ = opt.gamma;
    s.left_ = P.interval().left;
    s.e_ = P.base_hat();
    s.l_hat_ = P.l_hat();
    s.r_hat_ = P.r_hat();
    s.mu0_ = P.mu0();
    s.m_r_ = P.r_included() ? P.image_measure().atom_at(P.r_hat()) : 0.0;

    s.bc_ = classify(P);
    if (!s.bc_.conclusive) throw InconclusiveError("boundary verdict at r is inconclusive: " + s.bc_.note);
    if (s.left_ == LeftKind::MinusInfinity) {
        s.left_bc_ = classify_left(P);
        if (!s.left_bc_->conclusive) throw InconclusiveError("boundary verdict at -inf is inconclusive");
    }
    if (P.image_measure().has_infinite_families())
        throw ValidationError("harmonic solutions need finitely many atoms; the pair has an infinite atom family");
    std::vector<Atom> all = P.image_measure().all_atoms();
    for (const auto& a : all) {
        if (same_value(a.x, s.l_hat_) || (std::isfinite(s.r_hat_) && same_value(a.x, s.r_hat_))) continue;
        s.atoms_.push_back(a);
    }

    SideProblem R = make_side(P, all, +1);
    SideProblem Lp = make_side(P, all, -1);
    // the left side first when it is bounded, so that the right tail rule sees its total
    Sweep left = run_sweep(Lp, alpha, opt, 0.0);
    Sweep right = run_sweep(R, alpha, opt, left.total);
    if (std::isinf(Lp.T) && left.reach < Lp.T) {
        // recompute the left cut with the right total known
        left = run_sweep(Lp, alpha, opt, right.total);
    }
    s.left_total_ = left.total;
    s.right_total_ = right.total;
    s.total_ = left.total + right.total;
    if (!std::isfinite(s.total_) || !(s.total_ > 0)) throw Error("the integral of u^-2 over the image interval diverges");
    if (std::isfinite(s.r_hat_) && right.reach == right.T && !right.cells.empty()) {
        s.u_r_ = right.cells.back().f1;
        s.du_r_ = right.cells.back().df1;
    } else if (std::isfinite(s.r_hat_) && right.T == 0.0) {
        s.u_r_ = 1.0;
        s.du_r_ = 0.0;
    }
    s.right_ = std::make_shared<const Sweep>(std::move(right));
    s.left_sw_ = std::make_shared<const Sweep>(std::move(left));
    s.finish_gamma();
    return s;
}

void HarmonicSolution::finish_gamma() {
    gamma_bar_ = 1.0 / total_;
    const bool regular = bc_.regular();
    double K = 0.0;
    if (regular) {
        if (!std::isfinite(u_r_) || !std::isfinite(du_r_)) throw Error("u and its derivative at a regular r are not finite");
        K = du_r_ * u_r_;
    }
    gamma_under_ = regular ? gamma_bar_ * K / (gamma_bar_ + K) : gamma_bar_;
    GammaChoice c = choice_;
    if (c == GammaChoice::Auto) c = (regular && bc_.refinement == Refinement::Reflecting) ? GammaChoice::Underline : GammaChoice::Bar;
    if (c == GammaChoice::Bar || !regular) {
        gamma_ = gamma_bar_;
        eps_ = 0.0;
    } else {
        double Kc = K;
        if (choice_ == GammaChoice::Auto) Kc += 2.0 * alpha_ * m_r_ * u_r_ * u_r_;
        gamma_ = gamma_bar_ * Kc / (gamma_bar_ + Kc);
        eps_ = gamma_bar_ / (gamma_bar_ + Kc);
    }
    if (left_ == LeftKind::MinusInfinity) {
        p_ = 0.0;
        q_ = 1.0;
    } else {
        double a = u(0.0), b = du(0.0, +1);
        p_ = 1.0;
        q_ = a * (2.0 * alpha_ * mu0_ * a - b);
    }
    W_ = q_ * eps_ + gamma_ * p_ + gamma_ * q_ * total_;
    if (!(W_ > 0)) throw Error("the Wronskian vanishes: the pair carries no usable mass");
}

HarmonicSolution HarmonicSolution::with_gamma(GammaChoice g) const {
    HarmonicSolution s = *this;
    s.choice_ = g;
    s.finish_gamma();
    return s;
}

int HarmonicSolution::max_terms_used() const { return std::max(right_->max_terms, left_sw_->max_terms); }
double HarmonicSolution::tail_bound() const { return right_->tail_bound + left_sw_->tail_bound; }

double HarmonicSolution::lo() const { return left_sw_->T == 0.0 ? e_ : e_ - left_sw_->reach; }
double HarmonicSolution::hi() const { return right_->T == 0.0 ? e_ : e_ + right_->reach; }

double HarmonicSolution::t_of(double x, const Sweep*& s) const {
    if (std::isnan(x)) throw ValidationError("point is NaN");
    if (x >= e_) {
        s = right_.get();
        return x - e_;
    }
    s = left_sw_.get();
    return e_ - x;
}

double HarmonicSolution::u(double x) const {
    const Sweep* s;
    double t = t_of(x, s);
    return s->f(t);
}

double HarmonicSolution::du(double x, int side) const {
    const Sweep* s;
    double t = t_of(x, s);
    if (s->dir > 0) return side >= 0 ? s->df_plus(t) : s->df_minus(t);
    if (side < 0 && std::isfinite(l_hat_) && x == l_hat_) return 0.0;
    return side >= 0 ? -s->df_minus(t) : -s->df_plus(t);
}

double HarmonicSolution::L(double x) const {
    const Sweep* s;
    double t = t_of(x, s);
    return s->dir > 0 ? left_total_ + s->near(t) : s->far(t);
}

double HarmonicSolution::R(double x) const {
    const Sweep* s;
    double t = t_of(x, s);
    return s->dir > 0 ? s->far(t) : right_total_ + s->near(t);
}

double HarmonicSolution::du_minus(double x, int side) const { return du(x, side) * L(x) + 1.0 / u(x); }
double HarmonicSolution::du_plus(double x, int side) const { return du(x, side) * R(x) - 1.0 / u(x); }
double HarmonicSolution::v(double x) const { return u(x) * (eps_ + gamma_ * R(x)); }
double HarmonicSolution::dv(double x, int side) const { return du(x, side) * (eps_ + gamma_ * R(x)) - gamma_ / u(x); }
double HarmonicSolution::phi(double x) const { return u(x) * (p_ + q_ * L(x)); }
double HarmonicSolution::dphi(double x, int side) const { return du(x, side) * (p_ + q_ * L(x)) + q_ / u(x); }
double HarmonicSolution::wronskian_at(double x) const { return dphi(x, +1) * v(x) - phi(x) * dv(x, +1); }

std::vector<double> HarmonicSolution::grid(int per_cell) const {
    std::vector<double> g;
    auto add_side = [&](const Sweep& s) {
        for (const auto& c : s.cells) {
            double t1 = std::isinf(c.t1) ? c.t0 + std::max(1.0, c.t0) : c.t1;
            for (int k = 0; k <= per_cell; ++k) {
                double t = c.t0 + (t1 - c.t0) * k / (per_cell + 1.0);
                g.push_back(e_ + s.dir * t);
            }
            if (std::isfinite(c.t1)) g.push_back(e_ + s.dir * c.t1);
        }
    };
    add_side(*right_);
    add_side(*left_sw_);
    g.push_back(e_);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    double a = lo(), b = hi();
    g.erase(std::remove_if(g.begin(), g.end(), [&](double x) { return x < a || x > b; }), g.end());
    return g;
}

SeriesResult u_series_global(const HarmonicSolution& sol, const std::vector<double>& points, double tol, int max_terms) {
    if (!(tol > 0)) throw ValidationError("tol must be positive");
    const double e = sol.base_hat();
    const double alpha = sol.alpha();
    double xmax = e;
    for (double x : points) {
        if (x < e) throw ValidationError("series cross-check covers the right of the base point only");
        xmax = std::max(xmax, x);
    }
    const QuasiPair& P = sol.pair();
    SideProblem S = make_side(P, P.image_measure().all_atoms(), +1);
    // sigma-hat at xmax, measured from the base
    double sg = 0.0;
    for (const auto& a : S.atoms)
        if (e + a.x <= xmax) sg += (xmax - e - a.x) * a.mass;
    sg += S.sigma(0.0, xmax - e);
    const double th = 2.0 * alpha * sg;

    // cell partition of the right sweep, truncated at xmax
    HarmonicOptions opt;
    Sweep sw = run_sweep(S, alpha, opt, 0.0);
    std::vector<SweepCell> cells;
    for (const auto& c : sw.cells) {
        if (c.t0 >= xmax - e && !cells.empty()) break;
        cells.push_back(c);
    }
    const ChebBasis& cb = cheb_basis();
    const int n = cb.size();
    struct Iter {
        std::vector<double> nodes;
        double A = 0.0, B = 0.0, f1 = 0.0;
    };
    std::vector<Iter> cur(cells.size());
    std::vector<std::vector<double>> w(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        cur[i].A = 1.0;
        cur[i].f1 = 1.0;
        if (c.cheb) {
            cur[i].nodes.assign(n, 1.0);
            w[i].resize(n);
            for (int j = 0; j < n; ++j) w[i][j] = S.w(c.t0 + (cb.nodes()[j] + 1.0) * 0.5 * (c.t1 - c.t0));
        }
    }
    auto value_at = [&](const std::vector<Iter>& it, double t) {
        std::size_t i = 0;
        while (i + 1 < cells.size() && cells[i + 1].t0 <= t) ++i;
        const auto& c = cells[i];
        if (c.cheb) return ChebBasis::eval(cb.coeffs(it[i].nodes), (2.0 * t - c.t0 - c.t1) / (c.t1 - c.t0));
        return it[i].A + it[i].B * (t - c.t0);
    };
    SeriesResult res;
    res.values.assign(points.size(), 1.0);
    double pf = 1.0;  // th^n / n!
    for (int k = 1; k <= max_terms; ++k) {
        std::vector<Iter> nxt(cells.size());
        double val = 0.0, der = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& c = cells[i];
            const double h = c.t1 - c.t0;
            if (i > 0) der += 2.0 * alpha * S.atom_at(c.t0) * cur[i].A;
            nxt[i].A = val;
            nxt[i].B = der;
            if (c.cheb) {
                std::vector<double> g(n);
                for (int j = 0; j < n; ++j) g[j] = w[i][j] * cur[i].nodes[j];
                auto d = cb.cumulative(g);
                for (auto& x : d) x = der + 2.0 * alpha * 0.5 * h * x;
                auto f = cb.cumulative(d);
                for (auto& x : f) x = val + 0.5 * h * x;
                double f_end = ChebBasis::eval(cb.coeffs(f), 1.0);
                double d_end = ChebBasis::eval(cb.coeffs(d), 1.0);
                nxt[i].nodes = std::move(f);
                val = f_end;
                der = d_end;
            } else if (std::isfinite(h)) {
                double ms = S.mass(c.t0, c.t1);
                double sgc = S.sigma(c.t0, c.t1);
                val = val + der * h + 2.0 * alpha * sgc * cur[i].A;
                der = der + 2.0 * alpha * ms * cur[i].A;
            }
            nxt[i].f1 = val;
        }
        cur = std::move(nxt);
        for (std::size_t p = 0; p < points.size(); ++p) res.values[p] += value_at(cur, points[p] - e);
        res.terms = k;
        pf *= th / k;
        res.bound = pf * th / (k + 1) * std::exp(th);
        if (res.bound < tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

ResidualReport check_residuals(const HarmonicSolution& sol) {
    ResidualReport rep;
    const double alpha = sol.alpha();
    const Measure& mh = sol.pair().image_measure();
    using Fn = double (HarmonicSolution::*)(double) const;
    using Dn = double (HarmonicSolution::*)(double, int) const;
    const std::pair<Fn, Dn> fns[] = {{&HarmonicSolution::u, &HarmonicSolution::du},
                                     {&HarmonicSolution::u_minus, &HarmonicSolution::du_minus},
                                     {&HarmonicSolution::u_plus, &HarmonicSolution::du_plus},
                                     {&HarmonicSolution::v, &HarmonicSolution::dv}};
    // 1/2 (Df(xb) - Df(xa)) = alpha int_(xa,xb] f dm on sub-intervals of density cells, by Gauss
    // quadrature; errors are measured against the size of the derivatives involved
    auto g = sol.grid(0);
    std::vector<double> gx, gw;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        double a = g[i], b = g[i + 1];
        if (!std::isfinite(a) || !std::isfinite(b)) continue;
        // cells below position resolution (graded toward a singular end) are skipped
        if (b - a < 1e-6 * std::max({1.0, std::fabs(a), std::fabs(b)})) continue;
        if (!(mh.density(0.5 * (a + b)) > 0)) continue;
        const double tol = std::max(1e-8, (b - a) * (b - a));
        for (double c : {0.25, 0.5, 0.75}) {
            double mid = a + c * (b - a);
            double hs = (b - a) / 8.0;
            double xa = mid - 0.5 * hs, xb = mid + 0.5 * hs;
            gx.clear();
            gw.clear();
            gauss_rule(xa, xb, gx, gw);
            for (const auto& [F, D] : fns) {
                double integral = 0.0, mag = 0.0;
                for (std::size_t k = 0; k < gx.size(); ++k) {
                    double t = gw[k] * mh.density(gx[k]) * (sol.*F)(gx[k]);
                    integral += t;
                    mag += std::fabs(t);
                }
                double da = (sol.*D)(xa, 1), db = (sol.*D)(xb, 1);
                double lhs = 0.5 * (db - da), rhs = alpha * integral;
                double scale = std::fabs(rhs) + alpha * mag + std::fabs(da) + std::fabs(db);
                if (!(scale > 0)) continue;
                rep.max_cell = std::max(rep.max_cell, std::fabs(lhs - rhs) / scale / tol);
            }
            ++rep.cells_checked;
        }
    }
    for (const auto& at : sol.atoms()) {
        if (at.x <= sol.lo() || at.x >= sol.hi()) continue;
        for (const auto& [F, D] : fns) {
            double fv = (sol.*F)(at.x);
            double dp = (sol.*D)(at.x, 1), dm = (sol.*D)(at.x, -1);
            double want = 2.0 * alpha * fv * at.mass;
            double scale = std::max(std::fabs(want) + std::fabs(dp) + std::fabs(dm), 1e-300);
            rep.max_jump = std::max(rep.max_jump, std::fabs(dp - dm - want) / scale);
        }
        ++rep.atoms_checked;
    }
    for (double x : sol.grid(1)) {
        if (std::isfinite(sol.r_hat()) && x >= sol.r_hat()) continue;
        double w = sol.wronskian_at(x);
        rep.max_wronskian = std::max(rep.max_wronskian, std::fabs(w - sol.wronskian()) / sol.wronskian());
    }
    return rep;
}

double monotonicity_violation(const HarmonicSolution& sol, int per_cell) {
    auto g = sol.grid(per_cell);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double x = g[i];
        double u = sol.u(x), um = sol.u_minus(x), up = sol.u_plus(x), v = sol.v(x);
        if (!(u > 0)) worst = std::max(worst, 1.0);
        if (um < 0) worst = std::max(worst, -um);
        if (up < 0) worst = std::max(worst, -up);
        if (v < 0) worst = std::max(worst, -v / std::max(1.0, sol.v(g.front())));
        if (i + 1 == g.size()) continue;
        double y = g[i + 1];
        auto up_viol = [&](double a, double b) { return a > b ? (a - b) / std::max(std::fabs(a), 1e-300) : 0.0; };
        // u grows away from e_hat on either side
        if (x >= sol.base_hat())
            worst = std::max(worst, up_viol(u, sol.u(y)));
        else if (y <= sol.base_hat())
            worst = std::max(worst, up_viol(sol.u(y), u));
        worst = std::max(worst, up_viol(um, sol.u_minus(y)));
        worst = std::max(worst, up_viol(sol.u_plus(y), up));
        worst = std::max(worst, up_viol(sol.v(y), v));
    }
    return worst;
}

double pull_back(const std::function<double(double)>& fhat, const QuasiPair& pair, double x, int side) {
    if (!pair.in_I(x)) throw ValidationError("point outside I");
    double y = side < 0 ? pair.s_left(x) : (side > 0 ? pair.s_right(x) : pair.s(x));
    return fhat(y);
}

double push(const std::function<double(double)>& f, const QuasiPair& pair, double xhat) {
    return f(merge_map(pair, xhat));
}

BirthDeathSolutions birth_death_solutions(const QuasiPair& pair, double alpha, const HarmonicOptions& opt) {
    if (pair.interval().left != LeftKind::BirthDeathAtom)
        throw ValidationError("birth-death solutions need the birth_death_atom left condition");
    if (!pair.measure().densities.empty()) throw ValidationError("birth-death solutions need a purely atomic measure");
    HarmonicOptions o = opt;
    o.gamma = GammaChoice::Bar;
    HarmonicSolution minimal = HarmonicSolution::build(pair, alpha, o);
    return {minimal, minimal.with_gamma(GammaChoice::Underline)};
}

}  // namespace qd

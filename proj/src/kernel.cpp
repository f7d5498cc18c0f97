#include "quasidiff/kernel.hpp"

#include <algorithm>
#include <sstream>

namespace qd {

const char* to_string(Regime r) {
    switch (r) {
        case Regime::Plain: return "plain";
        case Regime::Split: return "split";
        case Regime::Modified: return "modified";
        case Regime::Restricted: return "restricted";
        case Regime::Darned: return "darned";
    }
    return "?";
}

Regime parse_regime(const std::string& s) {
    if (s == "plain" || s == "continuous") return Regime::Plain;
    if (s == "split") return Regime::Split;
    if (s == "modified") return Regime::Modified;
    if (s == "restricted") return Regime::Restricted;
    if (s == "darned") return Regime::Darned;
    throw ValidationError("unknown regime '" + s + "'");
}

Normalization parse_normalization(const std::string& s) {
    if (s == "paper") return Normalization::Paper;
    if (s == "probabilistic") return Normalization::Probabilistic;
    throw ValidationError("unknown normalization '" + s + "'");
}

Kernel::Kernel(HarmonicSolution sol, Regime regime, double c) : sol_(std::move(sol)), regime_(regime), c_(c) {
    if (!(c > 0)) throw ValidationError("kernel normalization must be positive");
    const QuasiPair& P = sol_.pair();
    switch (regime_) {
        case Regime::Plain: break;
        case Regime::Split: split_ = std::make_shared<const SplitSpace>(P); break;
        case Regime::Modified:
        case Regime::Restricted: supp_ = std::make_shared<const Supports>(supports(P)); break;
        case Regime::Darned:
            if (P.strictness() != Strictness::NonStrict) throw ValidationError("darned regime requires a scale with flat intervals");
            darn_ = std::make_shared<const DarnedSpace>(P);
            break;
    }
}

double Kernel::eval_hat(double xh, double yh) const {
    double a = std::min(xh, yh), b = std::max(xh, yh);
    return c_ * sol_.phi(a) * sol_.v(b) / sol_.wronskian();
}

double Kernel::dx_hat(double xh, double yh, int side) const {
    if (xh < yh || (xh == yh && side < 0)) return c_ * sol_.dphi(xh, side) * sol_.v(yh) / sol_.wronskian();
    return c_ * sol_.phi(yh) * sol_.dv(xh, side) / sol_.wronskian();
}

double Kernel::map(double x) const {
    const QuasiPair& P = sol_.pair();
    switch (regime_) {
        case Regime::Plain:
        case Regime::Split:
            if (!P.in_I(x)) throw ValidationError("point " + format_real(x) + " is outside I");
            return P.s(x);
        case Regime::Modified: return stilde(P, *supp_, x);
        case Regime::Restricted:
            if (!supp_->in_F_dot(x))
                throw ValidationError("point " + format_real(x) + " is outside the restricted state space F-dot");
            return P.s(x);
        case Regime::Darned:
            if (!P.in_I(x)) throw ValidationError("point " + format_real(x) + " is outside I");
            return darn_->s_sharp(darn_->point(x));
    }
    return kNaN;
}

double Kernel::map(const StarPoint& p) const {
    if (regime_ == Regime::Split) {
        if (!sol_.pair().in_I(p.x)) throw ValidationError("point " + format_real(p.x) + " is outside I");
        return split_->s_star(p);
    }
    if (p.side != 0) throw ValidationError("one-sided copies exist in the split regime only");
    return map(p.x);
}

double Kernel::map(const DarnPoint& p) const {
    if (regime_ == Regime::Darned) return darn_->s_sharp(p);
    if (p.collapsed) throw ValidationError("collapsed points exist in the darned regime only");
    return map(p.x);
}

namespace {

// Preimages of image points under the increasing segments of the scale.
void add_preimages(const ScaleFunction& sc, const std::vector<double>& yh, std::vector<double>& out) {
    for (const auto& seg : sc.segments()) {
        if (seg.flat()) continue;
        double ya = seg.start(), yb = seg.end();
        for (double y : yh) {
            if (y < ya || y > yb) continue;
            double x = seg.anchor() + (y - seg.value) / seg.slope;
            if (std::isfinite(x)) out.push_back(std::clamp(x, seg.x0, seg.x1));
        }
    }
}

double preimage_clamped(const ScaleFunction& sc, double y, bool upper) {
    const auto& segs = sc.segments();
    if (upper) {
        for (auto it = segs.rbegin(); it != segs.rend(); ++it)
            if (!it->flat() && y >= it->start() && y <= it->end()) return it->anchor() + (y - it->value) / it->slope;
        return sc.right_end();
    }
    for (const auto& seg : segs)
        if (!seg.flat() && y >= seg.start() && y <= seg.end()) return seg.anchor() + (y - seg.value) / seg.slope;
    return sc.left_end();
}

}  // namespace

MeasureQuadrature::MeasureQuadrature(const HarmonicSolution& sol, const std::vector<double>& extra_breaks) {
    const QuasiPair& P = sol.pair();
    const ScaleFunction& sc = P.scale();
    const Measure& m = P.measure();
    double xlo = P.l(), xhi = P.r();
    if (std::isinf(xlo)) xlo = preimage_clamped(sc, sol.lo(), false);
    if (std::isinf(xhi) || (std::isfinite(P.r_hat()) && sol.hi() < P.r_hat()) || std::isinf(P.r_hat()))
        xhi = std::min(xhi, preimage_clamped(sc, sol.hi(), true));

    for (const auto& a : m.all_atoms()) {
        if (a.x < xlo || a.x > xhi) continue;
        atoms_.push_back({a.x, P.s(a.x), a.mass});
    }

    std::vector<double> br{xlo, xhi};
    for (const auto& seg : sc.segments())
        for (double x : {seg.x0, seg.x1})
            if (std::isfinite(x)) br.push_back(x);
    std::vector<double> pivots;
    for (const auto& d : m.densities) {
        for (double x : {d.x0, d.x1})
            if (std::isfinite(x)) br.push_back(x);
        double w;
        if (d.singular(w)) {
            br.push_back(w);
            pivots.push_back(w);
        }
    }
    for (double x : extra_breaks) br.push_back(x);
    add_preimages(sc, sol.grid(0), br);
    std::sort(br.begin(), br.end());
    std::vector<double> u;
    for (double x : br) {
        if (x < xlo || x > xhi) continue;
        if (u.empty() || !same_value(u.back(), x)) u.push_back(x);
    }

    const ChebBasis& cb = cheb_basis();
    std::vector<double> fejer(cb.size());
    for (int j = 0; j < cb.size(); ++j) {
        std::vector<double> e(cb.size(), 0.0);
        e[j] = 1.0;
        fejer[j] = cb.integral(e);
    }
    auto is_pivot = [&](double x) {
        return std::any_of(pivots.begin(), pivots.end(), [&](double p) { return same_value(p, x); });
    };
    auto make_panel = [&](double a, double b) {
        Panel p;
        p.a = a;
        p.b = b;
        const auto& seg = sc.segments()[sc.segment_index(0.5 * (a + b))];
        p.ya = seg.at(a);
        p.slope = seg.slope;
        const double half = 0.5 * (b - a);
        for (int j = 0; j < cb.size(); ++j) {
            double x = a + (cb.nodes()[j] + 1.0) * half;
            p.x.push_back(x);
            p.w.push_back(half * fejer[j] * m.density(x));
        }
        panels_.push_back(std::move(p));
    };
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        double a = u[i], b = u[i + 1];
        double dm = 0.0;
        for (const auto& d : m.densities) dm += d.mass(a, b);
        if (!(dm > 0)) continue;
        bool pa = is_pivot(a), pb = is_pivot(b);
        if (!pa && !pb) {
            make_panel(a, b);
            continue;
        }
        double mid = 0.5 * (a + b);
        double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
        auto graded = [&](double p, double q) {  // p is the pivot end
            std::vector<double> cuts{q};
            double d = q - p;
            while (std::fabs(d) > 1e-15 * scale) {
                d *= 0.5;
                cuts.push_back(p + d);
            }
            cuts.push_back(p);
            std::sort(cuts.begin(), cuts.end());
            for (std::size_t k = 0; k + 1 < cuts.size(); ++k) make_panel(cuts[k], cuts[k + 1]);
        };
        if (pa && pb) {
            graded(a, mid);
            graded(b, mid);
        } else if (pa) {
            graded(a, b);
        } else {
            graded(b, a);
        }
    }
    std::sort(panels_.begin(), panels_.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
}

double MeasureQuadrature::integrate(const std::function<double(double, double)>& h) const {
    std::vector<double> parts;
    for (const auto& p : panels_) {
        double s = 0.0;
        for (std::size_t j = 0; j < p.x.size(); ++j) s += p.w[j] * h(p.x[j], p.yh(p.x[j]));
        parts.push_back(s);
    }
    for (const auto& a : atoms_) parts.push_back(a.mass * h(a.x, a.yh));
    return pairwise_sum(parts);
}

ResolventTable::ResolventTable(const Kernel& K, const PiecewiseFunction& f)
    : ResolventTable(K, [f](double x) { return f(x); }, f.breakpoints()) {}

ResolventTable::ResolventTable(const Kernel& K, const std::function<double(double)>& f,
                               const std::vector<double>& f_breaks)
    : K_(&K) {
    quad_ = std::make_shared<const MeasureQuadrature>(K.solution(), f_breaks);
    const HarmonicSolution& S = K.solution();
    const ChebBasis& cb = cheb_basis();
    const int n = cb.size();
    for (const auto& p : quad_->panels()) {
        std::vector<double> gp(n), gv(n);
        const double half = 0.5 * (p.b - p.a);
        for (int j = 0; j < n; ++j) {
            double x = p.x[j], yh = p.yh(x);
            double dens = K.pair().measure().density(x);
            double fx = f(x) * dens;
            gp[j] = S.phi(yh) * fx;
            gv[j] = S.v(yh) * fx;
        }
        PanelData d;
        d.cphi = ChebBasis::antiderivative(cb.coeffs(gp));
        d.cv = ChebBasis::antiderivative(cb.coeffs(gv));
        for (auto& c : d.cphi) c *= half;
        for (auto& c : d.cv) c *= half;
        d.tot_phi = ChebBasis::eval(d.cphi, 1.0);
        d.tot_v = ChebBasis::eval(d.cv, 1.0);
        d.yb = p.yh(p.b);
        pd_.push_back(std::move(d));
    }
    const std::size_t np = pd_.size();
    pre_phi_.assign(np + 1, 0.0);
    for (std::size_t i = 0; i < np; ++i) pre_phi_[i + 1] = pre_phi_[i] + pd_[i].tot_phi;
    suf_v_.assign(np + 1, 0.0);
    for (std::size_t i = np; i-- > 0;) suf_v_[i] = suf_v_[i + 1] + pd_[i].tot_v;

    const auto& at = quad_->atoms();
    const std::size_t na = at.size();
    atom_y_.resize(na);
    std::vector<double> ph(na), vv(na);
    for (std::size_t i = 0; i < na; ++i) {
        atom_y_[i] = at[i].yh;
        double fx = f(at[i].x) * at[i].mass;
        ph[i] = S.phi(at[i].yh) * fx;
        vv[i] = S.v(at[i].yh) * fx;
    }
    apre_phi_.assign(na + 1, 0.0);
    for (std::size_t i = 0; i < na; ++i) apre_phi_[i + 1] = apre_phi_[i] + ph[i];
    asuf_v_.assign(na + 1, 0.0);
    for (std::size_t i = na; i-- > 0;) asuf_v_[i] = asuf_v_[i + 1] + vv[i];
}

double ResolventTable::lower(double xh) const {
    // panels with image range entirely <= xh, plus the partial one
    const auto& P = quad_->panels();
    std::size_t i = std::upper_bound(pd_.begin(), pd_.end(), xh, [](double y, const PanelData& d) { return y < d.yb; }) -
                    pd_.begin();
    double s = pre_phi_[i];
    if (i < P.size() && P[i].slope > 0 && P[i].ya < xh) {
        double x = P[i].a + (xh - P[i].ya) / P[i].slope;
        double tau = std::clamp((2.0 * x - P[i].a - P[i].b) / (P[i].b - P[i].a), -1.0, 1.0);
        s += ChebBasis::eval(pd_[i].cphi, tau);
    }
    std::size_t k = std::upper_bound(atom_y_.begin(), atom_y_.end(), xh) - atom_y_.begin();
    return s + apre_phi_[k];
}

double ResolventTable::upper(double xh) const {
    const auto& P = quad_->panels();
    std::size_t i = std::upper_bound(pd_.begin(), pd_.end(), xh, [](double y, const PanelData& d) { return y < d.yb; }) -
                    pd_.begin();
    double s = 0.0;
    if (i < P.size()) {
        if (P[i].slope > 0 && P[i].ya < xh) {
            double x = P[i].a + (xh - P[i].ya) / P[i].slope;
            double tau = std::clamp((2.0 * x - P[i].a - P[i].b) / (P[i].b - P[i].a), -1.0, 1.0);
            s += pd_[i].tot_v - ChebBasis::eval(pd_[i].cv, tau);
        } else {
            s += pd_[i].tot_v;
        }
        s += suf_v_[i + 1];
    }
    std::size_t k = std::upper_bound(atom_y_.begin(), atom_y_.end(), xh) - atom_y_.begin();
    return s + asuf_v_[k];
}

double ResolventTable::at_hat(double xh) const {
    const HarmonicSolution& S = K_->solution();
    return K_->c() / S.wronskian() * (S.v(xh) * lower(xh) + S.phi(xh) * upper(xh));
}

double ResolventTable::d_hat(double xh, int side) const {
    const HarmonicSolution& S = K_->solution();
    double lo = lower(xh), up = upper(xh);
    if (side < 0) {
        // an atom at xh belongs to the upper part when approached from the left
        auto r = std::equal_range(atom_y_.begin(), atom_y_.end(), xh);
        double moved = 0.0;
        const auto& at = quad_->atoms();
        for (auto it = r.first; it != r.second; ++it) {
            std::size_t i = it - atom_y_.begin();
            moved += apre_phi_[i + 1] - apre_phi_[i];
            up += (asuf_v_[i] - asuf_v_[i + 1]);
            (void)at;
        }
        lo -= moved;
    }
    return K_->c() / S.wronskian() * (S.dv(xh, side) * lo + S.dphi(xh, side) * up);
}

double resolvent_apply(const Kernel& K, const PiecewiseFunction& f, double x) {
    ResolventTable T(K, f);
    return T(x);
}

IdentityCheck resolvent_identity_check(const Kernel& Ka, const Kernel& Kb, const PiecewiseFunction& f,
                                       const std::vector<double>& points_hat) {
    IdentityCheck out;
    const double a = Ka.alpha(), b = Kb.alpha();
    ResolventTable Ta(Ka, f), Tb(Kb, f);
    const QuasiPair& P = Ka.pair();
    ResolventTable Tab(Ka, [&](double x) { return Tb.at_hat(P.s(x)); }, f.breakpoints());
    std::vector<double> d, e;
    for (double y : points_hat) {
        d.push_back(Ta.at_hat(y) - Tb.at_hat(y));
        e.push_back((b - a) * Tab.at_hat(y));
    }
    double de = 0.0, ee = 0.0, dmax = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        de += d[i] * e[i];
        ee += e[i] * e[i];
        dmax = std::max(dmax, std::fabs(d[i]));
    }
    if (!(ee > 0)) return out;
    out.determinate = true;
    out.factor = de / ee;
    double r = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) r = std::max(r, std::fabs(d[i] - out.factor * e[i]));
    out.residual = dmax > 0 ? r / dmax : r;
    return out;
}

ColumnCheck harmonic_residual_check(const Kernel& K, double y, const std::vector<double>& grid) {
    ColumnCheck out;
    const HarmonicSolution& S = K.solution();
    const Measure& mh = K.pair().image_measure();
    const double alpha = K.alpha();
    auto brk = mh.breakpoints();
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        double a = grid[i], b = grid[i + 1];
        if (a < y && y < b) continue;
        if (a < S.lo() || b > S.hi()) continue;
        std::vector<double> cuts{a, b};
        for (double x : brk)
            if (x > a && x < b) cuts.push_back(x);
        std::sort(cuts.begin(), cuts.end());
        std::vector<double> parts;
        double absint = 0.0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            std::vector<double> gx, gw;
            gauss_rule(cuts[k], cuts[k + 1], gx, gw);
            for (std::size_t j = 0; j < gx.size(); ++j) {
                double g = K.eval_hat(gx[j], y) * mh.density(gx[j]);
                parts.push_back(gw[j] * g);
                absint += std::fabs(gw[j] * g);
            }
        }
        for (const auto& at : mh.all_atoms())
            if (at.x > a && at.x < b) {
                double g = K.eval_hat(at.x, y) * at.mass;
                parts.push_back(g);
                absint += std::fabs(g);
            }
        double integral = pairwise_sum(parts);
        double dA = K.dx_hat(a, y, +1), dB = K.dx_hat(b, y, -1);
        double lhs = 0.5 * (dB - dA);
        double rhs = alpha * integral;
        double denom = std::max(alpha * absint, std::fabs(dA) + std::fabs(dB));
        if (!(denom > 0)) continue;
        out.max_residual = std::max(out.max_residual, std::fabs(lhs - rhs) / denom);
        ++out.intervals;
    }
    if (y > S.lo() && y < S.hi()) {
        double jump = K.dx_hat(y, y, +1) - K.dx_hat(y, y, -1);
        out.diagonal_jump = jump - 2.0 * alpha * K.eval_hat(y, y) * mh.atom_at(y);
    }
    return out;
}

BoundaryCheck boundary_condition_check(const Kernel& K, const PiecewiseFunction& f) {
    BoundaryCheck out;
    const HarmonicSolution& S = K.solution();
    ResolventTable T(K, f);
    if (std::isfinite(S.l_hat())) {
        // derivative just right of the left end, net of the jump carried by an atom there
        double d = T.d_hat(S.l_hat(), +1);
        double m0 = S.mu0();
        out.left = d - 2.0 * K.alpha() * m0 * T.at_hat(S.l_hat());
    } else {
        out.left = T.d_hat(S.lo(), +1);
    }
    const auto& bc = S.boundary();
    if (bc.reflecting() && bc.instantaneous.value_or(false))
        out.right = T.d_hat(S.r_hat(), -1);
    else if (std::isinf(S.r_hat()))
        out.right = T.d_hat(S.hi(), -1);
    return out;
}

}  // namespace qd

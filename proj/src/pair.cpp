#include "quasidiff/pair.hpp"

#include <algorithm>
#include <sstream>

namespace qd {

const char* to_string(LeftKind k) {
    switch (k) {
        case LeftKind::Reflect: return "reflect";
        case LeftKind::BirthDeathAtom: return "birth_death_atom";
        case LeftKind::MinusInfinity: return "minus_infinity";
    }
    return "?";
}

const char* to_string(Strictness s) {
    switch (s) {
        case Strictness::ContinuousStrict: return "continuous-strict";
        case Strictness::StrictDiscontinuous: return "strict-discontinuous";
        case Strictness::NonStrict: return "non-strict";
    }
    return "?";
}

PointSet PointSet::merged(std::vector<std::pair<double, double>> parts, bool right_open) {
    std::sort(parts.begin(), parts.end());
    PointSet out;
    out.right_open = right_open;
    for (const auto& p : parts) {
        if (!out.parts.empty() && (p.first <= out.parts.back().second || same_value(p.first, out.parts.back().second)))
            out.parts.back().second = std::max(out.parts.back().second, p.second);
        else
            out.parts.push_back(p);
    }
    return out;
}

bool PointSet::contains(double y) const {
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& p = parts[i];
        bool last = i + 1 == parts.size();
        bool ge = y >= p.first || same_value(y, p.first);
        bool le = y <= p.second || same_value(y, p.second);
        if (ge && le) {
            if (last && right_open && same_value(y, p.second) && p.first != p.second) return false;
            return true;
        }
    }
    return false;
}

bool PointSet::meets_open(double a, double b) const {
    for (const auto& p : parts)
        if (p.second > a && p.first < b && !same_value(p.second, a) && !same_value(p.first, b)) return true;
    return false;
}

std::string PointSet::describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) os << " U ";
        const auto& p = parts[i];
        bool last = i + 1 == parts.size();
        if (p.first == p.second) {
            os << "{" << format_real(p.first) << "}";
            continue;
        }
        os << (std::isinf(p.first) ? "(" : "[") << format_real(p.first) << "," << format_real(p.second)
           << ((last && right_open) || std::isinf(p.second) ? ")" : "]");
    }
    return os.str();
}

Measure image_measure(const ScaleFunction& scale, const Measure& m) {
    Measure out;
    for (const auto& a : m.atoms) out.atoms.push_back({scale.value(a.x), a.mass});
    for (const auto& p : m.densities) {
        for (const auto& seg : scale.segments()) {
            double lo = std::max(p.x0, seg.x0), hi = std::min(p.x1, seg.x1);
            if (!(lo < hi)) continue;
            if (seg.flat()) {
                double mass = p.mass(lo, hi);
                if (std::isinf(mass)) throw ValidationError("speed measure has infinite mass on a flat interval");
                if (mass > 0) out.atoms.push_back({seg.value, mass});
                continue;
            }
            DensityPiece q = p;
            q.x0 = lo;
            q.x1 = hi;
            out.densities.push_back(q.affine_image(seg.anchor(), seg.value, seg.slope));
        }
    }
    for (const auto& f : m.families) {
        double first = f.position(0);
        double lim = f.limit();
        std::size_t i = scale.segment_index(first);
        const auto& seg = scale.segments()[i];
        bool inside = first >= seg.x0 && first <= seg.x1 && lim >= seg.x0 && lim <= seg.x1;
        if (!f.infinite()) {
            double last = f.position(f.count - 1);
            inside = first >= seg.x0 && last <= seg.x1 && last >= seg.x0;
            for (long k = 0; k < f.count; ++k)
                if (scale.breakpoint_at(f.position(k))) inside = false;
        }
        if (!inside || seg.flat()) throw ValidationError("atom family must lie inside one increasing scale segment");
        AtomFamily g = f;
        g.center = std::isinf(f.center) ? f.center : seg.at(f.center);
        g.d = f.d * seg.slope;
        out.families.push_back(g);
    }
    out.normalize();
    return out;
}

QuasiPair QuasiPair::validate(const ScaleFunction& scale, const Measure& measure, const IntervalSpec& spec_in) {
    QuasiPair p;
    p.scale_ = scale;
    p.measure_ = measure;
    p.measure_.normalize();
    p.spec_ = spec_in;
    const auto& m = p.measure_;
    const double l = scale.left_end(), r = scale.right_end();
    const bool two_sided = spec_in.left == LeftKind::MinusInfinity;

    if (std::isnan(p.spec_.r)) p.spec_.r = r;
    if (!same_value(p.spec_.r, r)) throw ValidationError("interval: r does not match the right end of the scale segments");
    if (two_sided) {
        if (!std::isinf(l)) throw ValidationError("interval: left end must be -inf for the two-sided left condition");
        if (scale.segments().front().flat()) throw ValidationError("s constant near -inf");
    } else {
        if (l != 0.0) throw ValidationError("interval: left end must be 0");
        const auto& s0 = scale.segments().front();
        if (!same_value(s0.start(), 0.0)) throw ValidationError("s(0)=s(0+)=0 violated");
        if (s0.flat()) throw ValidationError("s(0)=s(0+)=0<s(x) violated: s is constant near 0");
    }
    if (scale.segments().back().flat()) throw ValidationError("s constant near r");
    if (p.spec_.r_included) {
        if (std::isinf(r) || std::isinf(scale.segments().back().end())) throw ValidationError("r included but s(r)=inf");
    }

    auto in_I = [&](double x) {
        if (x < l) return false;
        if (x > r) return false;
        if (same_value(x, r) && !p.spec_.r_included) return false;
        return true;
    };
    for (const auto& a : m.atoms) {
        if (a.mass < 0) throw ValidationError("negative atom mass");
        if (!in_I(a.x)) throw ValidationError("atom outside the interval");
    }
    for (const auto& d : m.densities) {
        if (d.x0 < l || d.x1 > r) throw ValidationError("density piece outside the interval");
        double w;
        if (d.singular(w)) {
            bool at_open_r = same_value(w, r) && !p.spec_.r_included;
            if (d.power <= -1.0 && !at_open_r) throw ValidationError("m is not a Radon measure: non-integrable density singularity inside I");
        }
        if (d.kind == DensityKind::Poly) {
            if (std::isinf(d.x0) || std::isinf(d.x1)) {
                // nonnegativity at the unbounded end: leading nonzero coefficient sign
                std::size_t k = d.coeffs.size();
                while (k > 0 && d.coeffs[k - 1] == 0.0) --k;
                double lead = k ? d.coeffs[k - 1] : 0.0;
                bool neg = std::isinf(d.x1) ? lead < 0 : ((k - 1) % 2 ? lead > 0 : lead < 0);
                if (neg) throw ValidationError("negative density");
            }
            std::vector<double> gx, gw;
            double a = std::isinf(d.x0) ? d.x1 - 1.0 : d.x0, b = std::isinf(d.x1) ? d.x0 + 1.0 : d.x1;
            if (std::isinf(d.x0) && std::isinf(d.x1)) a = -1.0, b = 1.0;
            gauss_rule(a, b, gx, gw);
            gx.push_back(a);
            gx.push_back(b);
            for (double x : gx)
                if (d.eval(std::min(x, std::nextafter(d.x1, -kInf))) < -1e-14) throw ValidationError("negative density");
        } else if (d.c < 0) {
            throw ValidationError("negative density");
        }
    }
    for (const auto& f : m.families) {
        if (!(f.q > 0 && f.q != 1.0 && f.w > 0 && f.rho > 0)) throw ValidationError("invalid atom family");
        if ((f.q < 1.0 && f.d >= 0) || (f.q > 1.0 && f.d <= 0)) throw ValidationError("atom family positions must increase");
        if (!in_I(f.position(0))) throw ValidationError("atom family outside the interval");
        if (f.infinite()) {
            if (!same_value(f.limit(), r)) throw ValidationError("infinite atom family must accumulate at r");
            if (p.spec_.r_included) throw ValidationError("infinite atom family accumulating at an included r");
        } else if (!in_I(f.position(f.count - 1))) {
            throw ValidationError("atom family outside the interval");
        }
    }
    if (!two_sided) {
        double m0 = m.atom_at(0.0);
        if (spec_in.left == LeftKind::Reflect && m0 > 0) throw ValidationError("m({0})>0");
    }
    if (p.spec_.r_included) {
        double lo = std::isinf(l) ? r - 1.0 : std::max(l, r - 1.0);
        if (!std::isfinite(m.mass(lo, r))) throw ValidationError("r included but m is infinite near r");
    }

    p.image_ = qd::image_measure(scale, m);
    if (!p.scale_.flats().empty())
        p.strictness_ = Strictness::NonStrict;
    else if (!p.scale_.jumps().empty())
        p.strictness_ = Strictness::StrictDiscontinuous;
    else
        p.strictness_ = Strictness::ContinuousStrict;

    p.l_hat_ = two_sided ? -kInf : 0.0;
    p.r_hat_ = scale.segments().back().end();
    if (!in_I(p.spec_.base)) throw ValidationError("underlying point e outside I");
    p.base_hat_ = scale.value(p.spec_.base);
    if (p.image_.atom_at(p.base_hat_) > 0 && !(spec_in.left == LeftKind::BirthDeathAtom && p.base_hat_ == 0.0))
        throw ValidationError("underlying point e carries an image atom");
    if (!two_sided) p.mu0_ = p.image_.atom_at(0.0);

    std::vector<std::pair<double, double>> parts;
    for (const auto& seg : scale.segments()) parts.push_back({seg.start(), seg.end()});
    for (const auto& b : scale.breakpoints()) parts.push_back({b.value, b.value});
    p.image_set_ = PointSet::merged(parts, !p.spec_.r_included);
    return p;
}

double QuasiPair::m_r() const {
    if (!spec_.r_included) return 0.0;
    return measure_.atom_at(r());
}

bool QuasiPair::in_I(double x) const {
    if (x < l() || x > r()) return false;
    if (same_value(x, r()) && !spec_.r_included) return false;
    return true;
}

double merge_map(const QuasiPair& pair, double xhat) {
    if (!pair.image_set().contains(xhat)) {
        std::ostringstream os;
        os << "point " << format_real(xhat) << " is not in the image interval";
        throw ValidationError(os.str());
    }
    const auto& sc = pair.scale();
    for (const auto& b : sc.breakpoints())
        if (same_value(xhat, b.left) || same_value(xhat, b.value) || same_value(xhat, b.right)) {
            const auto& segs = sc.segments();
            std::size_t i = sc.segment_index(b.x);
            bool left_flat = i > 0 && segs[i - 1].flat() && same_value(xhat, b.left);
            bool right_flat = segs[i].flat() && same_value(xhat, b.right);
            if (left_flat || right_flat) throw ValidationError("merge map is not defined on a flat value; use the darned space");
            return b.x;
        }
    for (const auto& seg : sc.segments()) {
        if (seg.flat()) {
            if (same_value(xhat, seg.value)) throw ValidationError("merge map is not defined on a flat value; use the darned space");
            continue;
        }
        double a = seg.start(), b = seg.end();
        if ((xhat >= a || same_value(xhat, a)) && (xhat <= b || same_value(xhat, b))) {
            double x = seg.anchor() + (xhat - seg.value) / seg.slope;
            return std::clamp(x, seg.x0, seg.x1);
        }
    }
    throw ValidationError("point is not in the image interval");
}

double merge_point(const QuasiPair& pair, double xhat) {
    for (const auto& f : pair.scale().flats())
        if (same_value(xhat, f.value)) return 0.5 * (f.a + f.b);
    return merge_map(pair, xhat);
}

SplitSpace::SplitSpace(const QuasiPair& pair) : pair_(&pair) {
    if (pair.strictness() == Strictness::NonStrict) throw ValidationError("split space requires a strictly increasing scale");
}

double SplitSpace::s_star(const StarPoint& p) const {
    if (p.side < 0) return pair_->s_left(p.x);
    if (p.side > 0) return pair_->s_right(p.x);
    return pair_->s(p.x);
}

StarPoint SplitSpace::r_star(double xhat) const {
    for (const auto& b : pair_->scale().breakpoints()) {
        if (!b.jump()) continue;
        if (same_value(xhat, b.value)) return {b.x, 0};
        if (same_value(xhat, b.left)) return {b.x, -1};
        if (same_value(xhat, b.right)) return {b.x, +1};
    }
    return {merge_map(*pair_, xhat), 0};
}

std::vector<StarPoint> SplitSpace::copies(double x) const {
    const Breakpoint* b = pair_->scale().breakpoint_at(x);
    if (!b || !b->jump()) return {{x, 0}};
    std::vector<StarPoint> out;
    if (!same_value(b->left, b->value)) out.push_back({b->x, -1});
    out.push_back({b->x, 0});
    if (!same_value(b->right, b->value)) out.push_back({b->x, +1});
    return out;
}

std::string SplitSpace::label(const StarPoint& p) const {
    std::string s = format_real(p.x);
    if (p.side < 0) s += "-";
    if (p.side > 0) s += "+";
    return s;
}

DarnedSpace::DarnedSpace(const QuasiPair& pair) : pair_(&pair), flats_(pair.scale().flats()) {
    const auto& sc = pair.scale();
    for (const auto& f : flats_) {
        const Breakpoint* a = sc.breakpoint_at(f.a);
        const Breakpoint* b = sc.breakpoint_at(f.b);
        bool ok = true;
        if (a && !same_value(a->value, a->right)) ok = false;
        if (b && !same_value(b->left, b->value)) ok = false;
        if (!ok) {
            std::ostringstream os;
            os << "darning requires s(a)=s(a+) and s(b-)=s(b) at flat interval (" << format_real(f.a) << ","
               << format_real(f.b) << ")";
            throw ValidationError(os.str());
        }
        masses_.push_back(pair.measure().mass_closed(f.a, f.b));
    }
}

DarnPoint DarnedSpace::point(double x) const {
    for (std::size_t n = 0; n < flats_.size(); ++n)
        if ((x >= flats_[n].a || same_value(x, flats_[n].a)) && (x <= flats_[n].b || same_value(x, flats_[n].b)))
            return {true, static_cast<int>(n), x};
    return {false, -1, x};
}

double DarnedSpace::s_sharp(const DarnPoint& p) const {
    if (p.collapsed) return flats_[p.flat].value;
    return pair_->s(p.x);
}

DarnPoint DarnedSpace::merge(double xhat) const {
    for (std::size_t n = 0; n < flats_.size(); ++n)
        if (same_value(xhat, flats_[n].value)) return {true, static_cast<int>(n), 0.5 * (flats_[n].a + flats_[n].b)};
    return {false, -1, merge_map(*pair_, xhat)};
}

PointSet support(const Measure& m) {
    std::vector<std::pair<double, double>> parts;
    for (const auto& d : m.densities)
        if (!d.is_zero()) parts.push_back({d.x0, d.x1});
    for (const auto& a : m.atoms)
        if (a.mass > 0) parts.push_back({a.x, a.x});
    for (const auto& f : m.families) {
        long n = f.infinite() ? 100000 : f.count;
        double lim = f.limit();
        for (long k = 0; k < n; ++k) {
            double x = f.position(k);
            if (std::isinf(x) || (f.infinite() && same_value(x, lim))) break;
            parts.push_back({x, x});
        }
        if (f.infinite() && std::isfinite(lim)) parts.push_back({lim, lim});
    }
    return PointSet::merged(parts, false);
}

bool Supports::in_F_dot(double x) const {
    if (!F.contains(x)) return false;
    for (double e : excluded)
        if (same_value(e, x)) return false;
    return true;
}

Supports supports(const QuasiPair& pair) {
    if (pair.strictness() == Strictness::NonStrict) throw ValidationError("supports require a strictly increasing scale");
    Supports sp;
    sp.F = support(pair.measure());
    sp.F_hat = support(pair.image_measure());
    for (const auto& b : pair.scale().breakpoints()) {
        if (!b.jump() || !sp.F.contains(b.x)) continue;
        if (sp.F_hat.contains(b.value)) continue;
        bool l_ok = sp.F_hat.contains(b.left), r_ok = sp.F_hat.contains(b.right);
        if (!l_ok && !r_ok) throw ValidationError("neither one-sided scale limit lies in the image support");
        double st;
        if (l_ok && r_ok)
            st = pair.interval().stilde == StildePolicy::Left ? b.left : b.right;
        else
            st = l_ok ? b.left : b.right;
        sp.excluded.push_back(b.x);
        sp.stilde_at_excluded.push_back(st);
        sp.excluded_mass += pair.measure().atom_at(b.x);
    }
    return sp;
}

double stilde(const QuasiPair& pair, const Supports& sp, double x) {
    if (!sp.F.contains(x)) throw ValidationError("modified scale is defined on the support F only");
    for (std::size_t i = 0; i < sp.excluded.size(); ++i)
        if (same_value(sp.excluded[i], x)) return sp.stilde_at_excluded[i];
    return pair.s(x);
}

}  // namespace qd

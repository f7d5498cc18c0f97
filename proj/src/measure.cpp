#include "quasidiff/measure.hpp"

#include <algorithm>

namespace qd {

namespace {

// coef * integral of t^e over [t0, t1], 0 <= t0 <= t1 <= inf.
double int_pow(double coef, double e, double t0, double t1) {
    if (coef == 0.0 || t0 == t1) return 0.0;
    if (std::isinf(t1)) {
        if (e >= -1.0) return std::copysign(kInf, coef);
        return coef * (-std::pow(t0, e + 1.0)) / (e + 1.0);
    }
    if (t0 == 0.0) {
        if (e <= -1.0) return std::copysign(kInf, coef);
        return coef * std::pow(t1, e + 1.0) / (e + 1.0);
    }
    double lr = std::log1p((t1 - t0) / t0);
    if (e == -1.0) return coef * lr;
    return coef * std::pow(t0, e + 1.0) * std::expm1((e + 1.0) * lr) / (e + 1.0);
}

}  // namespace

DensityPiece DensityPiece::poly(double x0, double x1, std::vector<double> coeffs) {
    return poly(x0, x1, std::move(coeffs), std::isinf(x0) ? (std::isinf(x1) ? 0.0 : x1) : x0);
}

DensityPiece DensityPiece::poly(double x0, double x1, std::vector<double> coeffs, double origin) {
    DensityPiece p;
    p.x0 = x0;
    p.x1 = x1;
    p.kind = DensityKind::Poly;
    p.coeffs = std::move(coeffs);
    p.origin = origin;
    return p;
}

DensityPiece DensityPiece::power_law(double x0, double x1, double c, double pivot, double power) {
    DensityPiece p;
    p.x0 = x0;
    p.x1 = x1;
    p.kind = DensityKind::Power;
    p.c = c;
    p.pivot = pivot;
    p.power = power;
    return p;
}

double DensityPiece::eval(double x) const {
    if (!contains(x)) return 0.0;
    if (kind == DensityKind::Poly) {
        double u = x - origin, s = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) s = s * u + *it;
        return s;
    }
    double t = std::fabs(x - pivot);
    if (t == 0.0) return power < 0 ? kInf : (power == 0 ? c : 0.0);
    return c * std::pow(t, power);
}

bool DensityPiece::is_zero() const {
    if (x0 >= x1) return true;
    if (kind == DensityKind::Poly)
        return std::all_of(coeffs.begin(), coeffs.end(), [](double v) { return v == 0.0; });
    return c == 0.0;
}

bool DensityPiece::singular(double& where) const {
    if (kind != DensityKind::Power || c == 0.0) return false;
    if (power >= 0 && std::floor(power) == power) return false;
    if (pivot < x0 || pivot > x1) return false;
    where = pivot;
    return true;
}

double DensityPiece::moment(double a, double b, double center, int k) const {
    a = std::max(a, x0);
    b = std::min(b, x1);
    if (!(a < b) || is_zero()) return 0.0;
    if (kind == DensityKind::Poly) {
        if (std::isinf(a) || std::isinf(b)) return kInf;
        std::vector<double> gx, gw;
        gauss_rule(a, b, gx, gw);
        double s = 0.0;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            double f = eval(gx[i]);
            if (k == 1) f *= std::fabs(gx[i] - center);
            s += gw[i] * f;
        }
        return s;
    }
    // Power law: split at the pivot, integrate in t = |z - pivot|.
    double total = 0.0;
    auto side = [&](double lo, double hi, bool right) {
        if (!(lo < hi)) return;
        double t0 = right ? lo - pivot : pivot - hi;
        double t1 = right ? hi - pivot : pivot - lo;
        t0 = std::max(t0, 0.0);
        if (k == 0) {
            total += int_pow(c, power, t0, t1);
            return;
        }
        // |z - center| = sgn * ((pivot - center) +/- t) on a region not straddling center.
        double mid = std::isinf(lo) ? hi - 1.0 : (std::isinf(hi) ? lo + 1.0 : 0.5 * (lo + hi));
        double sgn = (mid - center) >= 0 ? 1.0 : -1.0;
        double dlt = pivot - center;
        double tsign = right ? 1.0 : -1.0;
        total += int_pow(sgn * c * dlt, power, t0, t1);
        total += int_pow(sgn * c * tsign, power + 1.0, t0, t1);
    };
    side(a, std::min(b, pivot), false);
    side(std::max(a, pivot), b, true);
    if (std::isinf(total) || std::isnan(total)) return kInf;
    return std::max(total, 0.0);
}

double DensityPiece::mass(double a, double b) const { return moment(a, b, 0.0, 0); }

DensityPiece DensityPiece::affine_image(double xa, double ya, double slope) const {
    auto map = [&](double x) {
        if (std::isinf(x)) return x;
        return ya + slope * (x - xa);
    };
    DensityPiece p = *this;
    p.x0 = map(x0);
    p.x1 = map(x1);
    if (kind == DensityKind::Poly) {
        p.origin = map(origin);
        double f = 1.0 / slope;
        for (auto& cj : p.coeffs) {
            cj *= f;
            f /= slope;
        }
    } else {
        p.pivot = map(pivot);
        p.c = c * std::pow(slope, -power - 1.0);
    }
    return p;
}

double AtomFamily::limit() const {
    if (q < 1.0) return center;
    return d > 0 ? kInf : -kInf;
}

void Measure::normalize() {
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    std::vector<Atom> merged;
    for (const auto& a : atoms) {
        if (a.mass == 0.0) continue;
        if (!merged.empty() && same_value(merged.back().x, a.x))
            merged.back().mass += a.mass;
        else
            merged.push_back(a);
    }
    atoms = std::move(merged);
    densities.erase(std::remove_if(densities.begin(), densities.end(),
                                   [](const DensityPiece& p) { return p.is_zero(); }),
                    densities.end());
    std::sort(densities.begin(), densities.end(),
              [](const DensityPiece& a, const DensityPiece& b) { return a.x0 < b.x0; });
}

bool Measure::empty() const { return atoms.empty() && densities.empty() && families.empty(); }

bool Measure::has_infinite_families() const {
    return std::any_of(families.begin(), families.end(), [](const AtomFamily& f) { return f.infinite(); });
}

double Measure::density(double x) const {
    double s = 0.0;
    for (const auto& p : densities) s += p.eval(x);
    return s;
}

double Measure::atom_at(double x) const {
    double s = 0.0;
    for (const auto& a : atoms)
        if (same_value(a.x, x)) s += a.mass;
    for (const auto& f : families) {
        long n = f.infinite() ? 4000 : f.count;
        for (long k = 0; k < n; ++k)
            if (same_value(f.position(k), x)) s += f.mass(k);
    }
    return s;
}

double Measure::mass(double a, double b) const {
    if (!(a < b)) return 0.0;
    double s = 0.0;
    for (const auto& at : atoms)
        if (at.x > a && at.x <= b) s += at.mass;
    for (const auto& p : densities) s += p.mass(a, b);
    for (const auto& f : families) {
        double lim = f.limit();
        bool tail_inside = f.infinite() && lim > a && lim <= b;
        long n = f.infinite() ? 100000 : f.count;
        for (long k = 0; k < n; ++k) {
            double x = f.position(k);
            if (x > a && x <= b) {
                if (tail_inside) {
                    // positions are monotone: every later atom is inside as well
                    if (f.rho >= 1.0) return kInf;
                    s += f.mass(k) / (1.0 - f.rho);
                    break;
                }
                s += f.mass(k);
            }
            if (f.q > 1.0 && x > b) break;
            if (f.q < 1.0 && std::fabs(x - lim) <= kAbsFloor) break;
        }
    }
    return s;
}

std::vector<Atom> Measure::all_atoms() const {
    std::vector<Atom> out = atoms;
    for (const auto& f : families) {
        if (f.infinite()) throw ValidationError("infinite atom family cannot be expanded");
        for (long k = 0; k < f.count; ++k) out.push_back({f.position(k), f.mass(k)});
    }
    std::sort(out.begin(), out.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    return out;
}

std::vector<double> Measure::breakpoints() const {
    std::vector<double> b;
    for (const auto& a : atoms) b.push_back(a.x);
    for (const auto& p : densities) {
        if (std::isfinite(p.x0)) b.push_back(p.x0);
        if (std::isfinite(p.x1)) b.push_back(p.x1);
        double w;
        if (p.singular(w)) b.push_back(w);
    }
    for (const auto& f : families) {
        long n = f.infinite() ? 0 : f.count;
        for (long k = 0; k < n; ++k) b.push_back(f.position(k));
    }
    std::sort(b.begin(), b.end());
    std::vector<double> u;
    for (double x : b)
        if (u.empty() || !same_value(u.back(), x)) u.push_back(x);
    return u;
}

double Measure::support_min() const {
    double m = kInf;
    for (const auto& a : atoms) m = std::min(m, a.x);
    for (const auto& p : densities) m = std::min(m, p.x0);
    for (const auto& f : families) m = std::min(m, f.q < 1.0 ? std::min(f.position(0), f.center) : f.position(0));
    return m;
}

double Measure::support_max() const {
    double m = -kInf;
    for (const auto& a : atoms) m = std::max(m, a.x);
    for (const auto& p : densities) m = std::max(m, p.x1);
    for (const auto& f : families) {
        if (f.infinite()) m = std::max(m, f.limit());
        else m = std::max(m, f.position(f.count - 1));
    }
    return m;
}

}  // namespace qd

#pragma once

#include "quasidiff/numeric.hpp"

#include <vector>

namespace qd {

struct Atom {
    double x;
    double mass;
};

enum class DensityKind { Poly, Power };

// Density with respect to length on [x0, x1]; either end may be infinite.
//   Poly:  sum_j coeffs[j] * (x - origin)^j
//   Power: c * |x - pivot|^power
struct DensityPiece {
    double x0 = 0.0, x1 = 0.0;
    DensityKind kind = DensityKind::Poly;
    double origin = 0.0;
    std::vector<double> coeffs;
    double c = 0.0, pivot = 0.0, power = 0.0;

    static DensityPiece poly(double x0, double x1, std::vector<double> coeffs);
    static DensityPiece poly(double x0, double x1, std::vector<double> coeffs, double origin);
    static DensityPiece power_law(double x0, double x1, double c, double pivot, double power);

    bool contains(double x) const { return x >= x0 && (x < x1 || (x == x1 && std::isinf(x1))); }
    double eval(double x) const;
    bool is_zero() const;
    // Pivot of a power law whose exponent is not a nonnegative integer.
    bool singular(double& where) const;
    // Integral of |z - center|^k w(z) over [a,b], k in {0,1}; +inf when divergent.
    // center must not lie strictly inside (a,b).
    double moment(double a, double b, double center, int k) const;
    double mass(double a, double b) const;
    // Pushforward under y = ya + slope*(x - xa), slope > 0.
    DensityPiece affine_image(double xa, double ya, double slope) const;
};

// Atoms at center + d*q^k with masses w*rho^k, k = 0..count-1 (count < 0: infinite).
struct AtomFamily {
    double center = 0.0, d = 0.0, q = 0.5;
    double w = 1.0, rho = 1.0;
    long count = -1;

    bool infinite() const { return count < 0; }
    double position(long k) const { return center + d * std::pow(q, static_cast<double>(k)); }
    double mass(long k) const { return w * std::pow(rho, static_cast<double>(k)); }
    // Limit of the positions as k grows.
    double limit() const;
};

class Measure {
  public:
    std::vector<Atom> atoms;
    std::vector<DensityPiece> densities;
    std::vector<AtomFamily> families;

    void normalize();
    bool empty() const;
    bool has_infinite_families() const;
    double density(double x) const;
    double atom_at(double x) const;
    // m((a,b]).
    double mass(double a, double b) const;
    // m([a,b]).
    double mass_closed(double a, double b) const { return mass(a, b) + atom_at(a); }
    // Atoms with families expanded (finite families only).
    std::vector<Atom> all_atoms() const;
    // Sorted finite breakpoints: atoms, density ends, singular pivots.
    std::vector<double> breakpoints() const;
    // Smallest/largest point charged (may be infinite).
    double support_min() const;
    double support_max() const;
};

}  // namespace qd

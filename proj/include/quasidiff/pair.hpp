#pragma once

#include "quasidiff/measure.hpp"
#include "quasidiff/scale.hpp"

#include <string>
#include <utility>
#include <vector>

namespace qd {

// Left boundary: instantaneous reflection at 0, the birth-death variant with an atom
// mu_0 at 0, or an unbounded left end (two-sided problem, left end -inf).
enum class LeftKind { Reflect, BirthDeathAtom, MinusInfinity };
enum class Strictness { ContinuousStrict, StrictDiscontinuous, NonStrict };
enum class StildePolicy { Left, Right };

const char* to_string(LeftKind k);
const char* to_string(Strictness s);

struct IntervalSpec {
    LeftKind left = LeftKind::Reflect;
    double r = kInf;
    bool r_included = false;
    double base = 0.0;  // underlying point e in I
    StildePolicy stilde = StildePolicy::Left;
};

// Union of disjoint closed parts (degenerate parts are points); the last part may be open at the right.
struct PointSet {
    std::vector<std::pair<double, double>> parts;
    bool right_open = false;

    bool contains(double y) const;
    // Distance-free emptiness of the open interval (a,b) intersected with the set.
    bool meets_open(double a, double b) const;
    std::string describe() const;
    static PointSet merged(std::vector<std::pair<double, double>> parts, bool right_open);
};

class QuasiPair {
  public:
    static QuasiPair validate(const ScaleFunction& scale, const Measure& measure, const IntervalSpec& spec);

    const ScaleFunction& scale() const { return scale_; }
    const Measure& measure() const { return measure_; }
    const Measure& image_measure() const { return image_; }
    const IntervalSpec& interval() const { return spec_; }
    const PointSet& image_set() const { return image_set_; }
    Strictness strictness() const { return strictness_; }

    double l() const { return scale_.left_end(); }
    double r() const { return scale_.right_end(); }
    double l_hat() const { return l_hat_; }
    double r_hat() const { return r_hat_; }
    double base_hat() const { return base_hat_; }
    bool r_included() const { return spec_.r_included; }
    // Image atom at 0 (birth-death left condition only).
    double mu0() const { return mu0_; }
    // m({r}) when r is included, else 0.
    double m_r() const;

    bool in_I(double x) const;
    double s(double x) const { return scale_.value(x); }
    double s_left(double x) const { return scale_.left_limit(x); }
    double s_right(double x) const { return scale_.right_limit(x); }

  private:
    ScaleFunction scale_;
    Measure measure_;
    Measure image_;
    IntervalSpec spec_;
    PointSet image_set_;
    Strictness strictness_ = Strictness::ContinuousStrict;
    double l_hat_ = 0.0, r_hat_ = kInf, base_hat_ = 0.0, mu0_ = 0.0;
};

// Pushforward of the speed measure under the scale.
Measure image_measure(const ScaleFunction& scale, const Measure& m);

// Merge map r: I-hat -> I (strict class).
double merge_map(const QuasiPair& pair, double xhat);
// Like merge_map, but a flat value goes to the midpoint of its flat (as in I#).
double merge_point(const QuasiPair& pair, double xhat);

// Point of the split space I*: side -1, 0, +1 selects s(x-), s(x), s(x+).
struct StarPoint {
    double x = 0.0;
    int side = 0;
    bool operator==(const StarPoint& o) const { return x == o.x && side == o.side; }
};

class SplitSpace {
  public:
    explicit SplitSpace(const QuasiPair& pair);

    double s_star(const StarPoint& p) const;
    StarPoint r_star(double xhat) const;
    // All copies of x in I* (one unless x is a jump point of s).
    std::vector<StarPoint> copies(double x) const;
    std::string label(const StarPoint& p) const;

  private:
    const QuasiPair* pair_;
};

// Point of the darned space I#: either an ordinary x or the collapsed flat n.
struct DarnPoint {
    bool collapsed = false;
    int flat = -1;
    double x = 0.0;
};

class DarnedSpace {
  public:
    explicit DarnedSpace(const QuasiPair& pair);  // throws when condition (flat endpoints) fails

    const std::vector<FlatInterval>& flats() const { return flats_; }
    const std::vector<double>& flat_masses() const { return masses_; }
    DarnPoint point(double x) const;
    double s_sharp(const DarnPoint& p) const;
    DarnPoint merge(double xhat) const;

  private:
    const QuasiPair* pair_;
    std::vector<FlatInterval> flats_;
    std::vector<double> masses_;
};

PointSet support(const Measure& m);

struct Supports {
    PointSet F;       // supp m
    PointSet F_hat;   // supp m-hat
    std::vector<double> excluded;  // F \ F-dot (finite)
    std::vector<double> stilde_at_excluded;
    double excluded_mass = 0.0;

    bool in_F(double x) const { return F.contains(x); }
    bool in_F_dot(double x) const;
};

Supports supports(const QuasiPair& pair);
// Modified scale on F.
double stilde(const QuasiPair& pair, const Supports& sp, double x);

}  // namespace qd

#pragma once

#include "quasidiff/harmonic.hpp"
#include "quasidiff/piecewise.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qd {

// State spaces: I (plain), I* (split), F with s-tilde (modified), F-dot (restricted), I# (darned).
enum class Regime { Plain, Split, Modified, Restricted, Darned };
enum class Normalization { Paper, Probabilistic };

const char* to_string(Regime r);
Regime parse_regime(const std::string& s);
Normalization parse_normalization(const std::string& s);

class Kernel {
  public:
    // c multiplies the verbatim kernel phi(min) v(max) / W.
    Kernel(HarmonicSolution sol, Regime regime, double c = 1.0);

    double alpha() const { return sol_.alpha(); }
    double c() const { return c_; }
    Regime regime() const { return regime_; }
    const HarmonicSolution& solution() const { return sol_; }
    const QuasiPair& pair() const { return sol_.pair(); }

    // Kernel in image coordinates.
    double eval_hat(double xh, double yh) const;
    // x-derivative (side +1/-1) of the image kernel.
    double dx_hat(double xh, double yh, int side) const;

    // Image coordinate of a state of the regime's space; throws off the state space.
    double map(double x) const;
    double map(const StarPoint& p) const;
    double map(const DarnPoint& p) const;

    double operator()(double x, double y) const { return eval_hat(map(x), map(y)); }
    double operator()(const StarPoint& x, const StarPoint& y) const { return eval_hat(map(x), map(y)); }
    double operator()(const DarnPoint& x, const DarnPoint& y) const { return eval_hat(map(x), map(y)); }

    const SplitSpace* split() const { return split_.get(); }
    const Supports* supports_info() const { return supp_.get(); }
    const DarnedSpace* darned() const { return darn_.get(); }

  private:
    HarmonicSolution sol_;
    Regime regime_;
    double c_;
    std::shared_ptr<const SplitSpace> split_;
    std::shared_ptr<const Supports> supp_;
    std::shared_ptr<const DarnedSpace> darn_;
};

// Quadrature for integrals against m on I, adapted to the cells of a solution.
class MeasureQuadrature {
  public:
    struct Panel {
        double a = 0.0, b = 0.0;     // in I
        double ya = 0.0, slope = 0.0; // image map y = ya + slope (x - a)
        std::vector<double> x, w;   // nodes and weights (density included)
        double yh(double xx) const { return ya + slope * (xx - a); }
    };
    struct PointMass {
        double x = 0.0, yh = 0.0, mass = 0.0;
    };

    MeasureQuadrature(const HarmonicSolution& sol, const std::vector<double>& extra_breaks = {});

    const std::vector<Panel>& panels() const { return panels_; }
    const std::vector<PointMass>& atoms() const { return atoms_; }
    // Integral of h(x, s(x)) m(dx).
    double integrate(const std::function<double(double, double)>& h) const;

  private:
    std::vector<Panel> panels_;
    std::vector<PointMass> atoms_;
};

// R f(xh) = c/W [ v(xh) int_{y<=xh} phi f dm + phi(xh) int_{y>xh} v f dm ].
class ResolventTable {
  public:
    ResolventTable(const Kernel& K, const std::function<double(double)>& f, const std::vector<double>& f_breaks);
    ResolventTable(const Kernel& K, const PiecewiseFunction& f);

    double at_hat(double xh) const;
    // One-sided image derivative of R f.
    double d_hat(double xh, int side) const;
    double operator()(double x) const { return at_hat(K_->map(x)); }
    double operator()(const StarPoint& x) const { return at_hat(K_->map(x)); }
    const MeasureQuadrature& quadrature() const { return *quad_; }

  private:
    double lower(double xh) const;  // int_{y<=xh} phi f dm
    double upper(double xh) const;  // int_{y>xh} v f dm

    const Kernel* K_;
    std::shared_ptr<const MeasureQuadrature> quad_;
    struct PanelData {
        std::vector<double> cphi, cv;  // antiderivative coefficients on [-1, 1], scaled to x
        double tot_phi = 0.0, tot_v = 0.0;
        double yb = 0.0;
    };
    std::vector<PanelData> pd_;
    std::vector<double> pre_phi_, suf_v_;     // over panels
    std::vector<double> atom_y_, apre_phi_, asuf_v_;
};

double resolvent_apply(const Kernel& K, const PiecewiseFunction& f, double x);

struct IdentityCheck {
    double factor = kNaN;  // c' in R_a f - R_b f = c' (b - a) R_a R_b f
    double residual = 0.0;
    bool determinate = false;
};
IdentityCheck resolvent_identity_check(const Kernel& Ka, const Kernel& Kb, const PiecewiseFunction& f,
                                       const std::vector<double>& points_hat);

struct ColumnCheck {
    double max_residual = 0.0;  // interior cells, relative
    double diagonal_jump = kNaN; // D+ g - D- g - 2 alpha g m({y}) at x = y (should be -c)
    int intervals = 0;
};
// Kernel column g(., y) is alpha-harmonic off y: 1/2 (Dg(b) - Dg(a)) = alpha int_(a,b] g dm on grid intervals.
ColumnCheck harmonic_residual_check(const Kernel& K, double y_hat, const std::vector<double>& grid_hat);

struct BoundaryCheck {
    double left = kNaN;
    std::optional<double> right;
};
BoundaryCheck boundary_condition_check(const Kernel& K, const PiecewiseFunction& f);

}  // namespace qd

#pragma once

#include "quasidiff/boundary.hpp"
#include "quasidiff/pair.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace qd {

enum class GammaChoice { Auto, Bar, Underline };

const char* to_string(GammaChoice g);

struct HarmonicOptions {
    double tol = 1e-15;   // relative remainder of the cell series
    double theta = 0.5;   // bound on 2*alpha*sigma per cell
    int max_terms = 200;
    GammaChoice gamma = GammaChoice::Auto;
};

// One cell of an outward sweep, in the distance coordinate t = |x_hat - e_hat|.
struct SweepCell {
    double t0 = 0.0, t1 = 0.0;
    bool cheb = false;
    double A = 1.0, B = 0.0;     // f(t0), f'(t0+)
    double f1 = 1.0, df1 = 0.0;  // f(t1), f'(t1-)
    std::vector<double> cf, cdf;
    double integral = 0.0;       // of f^-2 over the cell
    double near0 = 0.0;          // of f^-2 over [0, t0]
    double far1 = 0.0;           // of f^-2 over [t1, T]
    int terms = 0;
};

// Solution of the outward problem on one side of e_hat.
struct Sweep {
    int dir = 1;
    double T = 0.0;              // distance from e_hat to the end of the side
    std::vector<SweepCell> cells;
    double reach = 0.0;          // evaluation limit (T unless the march was cut)
    double tail_bound = 0.0;     // bound on the dropped part of the f^-2 integral
    double total = 0.0;          // of f^-2 over [0, T]
    int max_terms = 0;

    std::size_t locate(double t) const;
    double f(double t) const;
    double df_plus(double t) const;
    double df_minus(double t) const;
    double near(double t) const;  // of f^-2 over [0, t]
    double far(double t) const;   // of f^-2 over [t, T]
};

// alpha-harmonic solutions in image space, built from the base solution u_hat with
// u_hat(e_hat) = 1, D u_hat(e_hat) = 0.
//   phi = u_hat (p + q L),  v = u_hat (eps + gamma R),
//   L(x) = int_{l_hat}^x u_hat^-2,  R(x) = int_x^{r_hat} u_hat^-2.
class HarmonicSolution {
  public:
    static HarmonicSolution build(const QuasiPair& pair, double alpha, const HarmonicOptions& opt = {});
    HarmonicSolution with_gamma(GammaChoice g) const;

    double alpha() const { return alpha_; }
    double l_hat() const { return l_hat_; }
    double r_hat() const { return r_hat_; }
    double base_hat() const { return e_; }
    const BoundaryClass& boundary() const { return bc_; }
    const std::optional<BoundaryClass>& left_boundary() const { return left_bc_; }
    LeftKind left_condition() const { return left_; }
    double mu0() const { return mu0_; }

    double gamma_bar() const { return gamma_bar_; }
    double gamma_underline() const { return gamma_under_; }
    double gamma_used() const { return gamma_; }
    GammaChoice gamma_choice() const { return choice_; }
    double epsilon() const { return eps_; }
    double p() const { return p_; }
    double q() const { return q_; }
    double total() const { return total_; }
    // W(phi, v) = D+phi v - phi D+v.
    double wronskian() const { return W_; }
    double u_at_r() const { return u_r_; }
    double du_at_r() const { return du_r_; }
    int max_terms_used() const;
    double tail_bound() const;

    // Evaluable range of the image coordinate.
    double lo() const;
    double hi() const;

    double u(double x) const;
    double du(double x, int side = 1) const;
    double L(double x) const;
    double R(double x) const;
    double u_minus(double x) const { return u(x) * L(x); }
    double u_plus(double x) const { return u(x) * R(x); }
    double du_minus(double x, int side = 1) const;
    double du_plus(double x, int side = 1) const;
    double v(double x) const;
    double dv(double x, int side = 1) const;
    double phi(double x) const;
    double dphi(double x, int side = 1) const;
    double wronskian_at(double x) const;

    // Cell boundaries, plus `per_cell` interior points per cell.
    std::vector<double> grid(int per_cell = 0) const;
    // Image atoms inside (l_hat, r_hat) used by the sweep.
    const std::vector<Atom>& atoms() const { return atoms_; }
    const QuasiPair& pair() const { return *pair_; }

  private:
    void finish_gamma();
    double t_of(double x, const Sweep*& s) const;

    std::shared_ptr<const QuasiPair> pair_;
    std::shared_ptr<const Sweep> right_, left_sw_;
    std::vector<Atom> atoms_;
    BoundaryClass bc_;
    std::optional<BoundaryClass> left_bc_;
    LeftKind left_ = LeftKind::Reflect;
    GammaChoice choice_ = GammaChoice::Auto;
    double alpha_ = 1.0, e_ = 0.0, l_hat_ = 0.0, r_hat_ = kInf, mu0_ = 0.0, m_r_ = 0.0;
    double total_ = 0.0, left_total_ = 0.0, right_total_ = 0.0;
    double u_r_ = kNaN, du_r_ = kNaN;
    double gamma_bar_ = 0.0, gamma_under_ = 0.0, gamma_ = 0.0, eps_ = 0.0, p_ = 1.0, q_ = 0.0, W_ = 0.0;
};

// Whole-range series sum (2 alpha)^n u^n on [e_hat, x_max] (right of the base), for cross-checks.
struct SeriesResult {
    std::vector<double> values;
    int terms = 0;
    double bound = 0.0;  // certified remainder bound relative to u >= 1
    bool converged = false;
};
SeriesResult u_series_global(const HarmonicSolution& sol, const std::vector<double>& points, double tol,
                             int max_terms = 200);

struct ResidualReport {
    double max_cell = 0.0;      // interior residual divided by its tolerance
    double max_jump = 0.0;      // atom jump mismatch relative to the one-sided derivatives
    double max_wronskian = 0.0; // relative deviation from the formula value
    int cells_checked = 0;
    int atoms_checked = 0;
};
ResidualReport check_residuals(const HarmonicSolution& sol);

// Monotonicity/positivity audit on the grid; returns the worst violation (0 when clean).
double monotonicity_violation(const HarmonicSolution& sol, int per_cell = 2);

// T^{-1}: f(x) = fhat(s(x)), side -1/0/+1 picks s(x-), s(x), s(x+).
double pull_back(const std::function<double(double)>& fhat, const QuasiPair& pair, double x, int side = 0);
// T: fhat(xhat) = f(r(xhat)).
double push(const std::function<double(double)>& f, const QuasiPair& pair, double xhat);

struct BirthDeathSolutions {
    HarmonicSolution minimal;  // gamma = gamma_bar
    HarmonicSolution q_one;    // gamma = gamma_underline
};
BirthDeathSolutions birth_death_solutions(const QuasiPair& pair, double alpha, const HarmonicOptions& opt = {});

}  // namespace qd

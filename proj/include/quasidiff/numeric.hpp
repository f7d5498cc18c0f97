#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace qd {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Equality of scale values: relative 1e-12 with absolute floor 1e-300.
inline constexpr double kRelTol = 1e-12;
inline constexpr double kAbsFloor = 1e-300;

inline bool same_value(double a, double b) {
    if (a == b) return true;
    if (std::isinf(a) || std::isinf(b)) return false;
    double s = std::max(std::fabs(a), std::fabs(b));
    return std::fabs(a - b) <= std::max(kRelTol * s, kAbsFloor);
}

inline bool strictly_less(double a, double b) { return a < b && !same_value(a, b); }

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Validation failure of a pair or of a requested operation on it.
class ValidationError : public Error {
  public:
    using Error::Error;
};

// A divergence verdict that could not be certified.
class InconclusiveError : public Error {
  public:
    using Error::Error;
};

// Chebyshev interpolation on first-kind points (Fejer nodes), endpoints excluded.
class ChebBasis {
  public:
    explicit ChebBasis(int n);

    int size() const { return n_; }
    // Nodes on [-1,1], ascending.
    const std::vector<double>& nodes() const { return t_; }

    // Node values -> coefficients of the degree n-1 interpolant.
    std::vector<double> coeffs(const std::vector<double>& values) const;
    // Coefficients of the antiderivative vanishing at -1 (degree n).
    static std::vector<double> antiderivative(const std::vector<double>& c);
    // Clenshaw evaluation at t in [-1,1].
    static double eval(const std::vector<double>& c, double t);
    // Cumulative integral from -1 at the nodes, applied to node values.
    std::vector<double> cumulative(const std::vector<double>& values) const;
    // Integral over [-1,1] from node values.
    double integral(const std::vector<double>& values) const;

  private:
    int n_;
    std::vector<double> t_;
    std::vector<double> v2c_;  // n x n, row-major
    std::vector<double> cum_;  // n x n, row-major
    std::vector<double> wts_;  // n
};

const ChebBasis& cheb_basis();

// Gauss-Legendre rule on [a,b] with the library's fixed 30-point rule.
void gauss_rule(double a, double b, std::vector<double>& x, std::vector<double>& w);

// Pairwise (cascade) summation, deterministic order.
double pairwise_sum(const double* v, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

std::string format_real(double x);

}  // namespace qd

#pragma once

#include "quasidiff/numeric.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace qd {

// Piece of a bounded test function on the closed interval [x0, x1] (x0 == x1 allowed),
// sum_j coeffs[j] * (x - x0)^j.
struct FunctionPiece {
    double x0 = 0.0, x1 = 0.0;
    std::vector<double> coeffs;
    double eval(double x) const;
};

// Piecewise polynomial test function; the first piece containing x wins, zero elsewhere.
class PiecewiseFunction {
  public:
    PiecewiseFunction() = default;
    explicit PiecewiseFunction(std::vector<FunctionPiece> pieces) : pieces_(std::move(pieces)) {}

    static PiecewiseFunction constant(double c);
    static PiecewiseFunction indicator(double a, double b, double c = 1.0);
    static PiecewiseFunction point(double x, double c = 1.0);

    // "const:c", "ind:a:b", "point:x", a bare number, or a JSON object {"pieces": [[x0, x1, [c...]]]}.
    static PiecewiseFunction parse(const std::string& spec);
    static PiecewiseFunction from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    double operator()(double x) const;
    const std::vector<FunctionPiece>& pieces() const { return pieces_; }
    bool is_zero() const;
    // Finite breakpoints (piece ends).
    std::vector<double> breakpoints() const;
    double sup_abs() const;

  private:
    std::vector<FunctionPiece> pieces_;
};

}  // namespace qd

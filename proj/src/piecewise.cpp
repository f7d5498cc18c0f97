#include "quasidiff/piecewise.hpp"

#include "quasidiff/config.hpp"

#include <algorithm>
#include <sstream>

namespace qd {

double FunctionPiece::eval(double x) const {
    double u = std::isinf(x0) ? 0.0 : x - x0, s = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) s = s * u + *it;
    return s;
}

PiecewiseFunction PiecewiseFunction::constant(double c) { return PiecewiseFunction({{-kInf, kInf, {c}}}); }

PiecewiseFunction PiecewiseFunction::indicator(double a, double b, double c) {
    if (!(a <= b)) throw ValidationError("indicator needs a <= b");
    return PiecewiseFunction({{a, b, {c}}});
}

PiecewiseFunction PiecewiseFunction::point(double x, double c) { return PiecewiseFunction({{x, x, {c}}}); }

PiecewiseFunction PiecewiseFunction::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("pieces")) throw ValidationError("function spec: expected {\"pieces\": [...]}");
    std::vector<FunctionPiece> pieces;
    for (const auto& e : j["pieces"]) {
        if (!e.is_array() || e.size() != 3 || !e[2].is_array())
            throw ValidationError("function spec: piece must be [x0, x1, [coeffs]]");
        FunctionPiece p;
        p.x0 = json_real(e[0]);
        p.x1 = json_real(e[1]);
        if (!(p.x0 <= p.x1)) throw ValidationError("function spec: piece with x0 > x1");
        for (const auto& c : e[2]) p.coeffs.push_back(json_real(c));
        if (p.coeffs.size() > 1 && (std::isinf(p.x0) || std::isinf(p.x1)))
            throw ValidationError("function spec: non-constant piece on an unbounded range is not bounded");
        pieces.push_back(std::move(p));
    }
    return PiecewiseFunction(std::move(pieces));
}

nlohmann::json PiecewiseFunction::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : pieces_) {
        nlohmann::json c = nlohmann::json::array();
        for (double v : p.coeffs) c.push_back(real_json(v));
        arr.push_back({real_json(p.x0), real_json(p.x1), c});
    }
    return {{"pieces", arr}};
}

PiecewiseFunction PiecewiseFunction::parse(const std::string& spec) {
    auto num = [&](const std::string& s) {
        try {
            return json_real(nlohmann::json(s));
        } catch (const ValidationError&) {
            throw ValidationError("function spec: bad number '" + s + "' in '" + spec + "'");
        }
    };
    if (spec.empty()) throw ValidationError("function spec is empty");
    if (spec.front() == '{') {
        try {
            return from_json(nlohmann::json::parse(spec));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("function spec is not valid JSON: ") + e.what());
        }
    }
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() == 1) return constant(num(parts[0]));
    if (parts[0] == "const" && parts.size() == 2) return constant(num(parts[1]));
    if (parts[0] == "ind" && parts.size() == 3) return indicator(num(parts[1]), num(parts[2]));
    if (parts[0] == "point" && parts.size() == 2) return point(num(parts[1]));
    throw ValidationError("function spec not understood: '" + spec + "'");
}

double PiecewiseFunction::operator()(double x) const {
    for (const auto& p : pieces_)
        if (x >= p.x0 && x <= p.x1) return p.eval(x);
    return 0.0;
}

bool PiecewiseFunction::is_zero() const {
    return std::all_of(pieces_.begin(), pieces_.end(), [](const FunctionPiece& p) {
        return std::all_of(p.coeffs.begin(), p.coeffs.end(), [](double c) { return c == 0.0; });
    });
}

std::vector<double> PiecewiseFunction::breakpoints() const {
    std::vector<double> b;
    for (const auto& p : pieces_) {
        if (std::isfinite(p.x0)) b.push_back(p.x0);
        if (std::isfinite(p.x1)) b.push_back(p.x1);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

double PiecewiseFunction::sup_abs() const {
    double s = 0.0;
    for (const auto& p : pieces_) {
        if (p.coeffs.size() <= 1) {
            s = std::max(s, p.coeffs.empty() ? 0.0 : std::fabs(p.coeffs[0]));
            continue;
        }
        std::vector<double> gx, gw;
        gauss_rule(p.x0, p.x1, gx, gw);
        gx.push_back(p.x0);
        gx.push_back(p.x1);
        for (double x : gx) s = std::max(s, std::fabs(p.eval(x)));
    }
    return s;
}

}  // namespace qd

#include "quasidiff/numeric.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <charconv>
#include <numbers>

namespace qd {

ChebBasis::ChebBasis(int n) : n_(n), t_(n), v2c_(n * n), cum_(n * n), wts_(n) {
    for (int j = 0; j < n; ++j) t_[j] = -std::cos((2.0 * j + 1.0) * std::numbers::pi / (2.0 * n));
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            double tk = std::cos(k * std::acos(t_[j]));
            v2c_[k * n + j] = (k == 0 ? 1.0 : 2.0) * tk / n;
        }
    }
    std::vector<double> e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        auto a = antiderivative(coeffs(e));
        for (int i = 0; i < n; ++i) cum_[i * n + j] = eval(a, t_[i]);
        wts_[j] = eval(a, 1.0);
    }
}

std::vector<double> ChebBasis::coeffs(const std::vector<double>& values) const {
    std::vector<double> c(n_, 0.0);
    for (int k = 0; k < n_; ++k) {
        double s = 0.0;
        for (int j = 0; j < n_; ++j) s += v2c_[k * n_ + j] * values[j];
        c[k] = s;
    }
    return c;
}

std::vector<double> ChebBasis::antiderivative(const std::vector<double>& c) {
    const int n = static_cast<int>(c.size());
    std::vector<double> a(n + 1, 0.0);
    auto at = [&](int k) { return (k >= 0 && k < n) ? c[k] : 0.0; };
    if (n > 0) a[1] = at(0) - 0.5 * at(2);
    for (int k = 2; k <= n; ++k) a[k] = (at(k - 1) - at(k + 1)) / (2.0 * k);
    double s = 0.0;
    for (int k = 1; k <= n; ++k) s += (k % 2 ? -a[k] : a[k]);
    a[0] = -s;
    return a;
}

double ChebBasis::eval(const std::vector<double>& c, double t) {
    double b1 = 0.0, b2 = 0.0;
    for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) {
        double b0 = 2.0 * t * b1 - b2 + c[k];
        b2 = b1;
        b1 = b0;
    }
    return t * b1 - b2 + (c.empty() ? 0.0 : c[0]);
}

std::vector<double> ChebBasis::cumulative(const std::vector<double>& values) const {
    std::vector<double> out(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int j = 0; j < n_; ++j) s += cum_[i * n_ + j] * values[j];
        out[i] = s;
    }
    return out;
}

double ChebBasis::integral(const std::vector<double>& values) const {
    double s = 0.0;
    for (int j = 0; j < n_; ++j) s += wts_[j] * values[j];
    return s;
}

const ChebBasis& cheb_basis() {
    static const ChebBasis basis(24);
    return basis;
}

void gauss_rule(double a, double b, std::vector<double>& x, std::vector<double>& w) {
    using G = boost::math::quadrature::gauss<double, 30>;
    const auto& ab = G::abscissa();
    const auto& wt = G::weights();
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < ab.size(); ++i) {
        if (ab[i] == 0.0) {
            x.push_back(c);
            w.push_back(h * wt[i]);
            continue;
        }
        x.push_back(c - h * ab[i]);
        w.push_back(h * wt[i]);
        x.push_back(c + h * ab[i]);
        w.push_back(h * wt[i]);
    }
}

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

}  // namespace qd

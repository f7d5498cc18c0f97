#include "quasidiff/boundary.hpp"

#include <algorithm>

namespace qd {

const char* to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::Regular: return "Regular";
        case BoundaryKind::Exit: return "Exit";
        case BoundaryKind::Entrance: return "Entrance";
        case BoundaryKind::Natural: return "Natural";
    }
    return "?";
}

const char* to_string(Refinement r) { return r == Refinement::Reflecting ? "Reflecting" : "Absorbing"; }

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Finite: return "finite";
        case Verdict::Infinite: return "infinite";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

ExtValue certified_series(const std::function<double(long)>& term, long budget) {
    constexpr long kWindow = 64;
    double sum = 0.0;
    std::vector<double> t;
    t.reserve(1024);
    for (long k = 0; k < budget; ++k) {
        double v = term(k);
        if (std::isnan(v) || v < 0) return {sum, Verdict::Inconclusive};
        if (std::isinf(v)) return {kInf, Verdict::Infinite};
        sum += v;
        if (std::isinf(sum)) return {kInf, Verdict::Infinite};
        t.push_back(v);
        if (k < kWindow || (k + 1) % kWindow != 0) continue;
        // ratio window over the last kWindow terms
        std::size_t n = t.size();
        bool all_zero = true;
        double rmax = 0.0, rmin = kInf;
        for (std::size_t i = n - kWindow; i + 1 < n; ++i) {
            if (t[i] != 0.0 || t[i + 1] != 0.0) all_zero = false;
            if (t[i] == 0.0) {
                if (t[i + 1] != 0.0) rmax = kInf;
                continue;
            }
            double r = t[i + 1] / t[i];
            rmax = std::max(rmax, r);
            rmin = std::min(rmin, r);
        }
        if (all_zero) return {sum, Verdict::Finite};
        if (rmax < 1.0) {
            double tail = t.back() * rmax / (1.0 - rmax);
            if (tail <= 1e-15 * sum) return {sum + tail, Verdict::Finite};
        }
        if (rmin >= 1.0 && t.back() > 0.0) return {kInf, Verdict::Infinite};
        if (t.size() > 4 * kWindow) t.erase(t.begin(), t.end() - 2 * kWindow);
    }
    return {sum, Verdict::Inconclusive};
}

namespace {

void add(ExtValue& acc, const ExtValue& v) {
    if (acc.verdict == Verdict::Infinite || v.verdict == Verdict::Infinite) {
        acc = {kInf, Verdict::Infinite};
        return;
    }
    if (v.verdict == Verdict::Inconclusive) acc.verdict = Verdict::Inconclusive;
    acc.value += v.value;
}

ExtValue finite_or_inf(double x) {
    if (std::isinf(x)) return {kInf, Verdict::Infinite};
    return {x, Verdict::Finite};
}

}  // namespace

SigmaLambda sigma_lambda(const Measure& mhat, double ref, double end) {
    SigmaLambda out;
    const bool right = end > ref;
    const double lo = right ? ref : end, hi = right ? end : ref;
    auto inside = [&](double z) { return z > lo && z < hi && !same_value(z, lo) && !same_value(z, hi); };
    // infinite end: sigma is infinite as soon as the region carries mass
    const bool unbounded = std::isinf(end);
    bool charged = false;

    for (const auto& a : mhat.atoms) {
        if (!inside(a.x) || a.mass <= 0) continue;
        charged = true;
        if (!unbounded) add(out.sigma, finite_or_inf(std::fabs(end - a.x) * a.mass));
        add(out.lambda, finite_or_inf(std::fabs(a.x - ref) * a.mass));
    }
    for (const auto& d : mhat.densities) {
        double a = std::max(lo, d.x0), b = std::min(hi, d.x1);
        if (!(a < b) || d.is_zero()) continue;
        // split at the reference point so that moments stay one-signed
        std::vector<double> cuts{a, b};
        double w;
        if (d.singular(w) && w > a && w < b) cuts.push_back(w);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double m0 = d.moment(cuts[i], cuts[i + 1], 0.0, 0);
            if (m0 > 0) charged = true;
            if (!unbounded) add(out.sigma, finite_or_inf(d.moment(cuts[i], cuts[i + 1], end, 1)));
            add(out.lambda, finite_or_inf(d.moment(cuts[i], cuts[i + 1], ref, 1)));
        }
    }
    for (const auto& f : mhat.families) {
        long n = f.infinite() ? 1000000 : f.count;
        // positions accumulating at a finite end round onto it; use the exact gap d q^k instead
        const bool to_end = !unbounded && f.infinite() && same_value(f.limit(), end);
        auto in_term = [&](long k, bool sig) {
            double z = f.position(k);
            double gap = std::fabs(f.d) * std::pow(f.q, static_cast<double>(k));
            bool in = inside(z) || (to_end && (right ? z > lo : z < hi));
            if (!in) return 0.0;
            return (sig ? (to_end ? gap : std::fabs(end - z)) : std::fabs(z - ref)) * f.mass(k);
        };
        if (f.infinite()) {
            charged = true;
            if (!unbounded) add(out.sigma, certified_series([&](long k) { return in_term(k, true); }, n));
            add(out.lambda, certified_series([&](long k) { return in_term(k, false); }, n));
        } else {
            for (long k = 0; k < n; ++k) {
                if (inside(f.position(k))) charged = true;
                if (!unbounded) add(out.sigma, finite_or_inf(in_term(k, true)));
                add(out.lambda, finite_or_inf(in_term(k, false)));
            }
        }
    }
    if (unbounded) out.sigma = charged ? ExtValue{kInf, Verdict::Infinite} : ExtValue{0.0, Verdict::Finite};
    return out;
}

SigmaLambda sigma_lambda(const QuasiPair& pair) {
    double ref = pair.interval().left == LeftKind::MinusInfinity ? pair.base_hat() : 0.0;
    return sigma_lambda(pair.image_measure(), ref, pair.r_hat());
}

BoundaryClass classify_image(const Measure& mhat, double ref, double end, bool end_in_set) {
    BoundaryClass bc;
    auto sl = sigma_lambda(mhat, ref, end);
    bc.sigma_hat = sl.sigma;
    bc.lambda_hat = sl.lambda;
    if (sl.sigma.verdict == Verdict::Inconclusive || sl.lambda.verdict == Verdict::Inconclusive) {
        bc.conclusive = false;
        bc.note = "divergence of sigma-hat or lambda-hat could not be certified within the term budget";
        return bc;
    }
    bool sf = sl.sigma.finite(), lf = sl.lambda.finite();
    if (sf && lf)
        bc.kind = BoundaryKind::Regular;
    else if (sf)
        bc.kind = BoundaryKind::Exit;
    else if (lf)
        bc.kind = BoundaryKind::Entrance;
    else
        bc.kind = BoundaryKind::Natural;
    if (bc.kind == BoundaryKind::Regular) {
        bc.refinement = end_in_set ? Refinement::Reflecting : Refinement::Absorbing;
        if (end_in_set) bc.instantaneous = mhat.atom_at(end) == 0.0;
    }
    return bc;
}

BoundaryClass classify(const QuasiPair& pair) {
    double ref = pair.interval().left == LeftKind::MinusInfinity ? pair.base_hat() : 0.0;
    return classify_image(pair.image_measure(), ref, pair.r_hat(), pair.r_included());
}

BoundaryClass classify_left(const QuasiPair& pair) {
    if (pair.interval().left != LeftKind::MinusInfinity)
        throw ValidationError("left end classification applies to the two-sided left condition only");
    return classify_image(pair.image_measure(), pair.base_hat(), -kInf, false);
}

}  // namespace qd

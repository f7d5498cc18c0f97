#include "quasidiff/simulate.hpp"

#include <algorithm>
#include <sstream>

namespace qd {

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(path), std::uint32_t(path >> 32)};
    return std::mt19937_64(seq);
}

namespace {

int chain_start(const AtomicChain& ch, double x0, double y0) {
    for (int i = 0; i < ch.size(); ++i)
        if (same_value(ch.x[i], x0) || same_value(ch.yh[i], y0)) return i;
    throw ValidationError("start point " + format_real(x0) + " is not an atom of the measure");
}

void push_state(PathSample& p, double t, double x, double xh) {
    if (!p.states_hat.empty() && p.states_hat.back() == xh) return;
    p.times.push_back(t);
    p.states.push_back(x);
    p.states_hat.push_back(xh);
}

PathSample chain_path(const AtomicChain& ch, int i, double horizon, std::mt19937_64& rng) {
    PathSample p;
    p.horizon = horizon;
    push_state(p, 0.0, ch.x[i], ch.yh[i]);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double t = 0.0;
    for (;;) {
        double q = ch.holding_rate(i);
        if (!(q > 0)) break;
        t += std::exponential_distribution<double>(q)(rng);
        if (t >= horizon) break;
        double u = unif(rng) * q;
        if (u < ch.down[i]) {
            --i;
        } else if (i + 1 < ch.size()) {
            ++i;
        } else {
            p.lifetime = t;
            break;
        }
        push_state(p, t, ch.x[i], ch.yh[i]);
    }
    return p;
}

}  // namespace

PathSample simulate_chain(const AtomicChain& ch, double x0, double horizon, std::mt19937_64& rng) {
    if (!(horizon > 0)) throw ValidationError("horizon must be positive");
    int i = -1;
    for (int k = 0; k < ch.size(); ++k)
        if (same_value(ch.x[k], x0)) i = k;
    if (i < 0) throw ValidationError("start point " + format_real(x0) + " is not a state of the chain");
    return chain_path(ch, i, horizon, rng);
}

PathSample simulate_chain(const QuasiPair& pair, double x0, double horizon, std::mt19937_64& rng) {
    AtomicChain ch = atomic_chain(pair);
    if (!(horizon > 0)) throw ValidationError("horizon must be positive");
    if (!pair.in_I(x0)) throw ValidationError("start point " + format_real(x0) + " is outside I");
    return chain_path(ch, chain_start(ch, x0, pair.s(x0)), horizon, rng);
}

namespace {

struct Driver {
    const QuasiPair* pair;
    std::vector<double> ay, am;  // image atoms
    const Measure* mh;
    double lo, hi;               // image ends
    bool reflect_lo, reflect_hi, absorb_hi;
    bool has_density;

    explicit Driver(const QuasiPair& P) : pair(&P), mh(&P.image_measure()) {
        if (mh->has_infinite_families()) throw ValidationError("time-change sampler needs finitely many atoms");
        auto atoms = mh->all_atoms();
        std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
        for (const auto& a : atoms)
            if (a.mass > 0) {
                ay.push_back(a.x);
                am.push_back(a.mass);
            }
        has_density = !mh->densities.empty();
        lo = P.l_hat();
        hi = P.r_hat();
        reflect_lo = std::isfinite(lo);
        bool in_set = std::isfinite(hi) && P.image_set().contains(hi);
        reflect_hi = in_set;
        absorb_hi = std::isfinite(hi) && !in_set;
    }

    double fold(double w) const {
        for (int k = 0; k < 64; ++k) {
            if (reflect_lo && w < lo) {
                w = 2 * lo - w;
            } else if (reflect_hi && w > hi) {
                w = 2 * hi - w;
            } else {
                break;
            }
        }
        return w;
    }
};

double bridge_local_time(double w0, double w1, double z, double dt, double u) {
    double d = w1 - w0;
    double s = std::sqrt(d * d - 2.0 * dt * std::log(u)) - std::fabs(w0 - z) - std::fabs(w1 - z);
    return s > 0 ? s : 0.0;
}

}  // namespace

std::optional<std::string> timechange_step_warning(const QuasiPair& pair, double dt) {
    auto atoms = pair.image_measure().all_atoms();
    std::vector<double> y;
    for (const auto& a : atoms) y.push_back(a.x);
    std::sort(y.begin(), y.end());
    double gap = kInf;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) gap = std::min(gap, y[i + 1] - y[i]);
    if (std::isfinite(gap) && std::sqrt(dt) > 0.1 * gap) {
        std::ostringstream os;
        os << "time step " << dt << " is coarse for the smallest atom gap " << gap << "; try dt <= "
           << 0.01 * gap * gap;
        return os.str();
    }
    return std::nullopt;
}

PathSample simulate_timechange(const QuasiPair& pair, double x0, double horizon, std::mt19937_64& rng,
                               const TimeChangeOptions& opt) {
    if (!(horizon > 0)) throw ValidationError("horizon must be positive");
    if (!(opt.dt > 0)) throw ValidationError("time step must be positive");
    if (!pair.in_I(x0)) throw ValidationError("start point " + format_real(x0) + " is outside I");
    Driver D(pair);
    const double y0 = pair.s(x0);
    bool charged = std::any_of(D.ay.begin(), D.ay.end(), [&](double a) { return same_value(a, y0); }) ||
                   pair.image_measure().density(y0) > 0 ||
                   pair.image_measure().mass(y0 - 1e-9 * std::max(1.0, std::fabs(y0)), y0 + 1e-9 * std::max(1.0, std::fabs(y0))) > 0;
    if (!charged) throw ValidationError("start point " + format_real(x0) + " is not in the support of m");

    PathSample p;
    p.horizon = horizon;
    push_state(p, 0.0, x0, y0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double sq = std::sqrt(opt.dt);
    const double reach = 10.0 * sq;
    double w = y0, S = 0.0;
    std::vector<double> lt(D.ay.size());
    std::vector<std::size_t> touched;
    for (long step = 0;; ++step) {
        if (step >= opt.max_steps) {
            p.truncated = true;
            break;
        }
        double w1 = w + sq * normal(rng);
        if (D.absorb_hi) {
            bool hit = w1 >= D.hi || unif(rng) < std::exp(-2.0 * (D.hi - w) * (D.hi - w1) / opt.dt);
            if (hit) {
                p.lifetime = S;
                break;
            }
        }
        double a = std::min(w, w1) - reach, b = std::max(w, w1) + reach;
        double dS = 0.0, best = 0.0;
        int best_i = -1;
        auto accrue = [&](double z, std::size_t i) {
            if (z < a || z > b) return;
            double l = bridge_local_time(w, w1, z, opt.dt, 1.0 - unif(rng));
            lt[i] += l;
        };
        // atoms whose level or mirrored level lies in reach
        touched.clear();
        auto scan = [&](double lo_y, double hi_y) {
            auto i0 = std::lower_bound(D.ay.begin(), D.ay.end(), lo_y) - D.ay.begin();
            for (auto i = i0; i < static_cast<long>(D.ay.size()) && D.ay[i] <= hi_y; ++i) touched.push_back(i);
        };
        scan(a, b);
        if (D.reflect_lo && a < D.lo) scan(D.lo, 2 * D.lo - a);
        if (D.reflect_hi && b > D.hi) scan(2 * D.hi - b, D.hi);
        if (touched.size() > 1) {
            std::sort(touched.begin(), touched.end());
            touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        }
        for (auto i : touched) {
            lt[i] = 0.0;
            // a level sitting on a reflecting end collects the local time of both sheets
            double z = D.ay[i];
            bool on_lo = D.reflect_lo && z == D.lo, on_hi = D.reflect_hi && z == D.hi;
            accrue(z, i);
            if (on_lo || on_hi) lt[i] *= 2.0;
            if (D.reflect_lo && !on_lo) accrue(2 * D.lo - z, i);
            if (D.reflect_hi && !on_hi) accrue(2 * D.hi - z, i);
            double c = opt.local_time * D.am[i] * lt[i];
            dS += c;
            if (c > best) {
                best = c;
                best_i = static_cast<int>(i);
            }
        }
        double wf = D.fold(w1);
        double dens = 0.0;
        if (D.has_density) dens = opt.local_time * opt.dt * 0.5 * (D.mh->density(w) + D.mh->density(wf));
        dS += dens;
        if (dS > 0) {
            // record a point of supp m-hat: the atom that dominated, else whichever end charged the step
            double yh = (best_i >= 0 && best >= dens) ? D.ay[best_i] : (D.mh->density(wf) > 0 ? wf : w);
            if (S + dS >= horizon) {
                if (S < horizon) push_state(p, S, merge_point(pair, yh), yh);
                break;
            }
            push_state(p, S, merge_point(pair, yh), yh);
            S += dS;
        }
        w = wf;
    }
    return p;
}

std::vector<PathSample> simulate_paths(const QuasiPair& pair, double x0, double horizon, long n, std::uint64_t seed,
                                       Sampler sampler, const TimeChangeOptions& opt) {
    if (n < 1) throw ValidationError("path count must be positive");
    std::vector<PathSample> out;
    out.reserve(n);
    if (sampler == Sampler::Chain) {
        AtomicChain ch = atomic_chain(pair);
        if (!pair.in_I(x0)) throw ValidationError("start point " + format_real(x0) + " is outside I");
        int i = chain_start(ch, x0, pair.s(x0));
        for (long k = 0; k < n; ++k) {
            auto rng = path_rng(seed, k);
            out.push_back(chain_path(ch, i, horizon, rng));
            out.back().stream = k;
        }
    } else {
        for (long k = 0; k < n; ++k) {
            auto rng = path_rng(seed, k);
            out.push_back(simulate_timechange(pair, x0, horizon, rng, opt));
            out.back().stream = k;
        }
    }
    return out;
}

LaplaceEstimate laplace_functional(const std::vector<PathSample>& paths, const std::function<double(double)>& f,
                                   double lambda, double sup_f) {
    if (!(lambda > 0)) throw ValidationError("Laplace parameter must be positive");
    if (paths.empty()) throw ValidationError("no paths");
    LaplaceEstimate est;
    est.lambda = lambda;
    est.paths = static_cast<long>(paths.size());
    std::vector<double> vals;
    double horizon = kInf;
    for (const auto& p : paths) {
        double end = std::min(p.lifetime, p.horizon);
        horizon = std::min(horizon, p.horizon);
        std::vector<double> parts;
        for (std::size_t i = 0; i < p.times.size(); ++i) {
            double t0 = p.times[i];
            double t1 = i + 1 < p.times.size() ? p.times[i + 1] : end;
            t1 = std::min(t1, end);
            if (t1 <= t0) continue;
            parts.push_back(f(p.states[i]) * (std::exp(-lambda * t0) - std::exp(-lambda * t1)) / lambda);
        }
        vals.push_back(pairwise_sum(parts));
    }
    double n = static_cast<double>(vals.size());
    est.value = pairwise_sum(vals) / n;
    std::vector<double> sq;
    for (double v : vals) sq.push_back((v - est.value) * (v - est.value));
    est.std_error = vals.size() > 1 ? std::sqrt(pairwise_sum(sq) / (n - 1.0) / n) : 0.0;
    est.bias_bound = std::exp(-lambda * horizon) * sup_f / lambda;
    return est;
}

LaplaceEstimate laplace_functional(const std::vector<PathSample>& paths, const PiecewiseFunction& f, double lambda) {
    return laplace_functional(paths, [&](double x) { return f(x); }, lambda, f.sup_abs());
}

AuditReport path_property_audit(const std::vector<PathSample>& paths, const QuasiPair& pair, double resolution) {
    AuditReport rep;
    const PointSet F = support(pair.image_measure());
    for (const auto& p : paths) {
        ++rep.paths;
        for (std::size_t i = 0; i + 1 < p.states_hat.size(); ++i) {
            double a = p.states_hat[i], b = p.states_hat[i + 1];
            double d = std::fabs(b - a);
            if (d <= resolution) continue;
            ++rep.jumps;
            rep.histogram[static_cast<int>(std::floor(std::log10(d)))]++;
            double lo = std::min(a, b) + resolution, hi = std::max(a, b) - resolution;
            if (lo < hi && F.meets_open(lo, hi)) ++rep.violations;
        }
    }
    return rep;
}

}  // namespace qd

#pragma once

#include "quasidiff/oracle.hpp"
#include "quasidiff/piecewise.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace qd {

// S_u = kLocalTime * int L(u, y) m-hat(dy) with L the occupation density of the driving
// Brownian motion; 1 reproduces the chain sampler (generator 1/2 D_m D_s).
inline constexpr double kLocalTime = 1.0;

struct PathSample {
    std::vector<double> times;   // jump times, times[0] = 0
    std::vector<double> states;  // X on [times[i], times[i+1]), points of I
    std::vector<double> states_hat;
    double lifetime = kInf;      // killing time, inf if alive at the horizon
    double horizon = 0.0;
    std::uint64_t stream = 0;
    bool truncated = false;      // driver budget exhausted before the horizon
};

struct LaplaceEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long paths = 0;
    double lambda = 0.0;
    double bias_bound = 0.0;  // e^{-lambda T} sup|f| / lambda
};

// Per-path generator seeded from (seed, path index).
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path);

PathSample simulate_chain(const QuasiPair& pair, double x0, double horizon, std::mt19937_64& rng);
PathSample simulate_chain(const AtomicChain& ch, double x0, double horizon, std::mt19937_64& rng);

struct TimeChangeOptions {
    double dt = 1e-3;                 // Brownian step
    double local_time = kLocalTime;
    long max_steps = 100000000;
};
PathSample simulate_timechange(const QuasiPair& pair, double x0, double horizon, std::mt19937_64& rng,
                               const TimeChangeOptions& opt = {});
// Warning text when dt is coarse against the smallest gap between image atoms.
std::optional<std::string> timechange_step_warning(const QuasiPair& pair, double dt);

enum class Sampler { Chain, TimeChange };
std::vector<PathSample> simulate_paths(const QuasiPair& pair, double x0, double horizon, long n, std::uint64_t seed,
                                       Sampler sampler, const TimeChangeOptions& opt = {});

LaplaceEstimate laplace_functional(const std::vector<PathSample>& paths, const std::function<double(double)>& f,
                                   double lambda, double sup_f);
LaplaceEstimate laplace_functional(const std::vector<PathSample>& paths, const PiecewiseFunction& f, double lambda);

struct AuditReport {
    long paths = 0, jumps = 0, violations = 0;
    std::map<int, long> histogram;  // floor(log10 |jump in image|) -> count
    bool passed() const { return violations == 0; }
};
// Every jump larger than resolution (image units) must cross no point of supp m-hat lying
// farther than resolution from both of its ends.
AuditReport path_property_audit(const std::vector<PathSample>& paths, const QuasiPair& pair, double resolution = 0.0);

}  // namespace qd

#pragma once

#include "quasidiff/config.hpp"
#include "quasidiff/kernel.hpp"

#include <string>
#include <vector>

namespace qd {

// Snapping-out Brownian motion kernel on the two-origin line, verbatim closed form (c = 1).
// Points at x = 0 use side -1 for the copy 0- and side 0/+1 for 0.
double snapping_out_kernel(double alpha, double kappa, const StarPoint& x, const StarPoint& y);
double snapping_out_u(double alpha, double x);
double snapping_out_u_plus(double alpha, double kappa, const StarPoint& x);
double snapping_out_u_minus(double alpha, double kappa, const StarPoint& x);
// Pair of the snapping-out example (identity scale with a jump 2/kappa at 0, Lebesgue m).
PairConfig snapping_out_pair(double kappa);

enum class Truncation { AbsorbingAtTop, ReflectingAtTop };
const char* to_string(Truncation t);

// Birth-death chain on {0, ..., K-1}; a[0] is unused.
struct BDChain {
    std::vector<double> a, b;
    Truncation mode = Truncation::ReflectingAtTop;

    int size() const { return static_cast<int>(b.size()); }
    std::vector<double> mu() const;
    // s(0), ..., s(K) with s(k+1) - s(k) = 1 / (2 mu_k b_k).
    std::vector<double> scale() const;
    // Atoms mu_k at k, affine scale between integers, left atom mu_0 at 0, base 1/2,
    // r = K excluded (absorbing) or included (reflecting).
    PairConfig to_pair() const;

    // mu_k = 2^-k, mu_k b_k = rho^k.
    static BDChain regular_at_infinity(int K, Truncation mode, double rho = 1.25);
    static BDChain from_rates(std::vector<double> a, std::vector<double> b, Truncation mode);
};

// Nearest-neighbour chain on the atoms of a purely atomic image measure, with rates read
// off the jump relation of 1/2 D_m D_s; kill_* are rates to an absorbing end.
struct AtomicChain {
    std::vector<double> x, yh, mass;
    std::vector<double> up, down;
    double kill_up = 0.0, kill_down = 0.0;  // rates from the top / bottom state to a killing end

    int size() const { return static_cast<int>(x.size()); }
    double holding_rate(int i) const { return up[i] + down[i]; }
    int index_of(double x) const;  // nearest state, throws when not a state
};
AtomicChain atomic_chain(const QuasiPair& pair);

// Solve (lambda - Q) u = f for a tridiagonal generator with down/up rates (the outgoing
// rate of the top/bottom state includes its killing rate).
std::vector<double> tridiagonal_resolvent(const std::vector<double>& down, const std::vector<double>& up,
                                          double lambda, const std::vector<double>& f);
std::vector<double> chain_resolvent(const AtomicChain& ch, double lambda, const std::vector<double>& f);
std::vector<double> bd_matrix_resolvent(const BDChain& chain, double lambda, const std::vector<double>& f);

// max_k |Q - 1/2 D_m D_s|_k / q_k over all rows.
double verify_generator_identity(const BDChain& chain);

struct CalibrationFit {
    std::string pair;
    double alpha = 0.0;
    double c = kNaN;
    double residual = 0.0;  // relative misfit after scaling
    int samples = 0;
};
struct Calibration {
    std::vector<CalibrationFit> fits;
    double c_prob = kNaN;
    double spread = kNaN;       // max - min over fits
    double identity_factor = kNaN;  // c' measured with the verbatim kernel
    bool consistent = false;    // spread <= 1e-6
};
struct NamedPair {
    std::string name;
    PairConfig config;
};
// Default family: a 20-state birth-death chain, a 3-atom pair with a scale jump, a 5-atom pair.
std::vector<NamedPair> calibration_pairs();
Calibration calibrate_normalization(const std::vector<NamedPair>& pairs, const std::vector<double>& alphas,
                                    const HarmonicOptions& opt = {});

// Series kernel resolvent at the chain states for f given on the states.
std::vector<double> series_resolvent_on_states(const Kernel& K, const AtomicChain& ch, const std::vector<double>& f);

struct Comparison {
    std::string name;
    double alpha = 0.0;
    double max_rel = 0.0;
    double tol = 0.0;
    long points = 0;
    bool pass() const { return max_rel <= tol; }
};
// Pipeline u, u+, u- and split-space kernel against the closed forms on an n x n grid over
// [-2, 2]^2 with both origin copies.
Comparison compare_snapping_out(double alpha, double kappa, int n = 41, double tol = 1e-8,
                                const HarmonicOptions& opt = {});
// c * series kernel resolvent against the matrix resolvent, f = indicator of each state and f = 1.
Comparison compare_birth_death(const BDChain& chain, double alpha, double c, double tol = 1e-6,
                               const HarmonicOptions& opt = {});
Comparison compare_atomic_pair(const std::string& name, const QuasiPair& pair, double alpha, double c,
                               double tol = 1e-6, const HarmonicOptions& opt = {});

}  // namespace qd

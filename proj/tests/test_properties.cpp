#include "property_suite.hpp"

#include <doctest.h>

using namespace qd;
using namespace qd::props;

TEST_CASE("randomized pairs satisfy the invariants") {
    const double c_prob = calibrate_normalization(calibration_pairs(), {0.5, 1.0, 2.0}).c_prob;
    int strict = 0, atomic = 0, unbounded = 0;
    for (int i = 0; i < 50; ++i) {
        auto rp = random_pair(i);
        CAPTURE(rp.label);
        strict += rp.strict;
        atomic += rp.atomic;
        unbounded += std::isinf(rp.config.spec.r);
        auto r = check_pair(rp, c_prob);
        CHECK(r.classification_invariant);
        CHECK(r.wronskian_drift <= 1e-9);
        CHECK(r.monotonicity <= 1e-12);
        CHECK(r.gamma_order);
        CHECK(r.kernel_asymmetry <= 1e-12);
        CHECK(r.measure_asymmetry <= 1e-8);
        CHECK(r.min_positive >= -1e-12);
        CHECK(r.left_derivative <= 1e-8);
        CHECK(r.regimes_agree);
        CHECK(r.split_continuity <= 1e-5);
        CHECK(r.sub_markov <= 1 + 1e-8);
        CHECK(r.truncation_change <= 1e-10);
        CHECK(r.flats_constant);
        CHECK(r.audit_paths > 0);
        CHECK(r.audit_violations == 0);
    }
    // the generator covers every branch
    CHECK(strict == 40);
    CHECK(atomic > 0);
    CHECK(unbounded > 0);
}

TEST_CASE("pushforward and order on randomized pairs") {
    for (int i = 0; i < 50; ++i) {
        auto rp = random_pair(i);
        CAPTURE(rp.label);
        auto P = rp.config.validate();
        std::mt19937_64 rng(i);
        std::uniform_real_distribution<double> U(0.0, 4.0);
        for (int k = 0; k < 200; ++k) {
            double a = U(rng), b = U(rng);
            if (a > b) std::swap(a, b);
            bool in_flat = false;
            for (const auto& fl : P.scale().flats())
                in_flat = in_flat || (a >= fl.a && a <= fl.b) || (b >= fl.a && b <= fl.b);
            if (in_flat) continue;
            CHECK(P.image_measure().mass(P.s_right(a), P.s_right(b)) ==
                  doctest::Approx(P.measure().mass(a, b)).epsilon(1e-12));
            CHECK(P.s_left(a) <= P.s(a));
            CHECK(P.s(a) <= P.s_right(a));
            CHECK(P.s_right(a) <= P.s_left(b) + 1e-15);
        }
        if (rp.strict) {
            for (double x : {0.3, 1.7, 2.5, 3.6}) CHECK(merge_map(P, P.s(x)) == doctest::Approx(x));
            CHECK(supports(P).excluded_mass == 0.0);
        }
    }
}

#pragma once

#include "quasidiff/pair.hpp"

#include <functional>
#include <optional>
#include <string>

namespace qd {

enum class Verdict { Finite, Infinite, Inconclusive };

struct ExtValue {
    double value = 0.0;  // the value when finite; the last partial sum when inconclusive
    Verdict verdict = Verdict::Finite;
    bool finite() const { return verdict == Verdict::Finite; }
};

enum class BoundaryKind { Regular, Exit, Entrance, Natural };
enum class Refinement { Reflecting, Absorbing };

const char* to_string(BoundaryKind k);
const char* to_string(Refinement r);
const char* to_string(Verdict v);

struct BoundaryClass {
    bool conclusive = true;
    BoundaryKind kind = BoundaryKind::Natural;
    std::optional<Refinement> refinement;
    std::optional<bool> instantaneous;
    ExtValue sigma_hat, lambda_hat;
    std::string note;

    bool regular() const { return conclusive && kind == BoundaryKind::Regular; }
    bool reflecting() const { return regular() && refinement == Refinement::Reflecting; }
};

struct SigmaLambda {
    ExtValue sigma, lambda;
};

// Sum of a nonnegative series with a ratio-based tail bound; budget in terms.
ExtValue certified_series(const std::function<double(long)>& term, long budget = 1000000);

// sigma-hat and lambda-hat of the endpoint `end` of the image measure, measured from `ref`
// over the open region between them (end may be +inf or -inf).
SigmaLambda sigma_lambda(const Measure& mhat, double ref, double end);
SigmaLambda sigma_lambda(const QuasiPair& pair);

BoundaryClass classify_image(const Measure& mhat, double ref, double end, bool end_in_set);
BoundaryClass classify(const QuasiPair& pair);
// Left end of a two-sided pair (-inf).
BoundaryClass classify_left(const QuasiPair& pair);

}  // namespace qd

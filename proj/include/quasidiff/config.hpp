#pragma once

#include "quasidiff/pair.hpp"

#include <json.hpp>

#include <string>

namespace qd {

// Pair file: JSON object with sections "interval", "scale", "measure".
//
//   interval: left ("reflect" | "birth_death_atom" | "minus_infinity"), r, r_included,
//             base (underlying point e), stilde_policy ("left" | "right")
//   scale:    segments [[x0, x1, "affine", [value_at_anchor, slope]] | [x0, x1, "flat", [C]]],
//             jumps [[x, s(x-), s(x), s(x+)]], flats [[a, b, C]];
//             omitted segments mean the identity scale
//   measure:  atoms [[x, mass]],
//             densities [[x0, x1, [c0, c1, ...]] | [x0, x1, "poly", [...]] | [x0, x1, "power", [c, pivot, p]]],
//             families [[center, d, q, w, rho, count]]  (count < 0: infinite)
//
// Polynomial coefficients are in powers of (x - x0), or (x - x1) when x0 = -inf.
// Infinite values are written as the strings "inf" / "-inf".
struct PairConfig {
    ScaleFunction scale;
    Measure measure;
    IntervalSpec spec;

    QuasiPair validate() const { return QuasiPair::validate(scale, measure, spec); }
};

PairConfig parse_pair(const nlohmann::json& j);
PairConfig load_pair(const std::string& path);
nlohmann::json to_json(const PairConfig& cfg);
nlohmann::json to_json(const QuasiPair& pair);
void save_pair(const PairConfig& cfg, const std::string& path);

double json_real(const nlohmann::json& v);
nlohmann::json real_json(double x);

}  // namespace qd

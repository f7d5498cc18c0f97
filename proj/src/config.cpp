#include "quasidiff/config.hpp"

#include <fstream>
#include <sstream>

namespace qd {

using nlohmann::json;

double json_real(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s == "inf" || s == "+inf" || s == "infinity") return kInf;
        if (s == "-inf" || s == "-infinity") return -kInf;
        try {
            std::size_t pos = 0;
            double x = std::stod(s, &pos);
            if (pos == s.size()) return x;
        } catch (const std::exception&) {
        }
    }
    throw ValidationError("pair file: expected a number, got " + v.dump());
}

json real_json(double x) {
    if (std::isinf(x)) return x > 0 ? json("inf") : json("-inf");
    return json(x);
}

namespace {

std::vector<double> reals(const json& arr) {
    std::vector<double> out;
    if (!arr.is_array()) throw ValidationError("pair file: expected an array, got " + arr.dump());
    for (const auto& v : arr) out.push_back(json_real(v));
    return out;
}

LeftKind left_kind(const std::string& s) {
    if (s == "reflect") return LeftKind::Reflect;
    if (s == "birth_death_atom") return LeftKind::BirthDeathAtom;
    if (s == "minus_infinity") return LeftKind::MinusInfinity;
    throw ValidationError("pair file: unknown left condition '" + s + "'");
}

}  // namespace

PairConfig parse_pair(const json& j) {
    PairConfig cfg;
    const json iv = j.value("interval", json::object());
    cfg.spec.left = left_kind(iv.value("left", std::string("reflect")));
    cfg.spec.r = iv.contains("r") ? json_real(iv["r"]) : kNaN;
    cfg.spec.r_included = iv.value("r_included", false);
    cfg.spec.base = iv.contains("base") ? json_real(iv["base"]) : 0.0;
    std::string pol = iv.value("stilde_policy", std::string("left"));
    if (pol != "left" && pol != "right") throw ValidationError("pair file: stilde_policy must be left or right");
    cfg.spec.stilde = pol == "left" ? StildePolicy::Left : StildePolicy::Right;

    const json sc = j.value("scale", json::object());
    std::vector<Segment> segs;
    for (const auto& e : sc.value("segments", json::array())) {
        if (!e.is_array() || e.size() != 4) throw ValidationError("pair file: segment must be [x0, x1, kind, params]");
        Segment s;
        s.x0 = json_real(e[0]);
        s.x1 = json_real(e[1]);
        std::string kind = e[2].get<std::string>();
        auto p = reals(e[3]);
        if (kind == "affine") {
            if (p.size() != 2) throw ValidationError("pair file: affine params are [value, slope]");
            s.value = p[0];
            s.slope = p[1];
        } else if (kind == "flat") {
            if (p.size() != 1) throw ValidationError("pair file: flat params are [value]");
            s.value = p[0];
            s.slope = 0.0;
        } else {
            throw ValidationError("pair file: unknown segment kind '" + kind + "'");
        }
        segs.push_back(s);
    }
    for (const auto& e : sc.value("flats", json::array())) {
        auto p = reals(e);
        if (p.size() != 3) throw ValidationError("pair file: flat must be [a, b, value]");
        Segment s;
        s.x0 = p[0];
        s.x1 = p[1];
        s.value = p[2];
        s.slope = 0.0;
        segs.push_back(s);
    }
    std::vector<Breakpoint> jumps;
    for (const auto& e : sc.value("jumps", json::array())) {
        auto p = reals(e);
        if (p.size() != 4) throw ValidationError("pair file: jump must be [x, left, value, right]");
        jumps.push_back({p[0], p[1], p[2], p[3]});
    }
    if (segs.empty()) {
        double l = cfg.spec.left == LeftKind::MinusInfinity ? -kInf : 0.0;
        double r = std::isnan(cfg.spec.r) ? kInf : cfg.spec.r;
        Segment s;
        s.x0 = l;
        s.x1 = r;
        s.value = 0.0;
        s.slope = 1.0;
        segs.push_back(s);
    }
    cfg.scale = ScaleFunction::build(segs, jumps);
    if (std::isnan(cfg.spec.r)) cfg.spec.r = cfg.scale.right_end();

    const json ms = j.value("measure", json::object());
    for (const auto& e : ms.value("atoms", json::array())) {
        auto p = reals(e);
        if (p.size() != 2) throw ValidationError("pair file: atom must be [x, mass]");
        cfg.measure.atoms.push_back({p[0], p[1]});
    }
    for (const auto& e : ms.value("densities", json::array())) {
        if (!e.is_array() || e.size() < 3) throw ValidationError("pair file: density must be [x0, x1, ...]");
        double x0 = json_real(e[0]), x1 = json_real(e[1]);
        if (e.size() == 3) {
            cfg.measure.densities.push_back(DensityPiece::poly(x0, x1, reals(e[2])));
            continue;
        }
        std::string kind = e[2].get<std::string>();
        auto p = reals(e[3]);
        if (kind == "poly") {
            cfg.measure.densities.push_back(DensityPiece::poly(x0, x1, p));
        } else if (kind == "power") {
            if (p.size() != 3) throw ValidationError("pair file: power params are [c, pivot, exponent]");
            cfg.measure.densities.push_back(DensityPiece::power_law(x0, x1, p[0], p[1], p[2]));
        } else {
            throw ValidationError("pair file: unknown density kind '" + kind + "'");
        }
    }
    for (const auto& e : ms.value("families", json::array())) {
        auto p = reals(e);
        if (p.size() != 6) throw ValidationError("pair file: family must be [center, d, q, w, rho, count]");
        AtomFamily f;
        f.center = p[0];
        f.d = p[1];
        f.q = p[2];
        f.w = p[3];
        f.rho = p[4];
        f.count = static_cast<long>(p[5]);
        cfg.measure.families.push_back(f);
    }
    return cfg;
}

PairConfig load_pair(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open pair file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("pair file is not valid JSON: ") + e.what());
    }
    return parse_pair(j);
}

json to_json(const PairConfig& cfg) {
    json j;
    json iv;
    iv["left"] = to_string(cfg.spec.left);
    iv["r"] = real_json(cfg.spec.r);
    iv["r_included"] = cfg.spec.r_included;
    iv["base"] = real_json(cfg.spec.base);
    iv["stilde_policy"] = cfg.spec.stilde == StildePolicy::Left ? "left" : "right";
    j["interval"] = iv;

    json segs = json::array();
    for (const auto& s : cfg.scale.segments()) {
        if (s.flat())
            segs.push_back({real_json(s.x0), real_json(s.x1), "flat", {real_json(s.value)}});
        else
            segs.push_back({real_json(s.x0), real_json(s.x1), "affine", {real_json(s.value), real_json(s.slope)}});
    }
    json jumps = json::array();
    for (const auto& b : cfg.scale.jumps())
        jumps.push_back({real_json(b.x), real_json(b.left), real_json(b.value), real_json(b.right)});
    j["scale"] = {{"segments", segs}, {"jumps", jumps}, {"flats", json::array()}};

    json atoms = json::array(), dens = json::array(), fams = json::array();
    for (const auto& a : cfg.measure.atoms) atoms.push_back({real_json(a.x), real_json(a.mass)});
    for (const auto& d : cfg.measure.densities) {
        if (d.kind == DensityKind::Poly) {
            // re-expand around the canonical origin when it differs
            json c = json::array();
            for (double v : d.coeffs) c.push_back(real_json(v));
            double canon = std::isinf(d.x0) ? (std::isinf(d.x1) ? 0.0 : d.x1) : d.x0;
            if (d.origin != canon) throw ValidationError("cannot serialize a polynomial with a non-canonical origin");
            dens.push_back({real_json(d.x0), real_json(d.x1), "poly", c});
        } else {
            dens.push_back({real_json(d.x0), real_json(d.x1), "power", {real_json(d.c), real_json(d.pivot), real_json(d.power)}});
        }
    }
    for (const auto& f : cfg.measure.families)
        fams.push_back({real_json(f.center), real_json(f.d), real_json(f.q), real_json(f.w), real_json(f.rho),
                        static_cast<double>(f.count)});
    j["measure"] = {{"atoms", atoms}, {"densities", dens}, {"families", fams}};
    return j;
}

json to_json(const QuasiPair& pair) {
    PairConfig cfg;
    cfg.scale = pair.scale();
    cfg.measure = pair.measure();
    cfg.spec = pair.interval();
    return to_json(cfg);
}

void save_pair(const PairConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << to_json(cfg).dump(2) << "\n";
}

}  // namespace qd

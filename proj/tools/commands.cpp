#include "commands.hpp"

#include "quasidiff/boundary.hpp"
#include "quasidiff/config.hpp"
#include "quasidiff/kernel.hpp"
#include "quasidiff/oracle.hpp"
#include "quasidiff/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qd::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string r;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) r += ',';
        r += csv_field(fields[i]);
    }
    return r + "\r\n";
}

std::string csv_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t content_hash(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string pair_file, out_dir, cache_dir, normalization = "paper";
    std::uint64_t seed = 1;
    double tol = 1e-15;
};

std::vector<double> parse_list(const std::vector<std::string>& raw, const char* what) {
    std::vector<double> v;
    for (const auto& item : raw) {
        std::stringstream ss(item);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            try {
                std::size_t pos = 0;
                double x = std::stod(tok, &pos);
                if (pos != tok.size()) throw std::invalid_argument(tok);
                v.push_back(x);
            } catch (const std::exception&) {
                throw UsageError(std::string("bad ") + what + " value '" + tok + "'");
            }
        }
    }
    return v;
}

std::vector<double> alphas_from(const std::vector<std::string>& raw) {
    auto a = parse_list(raw, "alpha");
    if (a.empty()) throw UsageError("empty alpha list");
    for (double x : a)
        if (!(x > 0)) throw UsageError("alpha values must be positive");
    return a;
}

class Runner {
  public:
    Runner(Globals g, std::ostream& out, std::ostream& err) : g_(std::move(g)), out_(out), err_(err) {}

    PairConfig config() const {
        if (g_.pair_file.empty()) throw UsageError("--pair is required for this command");
        return load_pair(g_.pair_file);
    }
    HarmonicOptions options() const {
        HarmonicOptions o;
        if (!(g_.tol > 0)) throw UsageError("--tol must be positive");
        o.tol = g_.tol;
        return o;
    }
    double normalization_constant() const {
        Normalization n;
        try {
            n = parse_normalization(g_.normalization);
        } catch (const ValidationError& e) {
            throw UsageError(e.what());
        }
        if (n == Normalization::Paper) return 1.0;
        auto cal = calibrate_normalization(calibration_pairs(), {0.5, 1.0, 2.0});
        if (!cal.consistent) throw OracleError("normalization calibration is inconsistent across pairs");
        return cal.c_prob;
    }

    // Data file under --out, or the output stream.
    void emit(const std::string& name, const std::string& text) const {
        if (g_.out_dir.empty()) {
            out_ << text;
            return;
        }
        fs::create_directories(g_.out_dir);
        std::ofstream f(fs::path(g_.out_dir) / name, std::ios::binary);
        if (!f) throw Error("cannot write " + (fs::path(g_.out_dir) / name).string());
        f << text;
    }
    void report(const json& j) const { emit_report(j.dump()); }
    void emit_report(const std::string& line) const {
        if (g_.out_dir.empty()) {
            out_ << line << "\n";
            return;
        }
        fs::create_directories(g_.out_dir);
        std::ofstream f(fs::path(g_.out_dir) / "report.jsonl", std::ios::app);
        f << line << "\n";
    }
    void log(const std::string& s) const { err_ << s << "\n"; }

    // Cached data text keyed by a content hash of the inputs.
    template <class F>
    std::string cached(const std::string& key_text, F&& compute) const {
        if (g_.cache_dir.empty()) return compute();
        char name[32];
        std::snprintf(name, sizeof name, "%016llx.csv", static_cast<unsigned long long>(content_hash(key_text)));
        fs::path p = fs::path(g_.cache_dir) / name;
        if (fs::exists(p)) {
            std::ifstream f(p, std::ios::binary);
            std::stringstream ss;
            ss << f.rdbuf();
            return ss.str();
        }
        std::string text = compute();
        fs::create_directories(g_.cache_dir);
        std::ofstream f(p, std::ios::binary);
        f << text;
        return text;
    }
    std::string key(const std::string& cmd, const PairConfig& cfg, const std::string& params) const {
        return cmd + "\n" + to_json(cfg).dump() + "\n" + csv_real(g_.tol) + "\n" + params;
    }

    int validate(const std::string& write_back) const {
        PairConfig cfg = config();
        QuasiPair P = cfg.validate();
        json j{{"valid", true},
               {"strictness", to_string(P.strictness())},
               {"left", to_string(P.interval().left)},
               {"l", real_json(P.l())},
               {"r", real_json(P.r())},
               {"r_included", P.r_included()},
               {"l_hat", real_json(P.l_hat())},
               {"r_hat", real_json(P.r_hat())},
               {"base_hat", real_json(P.base_hat())},
               {"image_set", P.image_set().describe()},
               {"mu0", P.mu0()}};
        json flats = json::array(), jumps = json::array();
        for (const auto& f : P.scale().flats()) flats.push_back({f.a, f.b, f.value});
        for (const auto& b : P.scale().jumps()) jumps.push_back({b.x, b.left, b.value, b.right});
        j["flats"] = flats;
        j["jumps"] = jumps;
        if (!write_back.empty()) save_pair(cfg, write_back);
        report(j);
        return Ok;
    }

    static json class_json(const BoundaryClass& bc) {
        json j{{"kind", to_string(bc.kind)},
               {"refinement", bc.refinement ? json(to_string(*bc.refinement)) : json(nullptr)},
               {"instantaneous", bc.instantaneous ? json(*bc.instantaneous) : json(nullptr)},
               {"sigma_hat", real_json(bc.sigma_hat.value)},
               {"lambda_hat", real_json(bc.lambda_hat.value)}};
        if (!bc.note.empty()) j["note"] = bc.note;
        return j;
    }

    int classify() const {
        QuasiPair P = config().validate();
        BoundaryClass bc = qd::classify(P);
        json j = class_json(bc);
        if (P.interval().left == LeftKind::MinusInfinity) j["left"] = class_json(classify_left(P));
        report(j);
        if (!bc.conclusive) return Inconclusive;
        return Ok;
    }

    int solve(const std::vector<double>& alphas, int per_cell) const {
        PairConfig cfg = config();
        QuasiPair P = cfg.validate();
        std::ostringstream params;
        for (double a : alphas) params << csv_real(a) << ",";
        params << per_cell;
        std::string text = cached(key("solve", cfg, params.str()), [&] {
            std::string t = csv_row({"alpha", "x_hat", "u", "du_plus", "du_minus", "u_minus", "u_plus", "phi", "v"});
            for (double a : alphas) {
                auto S = HarmonicSolution::build(P, a, options());
                for (double y : S.grid(per_cell)) {
                    t += csv_row({csv_real(a), csv_real(y), csv_real(S.u(y)), csv_real(S.du(y, 1)),
                                  csv_real(S.du(y, -1)), csv_real(S.u_minus(y)), csv_real(S.u_plus(y)), csv_real(S.phi(y)),
                                  csv_real(S.v(y))});
                }
            }
            return t;
        });
        emit("solve.csv", text);
        for (double a : alphas) {
            auto S = HarmonicSolution::build(P, a, options());
            json j{{"alpha", a},
                   {"gamma_bar", real_json(S.gamma_bar())},
                   {"gamma_underline", real_json(S.gamma_underline())},
                   {"gamma", real_json(S.gamma_used())},
                   {"epsilon", S.epsilon()},
                   {"wronskian", real_json(S.wronskian())},
                   {"total", real_json(S.total())},
                   {"max_terms", S.max_terms_used()},
                   {"tail_bound", real_json(S.tail_bound())},
                   {"boundary", class_json(S.boundary())}};
            if (g_.out_dir.empty())
                log(j.dump());
            else
                report(j);
        }
        return Ok;
    }

    int kernel(const std::vector<double>& alphas, const std::string& regime_s, int n, double from, double to) const {
        if (n < 2) throw UsageError("--grid must be at least 2");
        Regime regime;
        try {
            regime = parse_regime(regime_s);
        } catch (const ValidationError& e) {
            throw UsageError(e.what());
        }
        PairConfig cfg = config();
        QuasiPair P = cfg.validate();
        if (std::isnan(from)) from = std::isfinite(P.l()) ? P.l() : -2.0;
        if (std::isnan(to)) to = std::isfinite(P.r()) ? P.r() : from + 4.0;
        if (!(from < to)) throw UsageError("grid range is empty");
        double c = normalization_constant();
        std::ostringstream params;
        for (double a : alphas) params << csv_real(a) << ",";
        params << regime_s << "," << n << "," << csv_real(from) << "," << csv_real(to) << "," << csv_real(c);
        std::string text = cached(key("kernel", cfg, params.str()), [&] {
            std::string t = csv_row({"alpha", "x", "x_side", "y", "y_side", "g"});
            for (double a : alphas) {
                Kernel K(HarmonicSolution::build(P, a, options()), regime, c);
                std::vector<double> xs;
                for (int i = 0; i < n; ++i) xs.push_back(from + (to - from) * i / (n - 1));
                for (const auto& b : P.scale().jumps())
                    if (b.x > from && b.x < to) xs.push_back(b.x);
                std::sort(xs.begin(), xs.end());
                xs.erase(std::unique(xs.begin(), xs.end(), [](double p, double q) { return same_value(p, q); }),
                         xs.end());
                std::vector<std::pair<StarPoint, double>> pts;
                for (double x : xs) {
                    std::vector<StarPoint> copies{{x, 0}};
                    if (regime == Regime::Split && P.in_I(x)) copies = K.split()->copies(x);
                    for (const auto& p : copies) {
                        try {
                            double yh = regime == Regime::Split ? K.map(p) : K.map(p.x);
                            if (yh < K.solution().lo() || yh > K.solution().hi()) continue;
                            pts.emplace_back(p, yh);
                        } catch (const ValidationError&) {
                        }
                    }
                }
                for (const auto& [p, ph] : pts)
                    for (const auto& [q, qh] : pts)
                        t += csv_row({csv_real(a), csv_real(p.x), std::to_string(p.side), csv_real(q.x),
                                      std::to_string(q.side), csv_real(K.eval_hat(ph, qh))});
            }
            return t;
        });
        emit("kernel.csv", text);
        return Ok;
    }

    int resolvent(double alpha, double beta, const std::string& fspec, const std::vector<double>& points) const {
        if (!(alpha > 0)) throw UsageError("--alpha must be positive");
        if (points.empty()) throw UsageError("--points needs at least one value");
        PiecewiseFunction f = PiecewiseFunction::parse(fspec);
        QuasiPair P = config().validate();
        double c = normalization_constant();
        if (std::isnan(beta)) beta = 2.0 * alpha;
        if (!(beta > 0) || beta == alpha) throw UsageError("--beta must be positive and differ from alpha");
        Kernel Ka(HarmonicSolution::build(P, alpha, options()), Regime::Plain, c);
        Kernel Kb(HarmonicSolution::build(P, beta, options()), Regime::Plain, c);
        ResolventTable T(Ka, f);
        json pts = json::array();
        std::vector<double> hats;
        for (double x : points) {
            double yh = Ka.map(x);
            hats.push_back(yh);
            pts.push_back({{"x", x}, {"value", T.at_hat(yh)}});
        }
        auto id = resolvent_identity_check(Ka, Kb, f, hats);
        auto bcheck = boundary_condition_check(Ka, f);
        json j{{"alpha", alpha},
               {"normalization", g_.normalization},
               {"c", c},
               {"f", f.to_json()},
               {"points", pts},
               {"identity", {{"beta", beta},
                             {"factor", id.determinate ? json(id.factor) : json(nullptr)},
                             {"residual", id.residual},
                             {"determinate", id.determinate}}},
               {"boundary", {{"left", real_json(bcheck.left)},
                             {"right", bcheck.right ? real_json(*bcheck.right) : json(nullptr)}}}};
        report(j);
        return Ok;
    }

    int simulate(long paths, double dt, double horizon, double x0, const std::string& fspec, double lambda,
                 const std::string& sampler_s, const std::string& paths_csv) const {
        if (paths < 1) throw UsageError("--paths must be positive");
        QuasiPair P = config().validate();
        PiecewiseFunction f = PiecewiseFunction::parse(fspec);
        Sampler sampler;
        if (sampler_s == "chain")
            sampler = Sampler::Chain;
        else if (sampler_s == "timechange")
            sampler = Sampler::TimeChange;
        else if (sampler_s == "auto")
            sampler = P.image_measure().densities.empty() ? Sampler::Chain : Sampler::TimeChange;
        else
            throw UsageError("unknown sampler '" + sampler_s + "'");
        TimeChangeOptions opt;
        opt.dt = dt;
        if (sampler == Sampler::TimeChange)
            if (auto w = timechange_step_warning(P, dt)) log("warning: " + *w);
        auto ps = simulate_paths(P, x0, horizon, paths, g_.seed, sampler, opt);
        auto est = laplace_functional(ps, f, lambda);
        double resolution = sampler == Sampler::TimeChange ? 10.0 * std::sqrt(dt) : 0.0;
        auto audit = path_property_audit(ps, P, resolution);
        json hist = json::object();
        for (const auto& [k, v] : audit.histogram) hist["1e" + std::to_string(k)] = v;
        long truncated = std::count_if(ps.begin(), ps.end(), [](const PathSample& p) { return p.truncated; });
        report({{"sampler", sampler == Sampler::Chain ? "chain" : "timechange"},
                {"x0", x0},
                {"lambda", lambda},
                {"value", est.value},
                {"std_error", est.std_error},
                {"paths", est.paths},
                {"bias_bound", est.bias_bound},
                {"truncated_paths", truncated},
                {"audit", {{"jumps", audit.jumps}, {"violations", audit.violations}, {"histogram", hist}}}});
        if (!paths_csv.empty()) {
            std::ofstream fcsv(paths_csv, std::ios::binary);
            if (!fcsv) throw Error("cannot write " + paths_csv);
            fcsv << csv_row({"path", "t", "x", "x_hat"});
            for (const auto& p : ps) {
                for (std::size_t i = 0; i < p.times.size(); ++i)
                    fcsv << csv_row({std::to_string(p.stream), csv_real(p.times[i]), csv_real(p.states[i]),
                                     csv_real(p.states_hat[i])});
                if (std::isfinite(p.lifetime))
                    fcsv << csv_row({std::to_string(p.stream), csv_real(p.lifetime), "dead", ""});
            }
        }
        return Ok;
    }

    static json comparison_json(const Comparison& c) {
        return {{"name", c.name}, {"alpha", c.alpha}, {"max_rel", c.max_rel}, {"tol", c.tol},
                {"points", c.points}, {"pass", c.pass()}};
    }

    int compare(const std::vector<double>& alphas) const {
        json rows = json::array();
        bool ok = true;
        auto add = [&](const Comparison& c) {
            rows.push_back(comparison_json(c));
            ok = ok && c.pass();
        };
        if (g_.pair_file.empty()) {
            auto cal = calibrate_normalization(calibration_pairs(), {0.5, 1.0, 2.0}, options());
            for (double a : alphas)
                for (double kappa : {0.5, 1.0, 5.0}) add(compare_snapping_out(a, kappa, 41, 1e-8, options()));
            for (auto mode : {Truncation::AbsorbingAtTop, Truncation::ReflectingAtTop})
                for (double a : alphas)
                    add(compare_birth_death(BDChain::regular_at_infinity(50, mode), a, cal.c_prob, 1e-6, options()));
        } else {
            QuasiPair P = config().validate();
            auto cal = calibrate_normalization(calibration_pairs(), {0.5, 1.0, 2.0}, options());
            for (double a : alphas) add(compare_atomic_pair(g_.pair_file, P, a, cal.c_prob, 1e-6, options()));
        }
        report({{"comparisons", rows}, {"passed", ok}});
        return ok ? Ok : OracleFailure;
    }

    int calibrate(const std::vector<double>& alphas) const {
        std::vector<NamedPair> pairs = calibration_pairs();
        if (!g_.pair_file.empty()) pairs.push_back({g_.pair_file, config()});
        auto cal = calibrate_normalization(pairs, alphas, options());
        json fits = json::array();
        for (const auto& f : cal.fits)
            fits.push_back({{"pair", f.pair}, {"alpha", f.alpha}, {"c", f.c}, {"residual", f.residual},
                            {"samples", f.samples}});
        report({{"c_prob", cal.c_prob},
                {"spread", cal.spread},
                {"consistent", cal.consistent},
                {"identity_factor", cal.identity_factor},
                {"fits", fits}});
        return cal.consistent ? Ok : OracleFailure;
    }

  private:
    Globals g_;
    std::ostream& out_;
    std::ostream& err_;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"qdiff: reproducing kernels and resolvents of quasidiffusions"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--pair", g.pair_file, "pair file (JSON)");
    app.add_option("--out", g.out_dir, "output directory (default: standard output)");
    app.add_option("--cache", g.cache_dir, "cache directory for solution and kernel tables");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--tol", g.tol, "series tolerance");
    app.add_option("--normalization", g.normalization, "paper | probabilistic");

    std::string write_back;
    auto* v = app.add_subcommand("validate", "check a pair file");
    v->add_option("--write", write_back, "write the parsed pair back to this file");
    auto* c = app.add_subcommand("classify", "classify the boundary at r");

    std::vector<std::string> alpha_raw;
    int per_cell = 2;
    auto* s = app.add_subcommand("solve", "harmonic solutions on the image grid");
    s->add_option("--alpha", alpha_raw, "alpha values (comma separated)")->required();
    s->add_option("--per-cell", per_cell, "interior points per cell");

    std::string regime = "plain";
    int grid = 21;
    double from = kNaN, to = kNaN;
    auto* k = app.add_subcommand("kernel", "kernel table on a grid");
    k->add_option("--alpha", alpha_raw, "alpha values")->required();
    k->add_option("--regime", regime, "plain | split | modified | restricted | darned");
    k->add_option("--grid", grid, "grid points per axis");
    k->add_option("--from", from, "grid start");
    k->add_option("--to", to, "grid end");

    double alpha = kNaN, beta = kNaN, lambda = 1.0, dt = 1e-3, horizon = 20.0, x0 = kNaN;
    std::string fspec = "const:1", sampler = "auto", paths_csv;
    std::vector<std::string> points_raw;
    auto* r = app.add_subcommand("resolvent", "apply the resolvent to a piecewise function");
    r->add_option("--alpha", alpha, "alpha")->required();
    r->add_option("--beta", beta, "second parameter for the identity check (default 2 alpha)");
    r->add_option("--f", fspec, "function: const:c | ind:a:b | point:x | JSON pieces");
    r->add_option("--points", points_raw, "evaluation points")->required();

    long paths = 1000;
    auto* m = app.add_subcommand("simulate", "Monte-Carlo Laplace functional");
    m->add_option("--paths", paths, "number of paths");
    m->add_option("--dt", dt, "Brownian time step (time-change sampler)");
    m->add_option("--horizon", horizon, "time horizon");
    m->add_option("--x0", x0, "start point")->required();
    m->add_option("--f", fspec, "function");
    m->add_option("--lambda", lambda, "Laplace parameter");
    m->add_option("--sampler", sampler, "auto | chain | timechange");
    m->add_option("--paths-csv", paths_csv, "write sampled paths to this CSV file");

    std::vector<std::string> calpha_raw{"0.5,1,2"};
    auto* cmp = app.add_subcommand("compare", "series against oracles");
    cmp->add_option("--alpha", calpha_raw, "alpha values");
    auto* cal = app.add_subcommand("calibrate", "fit the probabilistic normalization");
    cal->add_option("--alpha", calpha_raw, "alpha values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? Ok : Usage;
    }

    Runner run(g, out, err);
    try {
        if (*v) return run.validate(write_back);
        if (*c) return run.classify();
        if (*s) return run.solve(alphas_from(alpha_raw), per_cell);
        if (*k) return run.kernel(alphas_from(alpha_raw), regime, grid, from, to);
        if (*r) return run.resolvent(alpha, beta, fspec, parse_list(points_raw, "point"));
        if (*m) return run.simulate(paths, dt, horizon, x0, fspec, lambda, sampler, paths_csv);
        if (*cmp) return run.compare(alphas_from(calpha_raw));
        if (*cal) return run.calibrate(alphas_from(calpha_raw));
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return Usage;
    } catch (const InconclusiveError& e) {
        err << "inconclusive: " << e.what() << "\n";
        return Inconclusive;
    } catch (const OracleError& e) {
        err << "oracle failure: " << e.what() << "\n";
        return OracleFailure;
    } catch (const ValidationError& e) {
        err << "invalid: " << e.what() << "\n";
        return Invalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return Invalid;
    }
    return Usage;
}

}  // namespace qd::cli

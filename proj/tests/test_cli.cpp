#include "helpers.hpp"

#include "../tools/commands.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace qd::cli;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result qdiff(std::vector<std::string> args) {
    args.insert(args.begin(), "qdiff");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("qdiff_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("csv quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
    CHECK(csv_row({"x", "y,z"}) == "x,\"y,z\"\r\n");
    CHECK(csv_real(0.1) == "0.10000000000000001");
    CHECK(std::stod(csv_real(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("content hash") {
    CHECK(content_hash("") == 0xcbf29ce484222325ull);
    CHECK(content_hash("a") == 0xaf63dc4c8601ec8cull);
    CHECK(content_hash("abc") != content_hash("acb"));
}

TEST_CASE("usage errors exit with 1") {
    CHECK(qdiff({}).code == Usage);
    CHECK(qdiff({"bogus"}).code == Usage);
    CHECK(qdiff({"--pair", data_file("natural.json"), "solve"}).code == Usage);
    CHECK(qdiff({"--pair", data_file("natural.json"), "kernel", "--alpha", ""}).code == Usage);
    CHECK(qdiff({"--pair", data_file("natural.json"), "kernel", "--alpha", "1", "--regime", "weird"}).code != Ok);
    CHECK(qdiff({"--help"}).code == Ok);
}

TEST_CASE("validate and classify") {
    auto ok = qdiff({"--pair", data_file("gap_example.json"), "validate"});
    CHECK(ok.code == Ok);
    auto dir = scratch("validate");
    std::ofstream(dir / "bad.json") << R"({"interval": {"left": "reflect", "r": "inf"},
        "measure": {"densities": [[0, "inf", [1]]], "atoms": [[0, 1]]}})";
    auto bad = qdiff({"--pair", (dir / "bad.json").string(), "validate"});
    CHECK(bad.code == Invalid);
    CHECK(bad.err.find("m({0})>0") != std::string::npos);
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK(qdiff({"--pair", (dir / "broken.json").string(), "validate"}).code == Invalid);
    CHECK(qdiff({"--pair", (dir / "missing.json").string(), "validate"}).code == Invalid);

    auto cls = qdiff({"--pair", data_file("exit.json"), "classify"});
    CHECK(cls.code == Ok);
    CHECK(cls.out.find("Exit") != std::string::npos);
}

TEST_CASE("validate --write round trip") {
    auto dir = scratch("roundtrip");
    auto first = dir / "a.json", second = dir / "b.json";
    CHECK(qdiff({"--pair", data_file("five_atoms.json"), "validate", "--write", first.string()}).code == Ok);
    CHECK(qdiff({"--pair", first.string(), "validate", "--write", second.string()}).code == Ok);
    CHECK(slurp(first) == slurp(second));
}

TEST_CASE("inconclusive verdict exits with 3") {
    auto dir = scratch("inconclusive");
    // atoms accumulating at r with masses decaying too slowly to certify either way
    std::ofstream(dir / "slow.json") << R"({"interval": {"left": "reflect", "r": 1, "r_included": false},
        "measure": {"families": [[1, -0.5, 0.5, 1, 0.999999999999, -1]]}})";
    auto cls = qdiff({"--pair", (dir / "slow.json").string(), "classify"});
    CHECK(cls.code == Inconclusive);
    CHECK(qdiff({"--pair", (dir / "slow.json").string(), "solve", "--alpha", "1"}).code == Inconclusive);
}

TEST_CASE("kernel output and cache") {
    auto dir = scratch("cache");
    std::vector<std::string> args{"--pair", data_file("gap_example.json"), "--cache", dir.string(),
                                  "kernel", "--alpha", "1", "--regime", "split", "--grid", "7"};
    auto first = qdiff(args);
    REQUIRE(first.code == Ok);
    CHECK(first.out.rfind("alpha,x,x_side,y,y_side,g\r\n", 0) == 0);
    int files = 0;
    for (auto& e : fs::directory_iterator(dir)) files += e.path().extension() == ".csv";
    CHECK(files == 1);
    auto second = qdiff(args);
    CHECK(second.code == Ok);
    CHECK(second.out == first.out);

    auto no_cache = qdiff({"--pair", data_file("gap_example.json"), "kernel", "--alpha", "1", "--regime", "split",
                           "--grid", "7"});
    CHECK(no_cache.out == first.out);

    auto other = qdiff({"--pair", data_file("gap_example.json"), "--cache", dir.string(), "kernel", "--alpha", "2",
                        "--regime", "split", "--grid", "7"});
    CHECK(other.out != first.out);
}

TEST_CASE("solve, resolvent and simulate") {
    auto sol = qdiff({"--pair", data_file("regular_reflecting.json"), "solve", "--alpha", "1"});
    CHECK(sol.code == Ok);
    CHECK(sol.out.rfind("alpha,x_hat,u,", 0) == 0);

    auto res = qdiff({"--pair", data_file("regular_reflecting.json"), "resolvent", "--alpha", "1", "--f", "const:1",
                      "--points", "0,0.5,1"});
    CHECK(res.code == Ok);
    auto j = nlohmann::json::parse(res.out);
    REQUIRE(j.contains("identity"));
    CHECK(j["identity"]["factor"].get<double>() == doctest::Approx(2.0).epsilon(1e-6));

    auto sim = qdiff({"--pair", data_file("five_atoms.json"), "--seed", "3", "simulate", "--x0", "1", "--paths", "200",
                      "--f", "const:1", "--lambda", "1"});
    CHECK(sim.code == Ok);
    auto again = qdiff({"--pair", data_file("five_atoms.json"), "--seed", "3", "simulate", "--x0", "1", "--paths",
                        "200", "--f", "const:1", "--lambda", "1"});
    CHECK(again.out == sim.out);
}

TEST_CASE("compare and calibrate") {
    auto cmp = qdiff({"compare", "--alpha", "1"});
    CHECK(cmp.code == Ok);
    auto cal = qdiff({"calibrate"});
    CHECK(cal.code == Ok);
    auto j = nlohmann::json::parse(cal.out);
    CHECK(j["c_prob"].get<double>() == doctest::Approx(2.0).epsilon(1e-8));
}

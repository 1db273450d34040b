// test_cli_io.cpp - config parsing, table output and the command driver

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "tlc/cli_io.hpp"

using namespace tlc;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result call(std::vector<std::string> args) {
    args.insert(args.begin(), "tlc");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string strip_timestamp(const std::string& s) {
    std::istringstream in(s);
    std::string line, kept;
    while (std::getline(in, line))
        if (line.find("generated_at") == std::string::npos) kept += line + "\n";
    return kept;
}

std::string strip_jsonl_timestamp(const std::string& s) {
    std::istringstream in(s);
    std::string line, kept;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            auto j = nlohmann::ordered_json::parse(line);
            j["metadata"].erase("generated_at");
            line = j.dump();
            first = false;
        }
        kept += line + "\n";
    }
    return kept;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto dir = std::filesystem::temp_directory_path() / "tlc_test_cli_io";
    std::filesystem::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
}

} // namespace

TEST_CASE("config parsing") {
    std::istringstream a("# comment\n[physics]\nlambda = 0.01\n  kT_over_delta=0.5  \n\nseed = 7\n");
    const auto kv = parse_config(a);
    CHECK(kv.at("lambda") == "0.01");
    CHECK(kv.at("kT_over_delta") == "0.5");
    CHECK(kv.at("seed") == "7");
    CHECK(kv.size() == 3);

    std::istringstream bad("lambda 0.01\n");
    CHECK_THROWS_AS(parse_config(bad), UsageError);

    // CSV table: metadata lines are read, data rows skipped
    std::istringstream csv("# command = coeffs\r\n# lambda = 0.02\r\nname,value\r\nk10,1\r\n");
    const auto kc = parse_config(csv);
    CHECK(kc.at("command") == "coeffs");
    CHECK(kc.at("lambda") == "0.02");
    CHECK(kc.size() == 2);

    // JSON-lines table
    std::istringstream jl("{\"metadata\":{\"command\":\"scan\",\"seed\":\"9\"}}\n{\"x\":1}\n");
    const auto kj = parse_config(jl);
    CHECK(kj.at("command") == "scan");
    CHECK(kj.at("seed") == "9");
}

TEST_CASE("run configuration") {
    const auto rc = run_config_from({});
    CHECK(rc.params.beta == 10.0);
    CHECK(rc.params.omega_drive == 2.0);
    CHECK(rc.seed == 42);
    const auto r2 = run_config_from({{"kT_over_delta", "0.5"}, {"seed", "123"}, {"integrator", "rk45"}});
    CHECK(r2.params.beta == 2.0);
    CHECK(r2.seed == 123);
    CHECK(r2.integ.method == Method::RK45);
    CHECK_THROWS_AS(run_config_from({{"lambda", "abc"}}), UsageError);
    CHECK_THROWS_AS(run_config_from({{"kT_over_delta", "0"}}), DomainError);
}

TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, -1.0 / 3.0, 6.393053348099296e-05, 1e300, 5e-324, 0.0}) {
        CHECK(parse_number(format_number(v), "x") == v);
    }
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(std::isinf(parse_number("-inf", "x")));
    CHECK_THROWS_AS(parse_number("1.5x", "x"), UsageError);
    CHECK_THROWS_AS(parse_number("", "x"), UsageError);
}

TEST_CASE("CSV quoting and writing") {
    CHECK(csv_quote("plain") == "plain");
    CHECK(csv_quote("a,b") == "\"a,b\"");
    CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_quote("two\nlines") == "\"two\nlines\"");

    OutputTable t;
    t.columns = {"name", "value"};
    t.rows = {{std::string("x,y"), 1.5}, {std::string("n"), std::int64_t{3}}};
    t.metadata = {{"command", "test"}};
    std::ostringstream os;
    write_csv(t, os);
    CHECK(os.str() == "# command = test\r\nname,value\r\n\"x,y\",1.5\r\nn,3\r\n");

    std::ostringstream js;
    t.rows.push_back({std::string("z"), std::numeric_limits<double>::quiet_NaN()});
    write_jsonl(t, js);
    std::istringstream in(js.str());
    std::string line;
    std::getline(in, line);
    CHECK(nlohmann::json::parse(line)["metadata"]["command"] == "test");
    std::getline(in, line);
    CHECK(nlohmann::json::parse(line)["name"] == "x,y");
    std::getline(in, line);
    std::getline(in, line);
    CHECK(nlohmann::json::parse(line)["value"].is_null());
}

TEST_CASE("exit codes") {
    CHECK(call({}).code == 1);
    CHECK(call({"--help"}).code == 0);
    CHECK(call({"nosuchcommand"}).code == 1);
    CHECK(call({"coeffs", "--bogus", "1"}).code == 1);
    CHECK(call({"evolve", "--initial", "1,2"}).code == 1);
    CHECK(call({"evolve", "--initial", "0,0,1.5"}).code == 1);
    CHECK(call({"coeffs", "--kT-over-delta", "-1"}).code == 1);
    CHECK(call({"coeffs", "--format", "xml"}).code == 1);
    CHECK(call({"coeffs", "--config", "/nonexistent/file.ini"}).code == 1);
    const auto f = temp_file("unknown.ini", "not_a_key = 3\n");
    CHECK(call({"coeffs", "--config", f.string()}).code == 1);
    // quadrature that cannot converge is a numerical failure
    const auto r = call({"coeffs", "--quad-max-subdivisions", "1", "--quad-rel-tol", "1e-12"});
    CHECK(r.code == 2);
    CHECK(r.out.empty());
}

TEST_CASE("stationary table") {
    const auto r = call({"stationary"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# seed = 42\r\n") != std::string::npos);
    CHECK(r.out.find("dynamics,r1,r2,r3") != std::string::npos);
    CHECK(r.out.find("\r\ncp,0,0,-0.83513183677") != std::string::npos);
}

TEST_CASE("config precedence: defaults < file < flags") {
    const auto f = temp_file("prec.ini", "lambda = 0.02\nt_max = 1\npoints = 3\ninitial = 0,0,0.5\n");
    const auto r = call({"evolve", "--config", f.string(), "--points", "5"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# lambda = 0.02\r\n") != std::string::npos);
    CHECK(r.out.find("# points = 5\r\n") != std::string::npos);
    CHECK(r.out.find("# initial = 0,0,0.5\r\n") != std::string::npos);
}

TEST_CASE("tables regenerate from their own metadata") {
    SUBCASE("evolve, csv") {
        const auto a = call({"evolve", "--t-max", "3", "--points", "31", "--initial", "0.1,0.2,0.3"});
        REQUIRE(a.code == 0);
        const auto f = temp_file("evolve.csv", a.out);
        const auto b = call({"rerun", "--config", f.string()});
        REQUIRE(b.code == 0);
        CHECK(strip_timestamp(a.out) == strip_timestamp(b.out));
        const auto c = call({"evolve", "--config", f.string()});
        CHECK(strip_timestamp(a.out) == strip_timestamp(c.out));
    }
    SUBCASE("scan, jsonl, thread count does not matter") {
        const std::vector<std::string> base{"scan", "--samples", "3000", "--kt-list", "0.1,0.5", "--format", "jsonl"};
        auto args1 = base, args3 = base;
        args1.insert(args1.end(), {"--threads", "1"});
        args3.insert(args3.end(), {"--threads", "3"});
        const auto a = call(args1);
        const auto b = call(args3);
        REQUIRE(a.code == 0);
        REQUIRE(b.code == 0);
        CHECK(strip_jsonl_timestamp(a.out) == strip_jsonl_timestamp(b.out));
        const auto f = temp_file("scan.jsonl", a.out);
        const auto c = call({"rerun", "--config", f.string()});
        REQUIRE(c.code == 0);
        CHECK(strip_jsonl_timestamp(a.out) == strip_jsonl_timestamp(c.out));
    }
    SUBCASE("a different seed changes the scan") {
        const auto a = call({"scan", "--samples", "500", "--kt-list", "0.1"});
        const auto b = call({"scan", "--samples", "500", "--kt-list", "0.1", "--seed", "7"});
        REQUIRE(a.code == 0);
        REQUIRE(b.code == 0);
        CHECK(strip_timestamp(a.out) != strip_timestamp(b.out));
    }
}

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"
#include "sps2/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_cli;   // path to the sps2 binary
std::string g_data;  // path to the fixture directory

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    std::string cmd = g_cli + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& tag) {
    fs::path d = fs::temp_directory_path() / ("sps2_cli_test_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: test_cli [doctest options] <cli-binary> <data-dir>\n");
        return 1;
    }
    g_cli = argv[argc - 2];
    g_data = argv[argc - 1];
    doctest::Context ctx(argc - 2, argv);
    return ctx.run();
}

TEST_CASE("canonical serialisation round-trips byte-identically") {
    sps2::SystemSpec sys = sps2::load_system(g_data + "/generic.json");
    std::string first = sps2::serialize_system(sys);
    sps2::SystemSpec again = sps2::parse_system(first);
    CHECK(sps2::serialize_system(again) == first);
    // a canonical fixture survives save(load(.)) exactly
    CHECK(first == slurp(g_data + "/generic.json"));
}

TEST_CASE("malformed input maps to exit code 2") {
    CHECK(run_cli("levelt " + g_data + "/corrupt.json") == 2);
    CHECK(run_cli("levelt " + g_data + "/does_not_exist.json") == 2);
}

TEST_CASE("coefficients beyond the declared truncation map to exit code 2") {
    CHECK(run_cli("normal-form " + g_data + "/trunc_mismatch.json") == 2);
    CHECK_THROWS_AS((void)sps2::load_system(g_data + "/trunc_mismatch.json"), sps2::ParseError);
}

TEST_CASE("normal-form on the generic fixture succeeds and reports pass") {
    fs::path out = fresh_dir("nf");
    CHECK(run_cli("normal-form " + g_data + "/generic.json --out " + out.string()) == 0);
    json rep = json::parse(slurp((out / "report.json").string()));
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.contains("conventions"));
}

TEST_CASE("levelt on the diagonal fixture: exit 0, deterministic report, CSV shape") {
    fs::path out1 = fresh_dir("lv1"), out2 = fresh_dir("lv2");
    std::string common = "levelt " + g_data + "/diagonal.json --eps 0.1,0.05";
    CHECK(run_cli(common + " --out " + out1.string() + " --csv " + (out1 / "basis.csv").string()) == 0);
    CHECK(run_cli(common + " --out " + out2.string()) == 0);

    json r1 = json::parse(slurp((out1 / "report.json").string()));
    json r2 = json::parse(slurp((out2 / "report.json").string()));
    CHECK(r1.at("pass").get<bool>());
    r1.erase("timestamp");
    r2.erase("timestamp");
    CHECK(r1 == r2);

    std::ifstream csv((out1 / "basis.csv").string());
    std::string header;
    REQUIRE(std::getline(csv, header));
    CHECK(header == "x,eps,abs_psi1,abs_psi2,fitted_exponents,abs_c12");
    std::string line;
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows > 0);
}

TEST_CASE("triangularize on the generic fixture: exit 0 and pass") {
    fs::path out = fresh_dir("tri");
    CHECK(run_cli("triangularize " + g_data + "/generic.json --eps 0.1,0.05 --out " +
                  out.string()) == 0);
    json rep = json::parse(slurp((out / "report.json").string()));
    CHECK(rep.at("pass").get<bool>());
}

TEST_CASE("verify command runs the estimate suites") {
    fs::path out = fresh_dir("ver");
    CHECK(run_cli("verify " + g_data + "/diagonal.json --out " + out.string()) == 0);
    json rep = json::parse(slurp((out / "report.json").string()));
    CHECK(rep.at("pass").get<bool>());
}

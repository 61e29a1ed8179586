#include "sps2/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sps2 {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& pointer, const std::string& what) {
    throw ParseError("system spec: " + pointer + ": " + what);
}

double require_number(const ordered_json& j, const std::string& ptr) {
    if (!j.is_number()) fail(ptr, "expected a number");
    return j.get<double>();
}

EpsExpansion parse_entry(const ordered_json& arr, const std::string& ptr, int K, int N,
                         double radius, ArcSpec arc) {
    EpsExpansion f(K, N, radius, arc);
    if (!arr.is_array()) fail(ptr, "expected an array of [k, n, re, im] quadruples");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = ptr + "/" + std::to_string(i);
        const ordered_json& q = arr[i];
        if (!q.is_array() || q.size() != 4) fail(p, "expected a quadruple [k, n, re, im]");
        double kd = require_number(q[0], p + "/0");
        double nd = require_number(q[1], p + "/1");
        int k = static_cast<int>(kd), n = static_cast<int>(nd);
        if (kd != k || k < 0) fail(p + "/0", "eps power must be a nonnegative integer");
        if (nd != n || n < 0) fail(p + "/1", "x power must be a nonnegative integer");
        if (k > K) fail(p + "/0", "eps power exceeds trunc/eps = " + std::to_string(K));
        if (n > N) fail(p + "/1", "x power exceeds trunc/x = " + std::to_string(N));
        f.order(k)[n] += cd{require_number(q[2], p + "/2"), require_number(q[3], p + "/3")};
    }
    return f;
}

}  // namespace

SystemSpec parse_system(const std::string& json_text) {
    ordered_json j = ordered_json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw ParseError("system spec: /: not valid JSON");
    if (!j.is_object()) fail("/", "expected an object");

    for (const char* key : {"arc", "disc_radius", "sector_radius", "trunc", "matrix"})
        if (!j.contains(key)) fail("/" + std::string(key), "missing");

    const ordered_json& arcj = j["arc"];
    if (!arcj.is_array() || arcj.size() != 2) fail("/arc", "expected [theta_minus, theta_plus]");
    double tm = require_number(arcj[0], "/arc/0"), tp = require_number(arcj[1], "/arc/1");
    if (tm > tp) fail("/arc", "theta_minus > theta_plus");

    double r1 = require_number(j["disc_radius"], "/disc_radius");
    double r2 = require_number(j["sector_radius"], "/sector_radius");
    if (!(r1 > 0.0)) fail("/disc_radius", "must be positive");
    if (!(r2 > 0.0)) fail("/sector_radius", "must be positive");

    const ordered_json& tr = j["trunc"];
    if (!tr.is_object() || !tr.contains("eps") || !tr.contains("x"))
        fail("/trunc", "expected {\"eps\": K, \"x\": N}");
    int K = static_cast<int>(require_number(tr["eps"], "/trunc/eps"));
    int N = static_cast<int>(require_number(tr["x"], "/trunc/x"));
    if (K < 4) fail("/trunc/eps", "truncation must be >= 4");
    if (N < 4) fail("/trunc/x", "truncation must be >= 4");

    const ordered_json& m = j["matrix"];
    if (!m.is_object()) fail("/matrix", "expected an object");
    ArcSpec arc(tm, tp);
    SystemSpec sys;
    sys.arc = arc;
    sys.disc_radius = r1;
    sys.sector_radius = r2;
    const char* names[2][2] = {{"a11", "a12"}, {"a21", "a22"}};
    for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 2; ++c) {
            const char* key = names[i][c];
            if (!m.contains(key)) fail("/matrix/" + std::string(key), "missing");
            sys.A(i, c) = parse_entry(m[key], "/matrix/" + std::string(key), K, N, r1, arc);
        }
    sys.validate();
    return sys;
}

SystemSpec load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("system spec: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_system(ss.str());
}

std::string serialize_system(const SystemSpec& sys) {
    ordered_json j;
    j["arc"] = {sys.arc.theta_minus, sys.arc.theta_plus};
    j["disc_radius"] = sys.disc_radius;
    j["sector_radius"] = sys.sector_radius;
    j["trunc"] = {{"eps", sys.eps_order()}, {"x", sys.x_order()}};
    ordered_json m = ordered_json::object();
    const char* names[2][2] = {{"a11", "a12"}, {"a21", "a22"}};
    for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 2; ++c) {
            ordered_json arr = ordered_json::array();
            const EpsExpansion& f = sys.A(i, c);
            for (int k = 0; k <= f.eps_order(); ++k)
                for (int n = 0; n <= f.x_order(); ++n) {
                    cd v = f.order(k)[n];
                    if (v == cd{0.0, 0.0}) continue;
                    arr.push_back({k, n, v.real(), v.imag()});
                }
            m[names[i][c]] = std::move(arr);
        }
    j["matrix"] = std::move(m);
    return j.dump(2) + "\n";
}

void save_system(const SystemSpec& sys, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("system spec: cannot write " + path);
    out << serialize_system(sys);
}

}  // namespace sps2

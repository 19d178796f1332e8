#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cpq/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace cpq::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Out {
    int code;
    std::string out, err;
};

Out call(std::vector<std::string> args)
{
    std::ostringstream o, e;
    int c = run(args, o, e);
    return {c, o.str(), e.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("cpq_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("golden reports")
{
    const fs::path g = CPQ_GOLDEN_DIR;
    std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
        {"rmatrix_n2_symbolic.json", {"rmatrix", "--N", "2", "--mode", "symbolic"}},
        {"rep_n5.json", {"rep", "--N", "5"}},
        {"algebra_n2_symbolic.json", {"algebra", "--N", "2"}},
        {"verify_gamma_tilde_n2.json", {"verify", "--calculus", "gamma-tilde", "--N", "2", "--mode", "symbolic"}},
        {"classify_red1_n2.json", {"classify", "--case", "red1", "--N", "2"}},
    };
    for (auto& [file, args] : cases) {
        auto r = call(args);
        CHECK_MESSAGE(r.code == kPass, file);
        CHECK_MESSAGE(json::parse(r.out) == json::parse(slurp(g / file)), file);
    }
}

TEST_CASE("exit codes")
{
    CHECK(call({"rmatrix", "--N", "1"}).code == kBadConfig);
    CHECK(call({"rmatrix", "--N", "3", "--q", "-1"}).code == kBadConfig);
    CHECK(call({"rmatrix", "--N", "3", "--q", "0"}).code == kBadConfig);
    CHECK(call({"rmatrix", "--N", "3", "--q", "abc"}).code == kBadConfig);
    CHECK(call({"algebra", "--N", "3", "--degree", "4"}).code == kBadConfig);
    CHECK(call({"classify", "--N", "4", "--mode", "symbolic"}).code == kBadConfig);
    CHECK(call({"classify", "--case", "red3", "--N", "2"}).code == kBadConfig);
    CHECK(call({"verify", "--N", "2"}).code == kBadConfig);
    CHECK(call({"verify", "--calculus", "gamma-hat", "--N", "2"}).code == kBadConfig);
    CHECK(call({"verify", "--calculus", "gamma", "--N", "2", "--corrupt", "zz"}).code == kBadConfig);
    CHECK(call({"bogus"}).code == kBadConfig);
    CHECK(call({"verify", "--sphere", "G9", "--N", "2"}).code == kBadConfig);
    CHECK(call({"verify", "--sphere", "G4", "--tau", "0", "--N", "2"}).code == kBadConfig);
    CHECK(call({"verify", "--sphere", "Gt1", "--lambda", "inf", "--N", "2"}).code == kBadConfig);
    CHECK(call({"verify", "--sphere", "G2", "--omega", "1/(q-3/2)", "--N", "2", "--mode", "sampled", "--q", "3/2"}).code ==
          kBadConfig);
    CHECK(call({"verify", "--sphere", "Gt3", "--lambda", "inf", "--N", "2"}).code == kPass);
    CHECK(call({"rmatrix", "--N", "5", "--mode", "sampled", "--q", "3/2"}).code == kPass);
    CHECK(call({"verify", "--calculus", "gamma-tilde", "--N", "2", "--corrupt", "c"}).code == kVerifyFail);
    CHECK(call({"verify", "--calculus", "gamma-tilde-tilde", "--N", "2", "--mode", "sampled"}).code == kPass);
}

TEST_CASE("cache hits are bit-identical")
{
    auto dir = scratch("hit");
    std::vector<std::string> args = {"verify", "--calculus", "gamma", "--N", "2", "--cache-dir", dir.string()};
    auto a = call(args);
    REQUIRE(a.code == kPass);
    std::size_t entries = 0;
    for (auto& e : fs::directory_iterator(dir)) {
        ++entries;
        CHECK(e.path().extension() == ".json");
    }
    CHECK(entries >= 2); // convention and verification
    auto b = call(args);
    CHECK(b.code == kPass);
    CHECK(a.out == b.out);
    fs::remove_all(dir);
}

TEST_CASE("corrupt cache entry is rebuilt and reported")
{
    auto dir = scratch("corrupt");
    std::vector<std::string> args = {"algebra", "--N", "2", "--cache-dir", dir.string()};
    auto a = call(args);
    REQUIRE(a.code == kPass);
    for (auto& e : fs::directory_iterator(dir)) {
        std::ofstream(e.path(), std::ios::app) << "garbage";
    }
    auto b = call(args);
    CHECK(b.code == kCacheError);
    CHECK(b.out == a.out);
    CHECK(b.err.find("corrupt") != std::string::npos);
    auto c = call(args); // rebuilt entries are valid again
    CHECK(c.code == kPass);
    CHECK(c.out == a.out);
    fs::remove_all(dir);
}

TEST_CASE("unwritable cache directory")
{
    auto dir = scratch("blocked");
    std::ofstream(dir.string()) << "not a directory";
    auto r = call({"rmatrix", "--N", "2", "--cache-dir", dir.string()});
    CHECK(r.code == kPass); // rmatrix does not touch the cache
    r = call({"algebra", "--N", "2", "--cache-dir", dir.string()});
    CHECK(r.code == kCacheError);
    fs::remove(dir);
}

TEST_CASE("cache key covers mode and N")
{
    Cache c(scratch("keys").string());
    json k1{{"N", 2}, {"mode", "symbolic"}}, k2{{"N", 2}, {"mode", "sampled q=3/2"}}, k3{{"N", 3}, {"mode", "symbolic"}};
    CHECK(c.path_for(k1) != c.path_for(k2));
    CHECK(c.path_for(k1) != c.path_for(k3));
    c.store(k1, json{{"x", 1}});
    bool bad = false;
    CHECK(c.load(k1, bad) == json{{"x", 1}});
    CHECK_FALSE(c.load(k2, bad).has_value());
    CHECK_FALSE(bad);
}

TEST_CASE("markdown rendering")
{
    auto r = call({"rmatrix", "--N", "2", "--format", "markdown"});
    CHECK(r.code == kPass);
    CHECK(r.out.rfind("# rmatrix", 0) == 0);
    CHECK(r.out.find("| identity | pass |") != std::string::npos);
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

// Acceptance suite: one line per criterion. `acceptance 4` runs criterion 4 only.
#include "cpq/calculus.hpp"
#include "cpq/cli.hpp"
#include "cpq/repdecomp.hpp"
#include "cpq/restrict.hpp"

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

using namespace cpq;
using nlohmann::json;

namespace {

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;
    void need(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            notes.push_back(what);
        }
    }
};

json cli(const std::vector<std::string>& args, int* code = nullptr)
{
    std::ostringstream out, err;
    int c = cli::run(args, out, err);
    if (code)
        *code = c;
    if (out.str().empty())
        return json{{"error", err.str()}, {"exit", c}};
    return json::parse(out.str());
}

// coefficient text produced by the CLI equals the expected closed form
bool same_value(const json& got, const std::string& expect)
{
    try {
        return QScalar::parse(got.get<std::string>()) == QScalar::parse(expect);
    } catch (const std::exception&) {
        return false;
    }
}

void rmatrix_suite(Verdict& v)
{
    for (int N = 2; N <= 4; ++N)
        for (auto& r : check_identities(build_family(N, Field<QScalar>{})))
            v.need(r.pass, r.identity + " symbolic N=" + std::to_string(N));
    for (int N : {5, 6})
        for (Rat q0 : {Rat(3, 2), Rat(2)})
            for (auto& r : check_identities(build_family(N, Field<Rat>(q0))))
                v.need(r.pass, r.identity + " N=" + std::to_string(N) + " q=" + to_string(q0));
}

void rep_suite(Verdict& v)
{
    const int N = 5;
    auto tower = pi_tower(N, 4);
    v.need(dim(tower[1], N) == 24, "dim pi(1) = 24");
    v.need(dim(tower[2], N) == 200, "dim pi(2) = 200");
    Decomp adj{{tower[1], 1}};
    auto sq = lr_tensor(adj, adj, N);
    v.need(total_dim(sq, N) == 576, "adjoint x adjoint sums to 576");
    auto mc = morphism_count(N, 4);
    std::vector<int> expect = {2, 5, 4, 1, 0};
    std::ostringstream got;
    for (int c : mc.per_k_common)
        got << c << " ";
    v.need(mc.per_k_common == expect, "per-k common summands (2 5 4 1 0), got (" + got.str() + ")");
    v.need(mc.after_trace == 27, "27 ansatz morphisms");
}

void algebra_suite(Verdict& v)
{
    std::vector<std::vector<std::string>> runs = {
        {"algebra", "--N", "2", "--mode", "symbolic"},
        {"algebra", "--N", "3", "--mode", "symbolic"},
        {"algebra", "--N", "4", "--mode", "sampled"},
    };
    for (auto& a : runs) {
        int code = 0;
        json j = cli(a, &code);
        v.need(code == 0, "algebra N=" + a[2] + " exit " + std::to_string(code));
        if (!j.contains("runs"))
            continue;
        for (auto& r : j["runs"]) {
            std::string tag = " N=" + a[2] + " " + r["field"].get<std::string>();
            v.need(r["dims_match"].get<bool>(), "quotient dims" + tag);
            v.need(r["implied_relation"].get<bool>(), "implied relation" + tag);
            v.need(r["convention"]["unique"].get<bool>(), "unique convention" + tag);
        }
    }
}

const std::map<std::string, std::string> kFree = {
    {"a1", "0"}, {"a2", "q^-1"}, {"a3", "q"},  {"a4", "1"},  {"b1", "-1"},
    {"b2", "-q"}, {"b3", "-q"},  {"b4", "-1"}, {"c", "q^2 + 1"},
};

void free_case(Verdict& v)
{
    json j = cli({"classify", "--case", "free", "--N", "6", "--mode", "sampled"});
    v.need(j.value("solution_dim", -1) == 0, "solution_dim 0");
    v.need(j.value("samples_agree", false), "both samples agree");
    for (auto& n : kAnsatzNames) {
        auto it = kFree.find(n);
        std::string expect = it == kFree.end() ? "0" : it->second;
        v.need(j.contains("coefficients") && same_value(j["coefficients"][n], expect), std::string(n) + " = " + expect);
    }
}

void red1_case(Verdict& v)
{
    const int N = 6;
    json j = cli({"classify", "--case", "red1", "--N", "6", "--mode", "sampled"});
    auto k = q_constants(N, Field<QScalar>{});
    v.need(j.contains("relation"), "relation reported");
    if (!j.contains("relation"))
        return;
    v.need(same_value(j["relation"]["A"], "q^2"), "A = q^2");
    v.need(same_value(j["relation"]["B"], "q^-1"), "B = q^-1");
    v.need(same_value(j["relation"]["C"], (-k.sii / k.si).str()), "C = -sii/si");
    v.need(same_value(j["relation"]["D"], (QScalar(-1) / k.si).str()), "D = -1/si");
    for (const char* n : {"a7", "a8", "b1", "b3", "a9", "g2"})
        v.need(same_value(j["coefficients"][n], "0"), std::string(n) + " = 0");
    v.need(j.value("solution_dim", -1) == 0, "solution_dim 0");
    v.need(j.value("samples_agree", false), "both samples agree");
}

void red2_case(Verdict& v)
{
    json j = cli({"classify", "--case", "red2", "--N", "6", "--mode", "sampled"});
    v.need(j.value("solution_dim", -1) == 0, "N=6 unique");
    v.need(j.contains("coefficients") && same_value(j["coefficients"]["a5"], "0") && same_value(j["coefficients"]["a6"], "0"),
           "alpha = beta = 0");
    for (auto N : {"3", "4"}) {
        json s = cli({"classify", "--case", "red2", "--N", N, "--mode", "sampled"});
        v.need(s.value("published_in_solution_set", false), std::string("published values in the set at N=") + N);
    }
}

void verification(Verdict& v)
{
    for (auto c : {"gamma", "gamma-tilde", "gamma-tilde-tilde"}) {
        int code = 0;
        cli({"verify", "--calculus", c, "--N", "2", "--mode", "symbolic"}, &code);
        v.need(code == 0, std::string(c) + " N=2 symbolic");
        for (auto N : {"3", "4"}) {
            cli({"verify", "--calculus", c, "--N", N, "--mode", "sampled"}, &code);
            v.need(code == 0, std::string(c) + " N=" + N + " sampled");
        }
    }
    int code = 0;
    cli({"verify", "--factorization", "--N", "2", "--mode", "symbolic"}, &code);
    v.need(code == 0, "factorization N=2 symbolic");
    cli({"verify", "--factorization", "--N", "3", "--mode", "sampled"}, &code);
    v.need(code == 0, "factorization N=3 sampled");
}

void negative_controls(Verdict& v)
{
    // R suite: one changed entry
    Field<Rat> F(Rat(3, 2));
    auto R = build_R(3, F);
    R.set({1, 2, 1, 2}, R.get({1, 2, 1, 2}) + Rat(1));
    auto pert = build_family_from(R, F);
    bool any_fail = false;
    for (auto& r : check_identities(pert))
        any_fail = any_fail || !r.pass;
    v.need(any_fail, "perturbed R rejected by the R suite");

    // representation suite: a frame with one extra box is not the adjoint
    v.need(dim(Frame::canonical({2, 1}, 5), 5) != 24, "wrong frame changes the dimension");

    // algebra suite: every other weight law fails some resolver check
    auto conv = resolve_convention(build_family(2, F));
    bool rejected = false;
    for (auto& [c, checks] : conv.matrix)
        if (c.fingerprint() != conv.resolved.fingerprint())
            for (auto& [n, ok] : checks)
                rejected = rejected || !ok;
    v.need(rejected, "wrong weight law rejected by the resolver");

    // calculus suite
    int code = 0;
    cli({"verify", "--calculus", "gamma-tilde", "--N", "2", "--corrupt", "c"}, &code);
    v.need(code == 1, "corrupted c in gamma-tilde exits 1");
    cli({"verify", "--calculus", "gamma", "--N", "3", "--mode", "sampled", "--q", "3/2", "--corrupt", "a2", "--stride", "7"}, &code);
    v.need(code == 1, "corrupted a2 in gamma exits 1");
    cli({"verify", "--calculus", "gamma-tilde-tilde", "--N", "2", "--corrupt", "b2"}, &code);
    v.need(code == 1, "corrupted b2 in gamma-tilde-tilde exits 1");
    {
        auto fam = build_family(2, Field<QScalar>{});
        CalculusEngine<QScalar> eng(fam, Convention{});
        auto rep = verify_calculus(eng, CaseTag::Free, std::vector<QScalar>(kTerms), RelationCoeffs<QScalar>{});
        bool kl4 = false;
        for (auto& c : rep.conditions)
            kl4 = kl4 || (c.condition == "kl4" && c.failures > 0);
        v.need(kl4, "zero ansatz fails kl4");
    }
}

SphereParams<Rat> params(std::initializer_list<std::pair<const char*, Rat>> l, bool inf = false)
{
    SphereParams<Rat> p;
    for (auto& [n, x] : l) {
        std::string k = n;
        (k == "alpha" ? p.alpha : k == "tau" ? p.tau : k == "omega" ? p.omega : k == "psi" ? p.psi : k == "rho" ? p.rho : p.lambda) = x;
    }
    p.lambda_inf = inf;
    return p;
}

void sphere_families(Verdict& v)
{
    const int N = 2;
    Field<Rat> F(Rat(3, 2));
    const Rat q2 = F.qpow(2);
    auto fam = build_family(N, F);
    CalculusEngine<Rat> eng(fam, resolve_convention(fam).resolved);
    using SF = SphereFamily;
    std::vector<std::pair<SF, SphereParams<Rat>>> grid = {
        {SF::G1, params({{"alpha", 1}, {"tau", 0}})},
        {SF::G1, params({{"alpha", 2}, {"tau", Rat(1, 3)}})},
        {SF::G1, params({{"alpha", Rat(-1, 2)}, {"tau", 4}})},
        {SF::G2, params({{"alpha", 1}, {"omega", 1}})},
        {SF::G2, params({{"alpha", 2}, {"omega", Rat(5, 7)}})},
        {SF::G2, params({{"alpha", Rat(-1, 2)}, {"omega", -2}})},
        {SF::G3, params({{"omega", 1}, {"psi", 1}})},
        {SF::G3, params({{"omega", Rat(5, 7)}, {"psi", 3}})},
        {SF::G3, params({{"omega", -2}, {"psi", Rat(1, 2)}})},
        {SF::G4, params({{"rho", 1}, {"tau", 1}})},
        {SF::G4, params({{"rho", Rat(2, 5)}, {"tau", Rat(1, 3)}})},
        {SF::G4, params({{"rho", 3}, {"tau", 4}})},
        {SF::Gt1, params({{"lambda", q2}})},
        {SF::Gt1, params({{"lambda", Rat(7, 3)}})},
        {SF::Gt1, params({{"lambda", Rat(-1, 2)}})},
        {SF::Gt2, params({{"lambda", 1}})},
        {SF::Gt2, params({{"lambda", Rat(7, 3)}})},
        {SF::Gt2, params({{"lambda", Rat(-1, 2)}})},
        {SF::Gt3, params({{"lambda", Rat(7, 3)}})},
        {SF::Gt3, params({{"lambda", 0}})},
        {SF::Gt3, params({}, true)},
    };
    // the H± weights are forced by well-definedness
    for (SF f : {SF::G1, SF::G2, SF::Gt3}) {
        int good = 0;
        bool is_default = false;
        for (auto& [w, ok] : scan_hweights(eng, f, grid[0].second))
            if (ok) {
                ++good;
                is_default = w.fingerprint() == HWeights{}.fingerprint();
            }
        v.need(good == 1 && is_default, "unique H weights for " + family_name(f));
    }
    for (auto& [f, p] : grid) {
        auto r = restrict_sphere_calculus(eng, f, p);
        std::string tag = r.family + " (" + r.params + ")";
        v.need(r.well_defined, tag + " well defined");
        v.need(r.h_identity, tag + " H = si tau (alpha H+ + H-)");
        v.need(r.landed == r.expected, tag + " lands on " + r.landed + ", expected " + r.expected);
    }
    // the same examples through the CLI, symbolic parameters included
    int code = 0;
    json j = cli({"verify", "--sphere", "Gt1", "--lambda", "q^2", "--N", "2", "--mode", "symbolic"}, &code);
    v.need(code == 0 && j["runs"][0]["landed"] == "red2", "Gt1 lambda=q^2 symbolic lands on red2");
    j = cli({"verify", "--sphere", "G1", "--alpha", "1", "--tau", "0", "--N", "2", "--mode", "sampled"}, &code);
    v.need(code == 0, "G1 alpha=1 tau=0 sampled through the CLI");
}

struct Criterion {
    int id;
    std::string title;
    std::function<void(Verdict&)> run;
};

} // namespace

int main(int argc, char** argv)
{
    std::vector<Criterion> all = {
        {1, "R-matrix identities", rmatrix_suite},
        {2, "representation counts", rep_suite},
        {3, "quotient algebra and convention", algebra_suite},
        {4, "FREE classification at N=6", free_case},
        {5, "RED1 classification at N=6", red1_case},
        {6, "RED2 classification", red2_case},
        {7, "verification of the three calculi", verification},
        {8, "negative controls", negative_controls},
        {9, "sphere calculi restrictions", sphere_families},
    };
    std::set<int> pick;
    for (int a = 1; a < argc; ++a)
        pick.insert(std::atoi(argv[a]));
    bool ok = true;
    for (auto& c : all) {
        if (!pick.empty() && !pick.count(c.id))
            continue;
        Verdict v;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(v);
        } catch (const std::exception& e) {
            v.need(false, std::string("exception: ") + e.what());
        }
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "criterion " << c.id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << c.title << " (" << std::fixed
                  << std::setprecision(1) << s << " s)";
        for (auto& n : v.notes)
            std::cout << "\n    failed: " << n;
        std::cout << std::endl;
        ok = ok && v.pass;
    }
    return ok ? 0 : 1;
}

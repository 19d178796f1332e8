#pragma once

#include "cpq/sphere.hpp"

#include <array>
#include <functional>
#include <optional>

namespace cpq {

enum class CaseTag { Free, Red1, Red2 };
std::string case_name(CaseTag c);
CaseTag parse_case(const std::string& s); // free | red1 | red2

constexpr int kTerms = 27;
extern const std::array<const char*, kTerms> kAnsatzNames;
int ansatz_index(const std::string& name);

// Unknowns of the reduced ansatz for each case, in column order. Names listed last are
// the ones left free in underdetermined reports.
std::vector<std::string> case_unknowns(CaseTag c);

// One-form Σ m dx_uv: key = (dx index (u-1)N+(v-1)) << 56 | sphere monomial of m.
template <class S>
using Form = Poly<S>;
inline uint64_t fkey(int dx, Mono m) { return (uint64_t(dx) << 56) | m; }
inline int fdx(uint64_t k) { return int(k >> 56); }

template <class S>
Form<S> form_add(const Form<S>& a, const Form<S>& b, const S& fb = S(1));
template <class S>
Form<S> form_scaled(const Form<S>& a, const S& f);

// dx_ij = A ΣL_s x_is dx_sj + B Y_ij + C x_ij H + D δ_ij q^(delta j) H
template <class S>
struct RelationCoeffs {
    S A, B, C, D;
};

template <class S>
class CalculusEngine {
public:
    CalculusEngine(const RFamily<S>& f, const Convention& conv);

    const RFamily<S>& fam;
    Convention conv;
    int N;
    SphereAlgebra<S> sphere;

    S L(int j) const { return fam.F.qpow(conv.sigmaL * j); }
    S Dw(int j) const { return fam.F.qpow(conv.delta * j); }
    int dxi(int u, int v) const { return (u - 1) * N + (v - 1); }

    const Poly<S>& x(int i, int j);
    Poly<S> xx(int i, int j, int k, int l);
    Form<S> lmul(const Poly<S>& p, const Form<S>& w);
    Form<S> dx(int u, int v);
    Form<S> x_dx(int i, int j, int u, int v);
    Form<S> E(int i, int k);  // ΣL_s x_is dx_sk
    Form<S> Y(int i, int k);  // Y^{stuv}_{ik} x_st dx_uv
    const Form<S>& H();       // Σ L(b) x_ab dx_ba
    Form<S> xH(int i, int k); // x_ik H

    // dx_ij·x_kl term by term: the 27 forms, cached.
    const std::vector<Form<S>>& term_forms(int i, int j, int k, int l);
    Form<S> expand(const std::vector<S>& values, int i, int j, int k, int l);

    // index tables
    struct E8 {
        std::array<uint8_t, 4> out;
        S v;
    };
    const std::vector<E8>& rcp(int which, int i, int j, int k, int l) const; // 0 RCP 1 RCPm 2 RCPc 3 RCPcm
    const std::vector<E8>& ytab(int i, int j) const;                          // out = (s,t,u,v)
    const std::vector<E8>& qtab(int i, int j, int k, int l) const;            // out = (s,v,-,-)

    std::string term_recipe_size() const;

private:
    std::vector<std::vector<E8>> rcp_[4], a4_, a8_, q_, y_;
    std::vector<Poly<S>> x_;
    std::optional<Form<S>> H_;
    std::unordered_map<uint32_t, std::vector<Form<S>>> terms_;
    std::unordered_map<uint64_t, Poly<S>> words_;
    uint32_t t4(int i, int j, int k, int l) const { return uint32_t((((i - 1) * N + (j - 1)) * N + (k - 1)) * N + (l - 1)); }
    const Poly<S>& word(const std::vector<std::pair<int, int>>& w);
    void build_tables();
};

// Left submodule of the free module on the dx_uv generated by a list of one-forms;
// canonical() returns the unique remainder modulo its slice at the needed degree.
template <class S>
class RelationModule {
public:
    RelationModule(CalculusEngine<S>& eng, std::vector<Form<S>> gens, bool trace_only = false, int slack = 1);
    Form<S> canonical(const Form<S>& w);
    // Same slice degree for every form of the batch, so the map is linear across it.
    std::vector<Form<S>> canonical_batch(const std::vector<Form<S>>& ws);
    bool contains(const Form<S>& w) { return canonical(w).empty(); }
    const std::vector<Form<S>>& generators() const { return gens_; }

private:
    CalculusEngine<S>& eng_;
    std::vector<Form<S>> gens_;
    std::vector<int> gdeg_;
    std::vector<uint64_t> gw_;
    bool trace_only_;
    int slack_;
    struct Block {
        std::unordered_map<uint64_t, uint32_t> col;
        std::vector<uint64_t> key;
        Echelon<S> ech;
    };
    std::map<std::pair<uint64_t, int>, Block> blocks_;
    std::map<uint64_t, std::vector<Mono>> monos_; // reduced monomials by weight, up to maxdeg_
    int maxdeg_ = -1;
    void enumerate(int deg);
    Block& block(uint64_t weight, int deg);
    Form<S> reduce_in(Block& b, const std::vector<std::pair<uint64_t, S>>& terms);
};

uint64_t weight_key(int N, Mono m, int dx);

template <class S>
RelationCoeffs<S> published_relation(CaseTag c, int N, const Field<S>& F);
template <class S>
std::vector<S> published_values(CaseTag c, int N, const Field<S>& F);

// Relation generators (the dx relation family, Σ dx_ii, and H for the H = 0 case).
template <class S>
std::vector<Form<S>> relation_generators(CalculusEngine<S>& eng, CaseTag c, const RelationCoeffs<S>& r, bool withH = true);

struct RelationReport {
    std::vector<std::string> coeffs; // A, B, C, D as text
    bool unique = false;
    bool decomposes = false;
};

// Substitutes the relation family into itself and into Σ dx_ii; the coefficient
// comparison is linear in A..D.
template <class S>
RelationCoeffs<S> determine_relation(CalculusEngine<S>& eng, CaseTag c, RelationReport* rep = nullptr);

struct SolveOptions {
    bool exhaustive = true; // run every index tuple
    int patience = 0;       // otherwise stop a condition after this many rank-stable tuples
    int slack = 1; // extra degree of the relation slice beyond the form being reduced
};

struct StageReport {
    std::string name;
    std::size_t rows = 0;
    std::size_t tuples = 0;
    int params_before = 0;
    int params_after = 0;
    bool consistent = true;
    double seconds = 0;
};

struct SolveReport {
    std::string case_name;
    int N = 0;
    std::string mode;
    std::string convention;
    std::vector<std::string> relation; // A, B, C, D
    std::map<std::string, std::string> coefficients; // name -> value text, or "free"
    std::vector<std::string> free_parameters;
    std::vector<std::string> gauge; // coefficients set to 0 to pick a representative modulo the term kernel
    int solution_dim = 0;
    bool consistent = true;
    int unresolved_quadratic = 0;
    std::map<std::string, bool> published_match;
    bool published_in_solution_set = false;
    std::map<std::string, std::vector<std::string>> stage_free; // stage -> free names after it
    std::map<std::string, std::map<std::string, std::string>> stage_values;
    std::vector<StageReport> stages;
};

// Combinations of the 27 ansatz terms that vanish in the quotient for every index tuple.
// Such directions never change a condition, so solutions are counted modulo them.
template <class S>
std::vector<std::vector<S>> term_kernel(CalculusEngine<S>& eng, RelationModule<S>& K, const SolveOptions& opt = {},
                                        const std::vector<int>& terms = {});

template <class S>
SolveReport solve_case(CalculusEngine<S>& eng, CaseTag c, const SolveOptions& opt = {});

struct ConditionResult {
    std::string condition;
    std::size_t tuples = 0;
    std::size_t failures = 0;
    std::string first_failure;
};

struct VerifyReport {
    std::string calculus;
    int N = 0;
    std::vector<ConditionResult> conditions;
    bool h_in_relations = true;
    bool pass() const
    {
        for (auto& c : conditions)
            if (c.failures)
                return false;
        return h_in_relations;
    }
};

// Checks kl1..kl7 (and relation right-stability kl8 for the reduced cases) with the
// given coefficients; every index tuple is visited unless sample_stride > 1.
template <class S>
VerifyReport verify_calculus(CalculusEngine<S>& eng, CaseTag c, const std::vector<S>& values, const RelationCoeffs<S>& rel,
                             int quad_stride = 1);

struct FactorizationReport {
    bool h_zero = false;      // Γ̃ with H = 0 gives Γ̃̃
    bool relations = false;   // Γ modulo the Γ̃ relations gives Γ̃
    bool identity = false;    // factorizing by nothing returns Γ
    bool pass() const { return h_zero && relations && identity; }
};

template <class S>
FactorizationReport factorization_check(CalculusEngine<S>& eng);

// FREE kl4/kl5 solution dimension at each candidate link weight; the resolved weight
// reproduces the nine-parameter family.
template <class S>
std::map<int, int> link_weight_scan(const RFamily<S>& f, Convention conv);

} // namespace cpq

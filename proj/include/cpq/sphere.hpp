#pragma once

#include "cpq/algebra.hpp"

#include <unordered_map>

namespace cpq {

// PBW monomial z^α z*^β: exponent of z_i in bits 4(i-1).., of z*_i in bits 28+4(i-1)..
// Bits 56.. are left free for a one-form generator tag. Supports N <= 7.
using Mono = uint64_t;
constexpr int kMaxSphereN = 7;
constexpr Mono kZMask = (Mono(1) << 28) - 1;
constexpr Mono kMonoMask = (Mono(1) << 56) - 1;
inline Mono zbit(int i) { return Mono(1) << (4 * (i - 1)); }
inline Mono sbit(int i) { return Mono(1) << (28 + 4 * (i - 1)); }
inline int zexp(Mono m, int i) { return int((m >> (4 * (i - 1))) & 15); }
inline int sexp(Mono m, int i) { return int((m >> (28 + 4 * (i - 1))) & 15); }
inline Mono xmono(int i, int j) { return zbit(i) | sbit(j); }
int mono_degree(Mono m); // |α|
std::string mono_str(Mono m, int N);

template <class S>
using Poly = std::vector<std::pair<Mono, S>>; // sorted by monomial, no zeros

template <class S>
struct Accum {
    std::unordered_map<uint64_t, S> m;
    void add(uint64_t k, const S& c)
    {
        if (is_zero(c))
            return;
        auto [it, fresh] = m.try_emplace(k, c);
        if (!fresh)
            it->second += c;
    }
    Poly<S> take()
    {
        Poly<S> p;
        p.reserve(m.size());
        for (auto& [k, c] : m)
            if (!is_zero(c))
                p.emplace_back(k, std::move(c));
        std::sort(p.begin(), p.end(), [](auto& a, auto& b) { return a.first < b.first; });
        m.clear();
        return p;
    }
};

// Ordering rules of the sphere algebra:
//   z_j z_i = zz z_i z_j, z*_j z*_i = ss z*_i z*_j   (j > i)
//   z*_m z_n = mu_lt z_n z*_m (m < n), mu_gt z_n z*_m (m > n)
//   z*_m z_m = nu z_m z*_m + kap_gt Σ_{j>m} z_j z*_j + kap_lt Σ_{j<m} z_j z*_j
//   Σ z_i z*_i = 1
template <class S>
struct SphereRules {
    S zz, ss, mu_lt, mu_gt, nu, kap_gt, kap_lt;
};

template <class S>
class SphereAlgebra {
public:
    SphereAlgebra(int N, Field<S> F, SphereRules<S> r);

    int N;
    Field<S> F;
    SphereRules<S> rules;

    // Product in the graded algebra (no unit relation).
    Poly<S> mul_graded(Mono a, Mono b);
    // Product followed by elimination of z_N z*_N through the unit relation.
    Poly<S> mul(Mono a, Mono b);
    Poly<S> mul(const Poly<S>& a, const Poly<S>& b);
    const Poly<S>& mul_cached(Mono a, Mono b); // memoized mul(a, b)
    const Poly<S>& unit_reduce(Mono m);
    Poly<S> unit_reduce(const Poly<S>& p);
    Poly<S> x(int i, int j) { return unit_reduce(Poly<S>{{xmono(i, j), S(1)}}); }

    // Associativity on all triples of generators.
    bool confluent();

private:
    std::vector<S> zzpow_, sspow_;
    std::unordered_map<uint64_t, Poly<S>> nf_;    // (β, γ) -> NF(z*^β z^γ)
    std::unordered_map<Mono, Poly<S>> unit_;      // monomial -> unit-reduced form
    struct PairHash {
        std::size_t operator()(const std::pair<Mono, Mono>& p) const { return std::hash<Mono>()(p.first * 0x9e3779b97f4a7c15ULL ^ p.second); }
    };
    std::unordered_map<std::pair<Mono, Mono>, Poly<S>, PairHash> prod_;
    const Poly<S>& star_times_z(Mono beta, Mono gamma);
    S zfactor(Mono a, Mono b) const; // z^a z^b = zfactor * z^(a+b)
    S sfactor(Mono a, Mono b) const;
};

struct SphereReport {
    bool resolved = false;
    std::string zz, ss, mu_lt, mu_gt, nu, kap_gt, kap_lt;
    bool confluent = false;
    std::vector<std::string> residuals;
};

// Solves the ordering rules from the CP relations, the Hecke eigenspace and centrality of
// Σ z_i z*_i. Throws "sphere relations unresolved" when no unique solution exists.
template <class S>
SphereAlgebra<S> build_sphere(const RFamily<S>& f, const Convention& conv, SphereReport* report = nullptr);

// Embedding x_ij -> z_i z*_j applied to a CP word element.
template <class S>
Poly<S> embed(SphereAlgebra<S>& sp, const AlgElem<S>& e);

} // namespace cpq

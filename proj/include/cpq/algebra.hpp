#pragma once

#include "cpq/linalg.hpp"
#include "cpq/rmatrix.hpp"

#include <map>
#include <string>
#include <vector>

namespace cpq {

// Weight laws of the abbreviated sums, each a slope c meaning weight q^(c*index).
//   sigmaL: ΣL_j = Σ_j q^(sigmaL*j)     (also the weight inside H)
//   sigmaR: ΣR_i = Σ_i q^(sigmaR*i)
//   delta:  weight attached to δ_ij terms, q^(delta*j)
//   link:   weight of a summed index joining two upper R-matrix indices
struct Convention {
    int sigmaL = -2;
    int sigmaR = 0;
    int delta = 2;
    int link = 2;

    std::string fingerprint() const;
    auto operator<=>(const Convention&) const = default;
};

// Generators x_ij are letters (i-1)*N + (j-1).
using Word = std::vector<uint8_t>;
inline uint8_t letter(int N, int i, int j) { return uint8_t((i - 1) * N + (j - 1)); }

template <class S>
using AlgElem = std::map<Word, S>;

template <class S>
void add_to(AlgElem<S>& a, const Word& w, const S& c)
{
    if (is_zero(c))
        return;
    auto [it, fresh] = a.emplace(w, c);
    if (!fresh) {
        it->second += c;
        if (is_zero(it->second))
            a.erase(it);
    }
}

template <class S>
AlgElem<S> mul(const AlgElem<S>& a, const AlgElem<S>& b)
{
    AlgElem<S> r;
    for (auto& [wa, ca] : a)
        for (auto& [wb, cb] : b) {
            Word w(wa);
            w.insert(w.end(), wb.begin(), wb.end());
            add_to(r, w, S(ca * cb));
        }
    return r;
}

template <class S>
AlgElem<S> x_gen(int N, int i, int j)
{
    return AlgElem<S>{{Word{letter(N, i, j)}, S(1)}};
}

// Quadratic relations RCPm·xx - q^{-1} xx and RCPc·xx - q xx for every (i,j,k,l),
// followed (optionally) by the trace relation ΣR x_ii - 1.
template <class S>
std::vector<AlgElem<S>> build_cp_relations(const RFamily<S>& f, const Convention& conv, bool with_trace = true);

template <class S>
struct QuotientBasis {
    int N = 0;
    int k = 0;
    Echelon<S> ideal;        // rows over word columns
    std::vector<Word> basis; // non-pivot words, in column order

    uint32_t col(const Word& w) const;
    Word word(uint32_t c) const;
    std::size_t dim() const { return basis.size(); }
    AlgElem<S> normal_form(const AlgElem<S>& e) const;
    bool in_ideal(const AlgElem<S>& e) const { return normal_form(e).empty(); }
};

// Word-ideal slice of degree <= k: u·r·v for every relation r and words u, v.
template <class S>
QuotientBasis<S> quotient_basis(int N, const std::vector<AlgElem<S>>& relations, int k,
                                std::size_t max_columns = 200000);

// Y^{stuv}_{ij} = ΣR_a Rlm^{tu}_{bc} Rm^{sb}_{ia} Rc^{cv}_{aj}, stored at (s,t,u,v,i,j).
template <class S>
Tensor<S> y_tensor(const RFamily<S>& f, const Convention& conv);

struct ConventionReport {
    Convention resolved;
    bool unique = false;
    // per candidate: name -> (check -> pass)
    std::vector<std::pair<Convention, std::map<std::string, bool>>> matrix;
    std::string implied_scalar; // λ in ΣL_j x_ij x_jk = λ x_ik
};

// Decides sigmaL, sigmaR and delta from the candidate slopes {-2,0,2}; link is fixed
// separately by the calculus module.
template <class S>
ConventionReport resolve_convention(const RFamily<S>& f);

} // namespace cpq

#pragma once

#include "cpq/calculus.hpp"

namespace cpq {

// The seven families of covariant first order *-calculi on the quantum sphere whose
// restriction to the projective space is checked. Gt3 with λ = 0 or λ = ∞ uses its
// own limiting bimodule rules.
enum class SphereFamily { G1, G2, G3, G4, Gt1, Gt2, Gt3 };
std::string family_name(SphereFamily f); // G1 | G2 | G3 | G4 | Gt1 | Gt2 | Gt3
SphereFamily parse_family(const std::string& s);
CaseTag expected_restriction(SphereFamily f);

template <class S>
struct SphereParams {
    S alpha{1}, tau{1}, omega{1}, psi{1}, rho{1}, lambda{1};
    bool lambda_inf = false;
};

// One-form Σ m dg over the sphere: key = (g + 1) << 56 | monomial, g < N for dz_{g+1},
// g >= N for dz*_{g-N+1}.
template <class S>
using SForm = Poly<S>;

// Weights of the invariant forms H+ = Σ q^(plus i) z_i dz*_i, H- = Σ q^(minus i) z*_i dz_i.
struct HWeights {
    int plus = 0, minus = -2;
    std::string fingerprint() const;
};

template <class S>
class SphereCalculus {
public:
    SphereCalculus(CalculusEngine<S>& eng, SphereFamily fam, const SphereParams<S>& p, HWeights w = {});

    CalculusEngine<S>& eng;
    SphereFamily family;
    SphereParams<S> par;
    HWeights hw;

    SForm<S> dgen(int g);                            // d of generator g (monomial key, no coefficient)
    SForm<S> lmul(const Poly<S>& p, const SForm<S>& w);
    SForm<S> rmul_gen(const SForm<S>& w, int g);      // w · generator g
    SForm<S> rmul(const SForm<S>& w, const Poly<S>& p);
    SForm<S> d(const Poly<S>& p);                    // Leibniz along ordered monomials
    SForm<S> Hplus();
    SForm<S> Hminus();
    SForm<S> phi(const Form<S>& w);                  // CP one-form via x_ij = z_i z*_j

    // left submodule generated by the family's relation (empty for the free families)
    bool in_relations(const SForm<S>& w);
    const std::vector<SForm<S>>& relations() const { return rel_; }

private:
    int N;
    std::map<std::pair<int, int>, SForm<S>> rule_;
    std::vector<SForm<S>> rel_;
    struct Slice {
        std::unordered_map<uint64_t, uint32_t> col;
        std::vector<uint64_t> key;
        Echelon<S> ech;
    };
    std::map<std::pair<uint64_t, int>, Slice> slices_;
    const SForm<S>& rule(int a, int b); // dg_a · g_b
    SForm<S> build_rule(int a, int b);
    Slice& slice(uint64_t weight, int deg);
};

struct TargetFit {
    std::size_t bimodule_tuples = 0;
    std::size_t bimodule_failures = 0;
    bool relations_hold = false; // the target's relation set vanishes on the sphere
    bool fits() const { return bimodule_failures == 0 && relations_hold; }
};

struct RestrictionReport {
    std::string family;
    std::string params;
    std::string hweights;
    std::string expected; // red1 | red2
    std::string landed;   // red1 | red2 | none
    bool well_defined = false; // d respects the sphere relations
    TargetFit red1, red2;
    bool h_vanishes = false; // H in the family relations
    bool h_identity = true;  // H = si+ τ (αH+ + H-) for G1, vacuous otherwise
    bool pass() const { return well_defined && h_identity && landed == expected; }
};

template <class S>
RestrictionReport restrict_sphere_calculus(CalculusEngine<S>& eng, SphereFamily fam, const SphereParams<S>& p,
                                           HWeights w = {});

// Every candidate weight pair for H± with the well-definedness verdict on `fam`.
template <class S>
std::vector<std::pair<HWeights, bool>> scan_hweights(CalculusEngine<S>& eng, SphereFamily fam, const SphereParams<S>& p);

} // namespace cpq

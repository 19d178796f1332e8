#include "cpq/sphere.hpp"

#include <sstream>
#include <stdexcept>

namespace cpq {

int mono_degree(Mono m)
{
    int d = 0;
    for (int i = 1; i <= kMaxSphereN; ++i)
        d += zexp(m, i);
    return d;
}

std::string mono_str(Mono m, int N)
{
    std::ostringstream os;
    bool any = false;
    auto put = [&](const char* name, int i, int e) {
        if (e == 0)
            return;
        if (any)
            os << " ";
        os << name << i;
        if (e > 1)
            os << "^" << e;
        any = true;
    };
    for (int i = 1; i <= N; ++i)
        put("z", i, zexp(m, i));
    for (int i = 1; i <= N; ++i)
        put("z*", i, sexp(m, i));
    return any ? os.str() : "1";
}

namespace {

// number of transpositions needed to merge the ordered products x^a x^b
int inversions(Mono a, Mono b, int shift)
{
    int n = 0, below = 0;
    for (int i = 1; i <= kMaxSphereN; ++i) {
        int ai = int((a >> (shift + 4 * (i - 1))) & 15);
        int bi = int((b >> (shift + 4 * (i - 1))) & 15);
        n += ai * below;
        below += bi;
    }
    return n;
}

template <class S>
S power(const S& x, int n)
{
    S r(1);
    for (int k = 0; k < n; ++k)
        r *= x;
    return r;
}

} // namespace

template <class S>
SphereAlgebra<S>::SphereAlgebra(int N_, Field<S> F_, SphereRules<S> r) : N(N_), F(std::move(F_)), rules(std::move(r))
{
    if (N < 2 || N > kMaxSphereN)
        throw std::invalid_argument("sphere backend supports 2 <= N <= 7");
    for (int k = 0; k < 128; ++k) {
        zzpow_.push_back(power(rules.zz, k));
        sspow_.push_back(power(rules.ss, k));
    }
}

template <class S>
S SphereAlgebra<S>::zfactor(Mono a, Mono b) const
{
    return zzpow_.at(inversions(a, b, 0));
}

template <class S>
S SphereAlgebra<S>::sfactor(Mono a, Mono b) const
{
    return sspow_.at(inversions(a, b, 28));
}

template <class S>
const Poly<S>& SphereAlgebra<S>::star_times_z(Mono beta, Mono gamma)
{
    uint64_t key = beta | gamma;
    if (auto it = nf_.find(key); it != nf_.end())
        return it->second;
    Accum<S> acc;
    if (beta == 0 || gamma == 0) {
        acc.add(key, S(1));
    } else {
        int n = 1;
        while (zexp(gamma, n) == 0)
            ++n;
        Mono rest = gamma - zbit(n);
        if (rest == 0) {
            int m = N;
            while (sexp(beta, m) == 0)
                --m;
            Mono bprime = beta - sbit(m);
            auto apply = [&](int a, int b, const S& c) {
                if (is_zero(c))
                    return;
                const Poly<S>& t = star_times_z(bprime, zbit(a));
                for (auto& [u, cu] : t) {
                    Mono us = u & ~kZMask;
                    acc.add((u & kZMask) | (us + sbit(b)), S(c * cu * sfactor(us, sbit(b))));
                }
            };
            if (m != n) {
                apply(n, m, m < n ? rules.mu_lt : rules.mu_gt);
            } else {
                apply(m, m, rules.nu);
                for (int j = 1; j <= N; ++j)
                    if (j != m)
                        apply(j, j, j > m ? rules.kap_gt : rules.kap_lt);
            }
        } else {
            Poly<S> first = star_times_z(beta, zbit(n));
            for (auto& [t, ct] : first) {
                Mono tz = t & kZMask;
                const Poly<S>& u = star_times_z(t & ~kZMask, rest);
                for (auto& [v, cv] : u) {
                    Mono vz = v & kZMask;
                    acc.add((tz + vz) | (v & ~kZMask), S(ct * cv * zfactor(tz, vz)));
                }
            }
        }
    }
    auto [it, fresh] = nf_.emplace(key, acc.take());
    return it->second;
}

template <class S>
Poly<S> SphereAlgebra<S>::mul_graded(Mono a, Mono b)
{
    Mono alpha = a & kZMask, delta = b & ~kZMask;
    const Poly<S>& mid = star_times_z(a & ~kZMask, b & kZMask);
    Poly<S> out;
    out.reserve(mid.size());
    for (auto& [t, c] : mid) {
        Mono tz = t & kZMask, ts = t & ~kZMask;
        out.emplace_back((alpha + tz) | (ts + delta), S(c * zfactor(alpha, tz) * sfactor(ts, delta)));
    }
    std::sort(out.begin(), out.end(), [](auto& x, auto& y) { return x.first < y.first; });
    return out;
}

template <class S>
const Poly<S>& SphereAlgebra<S>::unit_reduce(Mono m)
{
    if (auto it = unit_.find(m); it != unit_.end())
        return it->second;
    Accum<S> acc;
    if (zexp(m, N) == 0 || sexp(m, N) == 0) {
        acc.add(m, S(1));
    } else {
        // z^α' z_N z*^β' z*_N = ss^(-|β'|) z^α' (1 - Σ_{i<N} z_i z*_i) z*^β'
        Mono a = (m & kZMask) - zbit(N);
        Mono b = (m & ~kZMask) - sbit(N);
        S pre = S(1) / sspow_.at(mono_degree(b >> 28) - sexp(b, N));
        for (auto& [u, c] : unit_reduce(a | b))
            acc.add(u, S(pre * c));
        for (int i = 1; i < N; ++i) {
            S f = -pre * zfactor(a, zbit(i)) * sfactor(sbit(i), b);
            for (auto& [u, c] : unit_reduce((a + zbit(i)) | (b + sbit(i))))
                acc.add(u, S(f * c));
        }
    }
    auto [it, fresh] = unit_.emplace(m, acc.take());
    return it->second;
}

template <class S>
Poly<S> SphereAlgebra<S>::unit_reduce(const Poly<S>& p)
{
    Accum<S> acc;
    for (auto& [m, c] : p)
        for (auto& [u, cu] : unit_reduce(m))
            acc.add(u, S(c * cu));
    return acc.take();
}

template <class S>
Poly<S> SphereAlgebra<S>::mul(Mono a, Mono b)
{
    return unit_reduce(mul_graded(a, b));
}

template <class S>
const Poly<S>& SphereAlgebra<S>::mul_cached(Mono a, Mono b)
{
    auto key = std::make_pair(a, b);
    if (auto it = prod_.find(key); it != prod_.end())
        return it->second;
    return prod_.emplace(key, mul(a, b)).first->second;
}

template <class S>
Poly<S> SphereAlgebra<S>::mul(const Poly<S>& a, const Poly<S>& b)
{
    Accum<S> acc;
    for (auto& [ma, ca] : a)
        for (auto& [mb, cb] : b)
            for (auto& [u, cu] : mul_cached(ma, mb))
                acc.add(u, S(ca * cb * cu));
    return acc.take();
}

template <class S>
bool SphereAlgebra<S>::confluent()
{
    std::vector<Mono> gens;
    for (int i = 1; i <= N; ++i) {
        gens.push_back(zbit(i));
        gens.push_back(sbit(i));
    }
    auto mulg = [&](const Poly<S>& a, const Poly<S>& b) {
        Accum<S> acc;
        for (auto& [ma, ca] : a)
            for (auto& [mb, cb] : b)
                for (auto& [t, ct] : mul_graded(ma, mb))
                    acc.add(t, S(ca * cb * ct));
        return acc.take();
    };
    for (Mono g1 : gens)
        for (Mono g2 : gens)
            for (Mono g3 : gens) {
                Poly<S> p1{{g1, S(1)}}, p2{{g2, S(1)}}, p3{{g3, S(1)}};
                if (mulg(mulg(p1, p2), p3) != mulg(p1, mulg(p2, p3)))
                    return false;
            }
    return true;
}

template <class S>
Poly<S> embed(SphereAlgebra<S>& sp, const AlgElem<S>& e)
{
    Accum<S> acc;
    for (auto& [w, c] : e) {
        Poly<S> p{{0, S(1)}};
        for (uint8_t g : w)
            p = sp.mul(p, Poly<S>{{xmono(g / sp.N + 1, g % sp.N + 1), S(1)}});
        for (auto& [m, cm] : p)
            acc.add(m, S(c * cm));
    }
    return acc.take();
}

namespace {

template <class S>
struct RuleSolver {
    int N;
    S zz, ss;
    std::map<uint64_t, std::map<uint32_t, S>> rows;

    S zf(Mono a, Mono b) const { return power(zz, inversions(a, b, 0)); }
    S sf(Mono a, Mono b) const { return power(ss, inversions(a, b, 28)); }

    // c * z^pre (z*_m z_n) z*^post with the mixed rule left symbolic (columns 0..4)
    void mixed(const S& c, Mono pre, int m, int n, Mono post)
    {
        auto put = [&](uint32_t col, int a, int b) {
            Mono mono = (pre + zbit(a)) | (sbit(b) + post);
            rows[mono][col] += c * zf(pre, zbit(a)) * sf(sbit(b), post);
        };
        if (m != n) {
            put(m < n ? 0 : 1, n, m);
        } else {
            put(2, m, m);
            for (int j = 1; j <= N; ++j)
                if (j != m)
                    put(j > m ? 3 : 4, j, j);
        }
    }
    void constant(const S& c, Mono z1, Mono z2, Mono s1, Mono s2)
    {
        rows[(z1 + z2) | (s1 + s2)][5] += c * zf(z1, z2) * sf(s1, s2);
    }
    AffineSolution<S> solve() const
    {
        Echelon<S> E;
        for (auto& [m, r] : rows)
            E.insert(SparseVec<S>::from_map(r));
        return solve_affine(E, 5);
    }
};

} // namespace

template <class S>
SphereAlgebra<S> build_sphere(const RFamily<S>& f, const Convention& conv, SphereReport* report)
{
    const int N = f.N;
    SphereReport rep;
    // zz from the q-eigenspace of R: R^{st}_{kl} z_s z_t = q z_k z_l
    std::map<Mono, std::map<uint32_t, S>> zrows;
    for (int k = 1; k <= N; ++k)
        for (int l = 1; l <= N; ++l) {
            for (int s = 1; s <= N; ++s)
                for (int t = 1; t <= N; ++t) {
                    S r = f.R.get({s, t, k, l});
                    if (is_zero(r))
                        continue;
                    zrows[zbit(s) + zbit(t)][s > t ? 0u : 1u] += r;
                }
            zrows[zbit(k) + zbit(l)][k > l ? 0u : 1u] -= f.F.q;
        }
    Echelon<S> ze;
    for (auto& [m, r] : zrows)
        ze.insert(SparseVec<S>::from_map(r));
    auto zsol = solve_affine(ze, 1);
    if (!zsol.consistent || zsol.dim() != 0)
        throw std::runtime_error("sphere relations unresolved: zz-sector");
    S zz = zsol.x0[0];

    auto rels = build_cp_relations(f, conv, false);
    std::vector<std::pair<S, AffineSolution<S>>> ok;
    std::vector<std::string> notes;
    for (S ss : {f.F.q, f.F.qpow(-1)}) {
        RuleSolver<S> rs{N, zz, ss, {}};
        for (auto& r : rels)
            for (auto& [w, c] : r) {
                int s = w[0] / N + 1, t = w[0] % N + 1, u = w[1] / N + 1, v = w[1] % N + 1;
                rs.mixed(c, zbit(s), t, u, sbit(v));
            }
        for (int k = 1; k <= N; ++k)
            for (int i = 1; i <= N; ++i) {
                // C z_k - z_k C and C z*_k - z*_k C
                rs.mixed(S(1), zbit(i), i, k, 0);
                rs.constant(S(-1), zbit(k), zbit(i), 0, sbit(i));
                rs.constant(S(1), zbit(i), 0, sbit(i), sbit(k));
                rs.mixed(S(-1), 0, k, i, sbit(i));
            }
        auto sol = rs.solve();
        if (sol.consistent && sol.dim() == 0)
            ok.push_back({ss, sol});
        else
            notes.push_back("ss=" + to_string(ss) + (sol.consistent ? ": underdetermined" : ": inconsistent"));
    }
    if (ok.size() != 1) {
        std::string msg = "sphere relations unresolved";
        for (auto& r : notes)
            msg += "; " + r;
        rep.residuals = notes;
        if (report)
            *report = rep;
        throw std::runtime_error(msg);
    }
    auto& x = ok[0].second.x0;
    SphereRules<S> rules{zz, ok[0].first, x[0], x[1], x[2], x[3], x[4]};
    SphereAlgebra<S> sp(N, f.F, rules);
    rep.resolved = true;
    rep.zz = to_string(rules.zz);
    rep.ss = to_string(rules.ss);
    rep.mu_lt = to_string(rules.mu_lt);
    rep.mu_gt = to_string(rules.mu_gt);
    rep.nu = to_string(rules.nu);
    rep.kap_gt = to_string(rules.kap_gt);
    rep.kap_lt = to_string(rules.kap_lt);
    rep.confluent = sp.confluent();
    if (!rep.confluent)
        rep.residuals.push_back("overlap ambiguity");
    for (auto& r : build_cp_relations(f, conv, true))
        if (!embed(sp, r).empty())
            rep.residuals.push_back("relation not mapped to zero");
    if (report)
        *report = rep;
    if (!rep.residuals.empty())
        throw std::runtime_error("sphere relations unresolved: " + rep.residuals.front());
    return sp;
}

#define CPQ_INST(S)                                                                                        \
    template class SphereAlgebra<S>;                                                                       \
    template SphereAlgebra<S> build_sphere(const RFamily<S>&, const Convention&, SphereReport*);           \
    template Poly<S> embed(SphereAlgebra<S>&, const AlgElem<S>&);

CPQ_INST(Rat)
CPQ_INST(QScalar)

} // namespace cpq

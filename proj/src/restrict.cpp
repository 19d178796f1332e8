#include "cpq/restrict.hpp"

#include <sstream>

namespace cpq {

std::string family_name(SphereFamily f)
{
    switch (f) {
    case SphereFamily::G1: return "G1";
    case SphereFamily::G2: return "G2";
    case SphereFamily::G3: return "G3";
    case SphereFamily::G4: return "G4";
    case SphereFamily::Gt1: return "Gt1";
    case SphereFamily::Gt2: return "Gt2";
    case SphereFamily::Gt3: return "Gt3";
    }
    return "?";
}

SphereFamily parse_family(const std::string& s)
{
    for (auto f : {SphereFamily::G1, SphereFamily::G2, SphereFamily::G3, SphereFamily::G4, SphereFamily::Gt1,
                   SphereFamily::Gt2, SphereFamily::Gt3})
        if (family_name(f) == s)
            return f;
    throw std::invalid_argument("unknown sphere family " + s + " (G1 G2 G3 G4 Gt1 Gt2 Gt3)");
}

// G1, G4 and Gt3 keep H; the other four kill it
CaseTag expected_restriction(SphereFamily f)
{
    switch (f) {
    case SphereFamily::G1:
    case SphereFamily::G4:
    case SphereFamily::Gt3: return CaseTag::Red1;
    default: return CaseTag::Red2;
    }
}

std::string HWeights::fingerprint() const { return "H+" + std::to_string(plus) + ".H-" + std::to_string(minus); }

namespace {

inline uint64_t skey(int g, Mono m) { return (uint64_t(g + 1) << 56) | m; }
inline int sgen(uint64_t k) { return int(k >> 56) - 1; }

int tdeg(Mono m, int N)
{
    int d = 0;
    for (int i = 1; i <= N; ++i)
        d += zexp(m, i) + sexp(m, i);
    return d;
}

// torus weight of a term, 8 bits per index with offset 64
uint64_t tweight(uint64_t key, int N)
{
    Mono m = key & kMonoMask;
    int g = sgen(key);
    uint64_t w = 0;
    for (int i = 1; i <= N; ++i) {
        int v = zexp(m, i) - sexp(m, i);
        if (g == i - 1)
            ++v;
        if (g == N + i - 1)
            --v;
        w |= uint64_t(v + 64) << (8 * (i - 1));
    }
    return w;
}

// Coefficients of one rule sector. P and M multiply the product of the two generators
// times H+ or H-; dP and dM are the δ_kl parts (dz z* carries a further q^{2k}).
template <class S>
struct Sector {
    S R, L, P, M, dP, dM;
};

} // namespace

template <class S>
SphereCalculus<S>::SphereCalculus(CalculusEngine<S>& e, SphereFamily f, const SphereParams<S>& p, HWeights w)
    : eng(e), family(f), par(p), hw(w), N(e.N)
{
    if (f == SphereFamily::Gt1 || f == SphereFamily::Gt2 || f == SphereFamily::Gt3) {
        if (par.lambda_inf)
            rel_.push_back(Hminus());
        else
            rel_.push_back(form_add(Hplus(), Hminus(), par.lambda));
    }
}

template <class S>
SForm<S> SphereCalculus<S>::dgen(int g)
{
    return SForm<S>{{skey(g, 0), S(1)}};
}

template <class S>
SForm<S> SphereCalculus<S>::Hplus()
{
    Accum<S> acc;
    for (int i = 1; i <= N; ++i)
        acc.add(skey(N + i - 1, zbit(i)), eng.fam.F.qpow(hw.plus * i));
    return acc.take();
}

template <class S>
SForm<S> SphereCalculus<S>::Hminus()
{
    Accum<S> acc;
    for (int i = 1; i <= N; ++i)
        acc.add(skey(i - 1, sbit(i)), eng.fam.F.qpow(hw.minus * i));
    return acc.take();
}

template <class S>
SForm<S> SphereCalculus<S>::lmul(const Poly<S>& p, const SForm<S>& w)
{
    Accum<S> acc;
    for (auto& [pm, pc] : p)
        for (auto& [k, c] : w) {
            uint64_t tag = k & ~kMonoMask;
            for (auto& [m2, c2] : eng.sphere.mul_cached(pm, k & kMonoMask))
                acc.add(tag | m2, S(pc * c * c2));
        }
    return acc.take();
}

template <class S>
const SForm<S>& SphereCalculus<S>::rule(int a, int b)
{
    auto key = std::make_pair(a, b);
    if (auto it = rule_.find(key); it != rule_.end())
        return it->second;
    return rule_.emplace(key, build_rule(a, b)).first->second;
}

template <class S>
SForm<S> SphereCalculus<S>::build_rule(int a, int b)
{
    const auto& F = eng.fam.F;
    const S q = F.qpow(1), one(1);
    auto qc = q_constants(N, F);
    const S s = qc.s, si = qc.si;
    const S al = par.alpha, ial = one / par.alpha;
    const S tau = par.tau, om = par.omega, psi = par.psi, rho = par.rho;
    const S q2N = F.qpow(2 * N);
    // sector: 0 dz z, 1 dz* z*, 2 dz z*, 3 dz* z
    const bool az = a < N, bz = b < N;
    const int sector = az && bz ? 0 : !az && !bz ? 1 : az ? 2 : 3;
    Sector<S> c{};
    switch (family) {
    case SphereFamily::G1: {
        const Sector<S> t[4] = {
            {q * al, F.qpow(2) * al - one, F.qpow(2) * al * al * (one - si * tau), F.qpow(2) * (one - al * si * tau), S(), S()},
            {F.qpow(-1) * ial, F.qpow(-2) * ial - one, one - si * tau, ial * ial * (one - al * si * tau), S(), S()},
            {F.qpow(-1) * ial, F.qpow(2) * al - one, -F.qpow(2) * al * (one - s * tau), -ial * (one - F.qpow(2) * al * s * tau),
             -al * tau, -tau},
            {q * al, F.qpow(-2) * ial - one, -F.qpow(2) * al * (one - s * tau), -ial * (one - F.qpow(2) * al * s * tau),
             -q2N * al * tau, -q2N * tau},
        };
        c = t[sector];
        break;
    }
    case SphereFamily::G2: {
        const S iom = one / om;
        const Sector<S> t[4] = {
            {q * al, F.qpow(2) * al - one, om, ial * om - F.qpow(2) * (al - one), S(), S()},
            {F.qpow(-1) * ial, F.qpow(-2) * ial - one, F.qpow(2) * al * iom - (ial - one), F.qpow(2) * iom, S(), S()},
            {F.qpow(-1) * ial, F.qpow(2) * al - one, -F.qpow(2) * al, -ial, S(), S()},
            {q * al, F.qpow(-2) * ial - one, -F.qpow(2) * al, -ial, S(), S()},
        };
        c = t[sector];
        break;
    }
    case SphereFamily::G3: {
        const Sector<S> t[4] = {
            {F.qpow(-1), S(), om, F.qpow(2) * om * psi - one, S(), S()},
            {q, S(), psi - F.qpow(2), F.qpow(2) / om, S(), S()},
            {q, S(), -one, -F.qpow(2), S(), S()},
            {F.qpow(-1), S(), -one, -F.qpow(2), S(), S()},
        };
        c = t[sector];
        break;
    }
    case SphereFamily::G4: {
        const S rt = rho / tau, tr = tau / rho;
        const Sector<S> t[4] = {
            {F.qpow(-1), S(), -F.qpow(-2) * rt * (si * rho - one), -rt * (si * tau - F.qpow(2)), S(), S()},
            {q, S(), -tr * (si * rho - one), -F.qpow(2) * tr * (si * tau - F.qpow(2)), S(), S()},
            {q, S(), s * rho - one, F.qpow(2) * (s * tau - one), -F.qpow(-2) * rho, -tau},
            {F.qpow(-1), S(), s * rho - one, F.qpow(2) * (s * tau - one), -F.qpow(2 * N - 2) * rho, -q2N * tau},
        };
        c = t[sector];
        break;
    }
    case SphereFamily::Gt1: {
        const S lam = par.lambda, il = one / par.lambda;
        const Sector<S> t[4] = {
            {q * il, F.qpow(2) * il - one, F.qpow(2) * il * (il - one), S(), S(), S()},
            {F.qpow(-1) * lam, F.qpow(-2) * lam - one, -(lam - one), S(), S(), S()},
            {F.qpow(-1) * lam, F.qpow(2) * il - one, -(F.qpow(2) * il - one), S(), S(), S()},
            {q * il, F.qpow(-2) * lam - one, -(F.qpow(2) * il - one), S(), S(), S()},
        };
        c = t[sector];
        break;
    }
    case SphereFamily::Gt2: {
        const S lam = par.lambda, il = one / par.lambda;
        const Sector<S> t[4] = {
            {F.qpow(-1), S(), -il * (F.qpow(4) * il - one), S(), S(), S()},
            {q, S(), -F.qpow(-2) * lam * (F.qpow(4) * il - one), S(), S(), S()},
            {q, S(), F.qpow(2) * il - one, S(), S(), S()},
            {F.qpow(-1), S(), F.qpow(2) * il - one, S(), S(), S()},
        };
        c = t[sector];
        break;
    }
    case SphereFamily::Gt3: {
        const S isi = one / si;
        if (par.lambda_inf) {
            const Sector<S> t[4] = {
                {F.qpow(-1), S(), S(), S(), S(), S()},
                {q, S(), S(), S(), S(), S()},
                {q, S(), isi, S(), -F.qpow(-2) * isi, S()},
                {F.qpow(-1), S(), isi, S(), -F.qpow(2 * N - 2) * isi, S()},
            };
            c = t[sector];
        } else if (is_zero(par.lambda)) {
            const Sector<S> t[4] = {
                {F.qpow(-1), S(), S(), S(), S(), S()},
                {q, S(), S(), S(), S(), S()},
                // every H- coefficient carries an extra q^(2N) against the usual listing;
                // without it neither d(z_k z*_l) nor the relation H+ = 0 is consistent
                {q, S(), S(), F.qpow(2 * N + 2) * isi, S(), -F.qpow(2) * isi},
                {F.qpow(-1), S(), S(), F.qpow(2 * N + 2) * isi, S(), -F.qpow(2 * N + 2) * isi},
            };
            c = t[sector];
        } else {
            const S il = one / par.lambda;
            const S top = -isi * (F.qpow(2 * N + 2) * il - one);
            const Sector<S> t[4] = {
                {F.qpow(-1), S(), S(), S(), S(), S()},
                {q, S(), S(), S(), S(), S()},
                {q, S(), top, S(), F.qpow(-2) * isi * (F.qpow(4) * il - one), S()},
                {F.qpow(-1), S(), top, S(), F.qpow(2 * N - 2) * isi * (F.qpow(4) * il - one), S()},
            };
            c = t[sector];
        }
        break;
    }
    }

    const int k = az ? a + 1 : a - N + 1, l = bz ? b + 1 : b - N + 1;
    const Tensor<S>& T = sector == 0 ? eng.fam.Rm : sector == 1 ? eng.fam.Rc : sector == 2 ? eng.fam.Rlm : eng.fam.Rr;
    Accum<S> acc;
    // R-term Σ T^{st}_{kl} g_s dg_t
    if (!is_zero(c.R))
        for (int s1 = 1; s1 <= N; ++s1)
            for (int t1 = 1; t1 <= N; ++t1) {
                S r = T.get({s1, t1, k, l});
                if (is_zero(r))
                    continue;
                Mono coef = sector == 0 || sector == 3 ? zbit(s1) : sbit(s1);
                int g = sector == 0 || sector == 2 ? t1 - 1 : N + t1 - 1;
                acc.add(skey(g, coef), S(c.R * r));
            }
    // second term: generator k of the left kind, differential of generator l's kind
    if (!is_zero(c.L))
        acc.add(skey(b, az ? zbit(k) : sbit(k)), c.L);
    SForm<S> out = acc.take();
    Poly<S> prod = eng.sphere.mul(az ? zbit(k) : sbit(k), bz ? zbit(l) : sbit(l));
    if (!is_zero(c.P))
        out = form_add(out, lmul(prod, Hplus()), c.P);
    if (!is_zero(c.M))
        out = form_add(out, lmul(prod, Hminus()), c.M);
    if (k == l && sector >= 2) {
        S f = sector == 2 ? F.qpow(2 * k) : S(1);
        if (!is_zero(c.dP))
            out = form_add(out, Hplus(), S(f * c.dP));
        if (!is_zero(c.dM))
            out = form_add(out, Hminus(), S(f * c.dM));
    }
    return out;
}

template <class S>
SForm<S> SphereCalculus<S>::rmul_gen(const SForm<S>& w, int b)
{
    Accum<S> acc;
    for (auto& [k, c] : w)
        for (auto& [k2, c2] : lmul(Poly<S>{{k & kMonoMask, c}}, rule(sgen(k), b)))
            acc.add(k2, c2);
    return acc.take();
}

namespace {

std::vector<int> generators_of(Mono m, int N)
{
    std::vector<int> gs;
    for (int i = 1; i <= N; ++i)
        for (int e = 0; e < zexp(m, i); ++e)
            gs.push_back(i - 1);
    for (int i = 1; i <= N; ++i)
        for (int e = 0; e < sexp(m, i); ++e)
            gs.push_back(N + i - 1);
    return gs;
}

Mono gen_mono(int g, int N) { return g < N ? zbit(g + 1) : sbit(g - N + 1); }

} // namespace

template <class S>
SForm<S> SphereCalculus<S>::rmul(const SForm<S>& w, const Poly<S>& p)
{
    SForm<S> out;
    for (auto& [m, c] : p) {
        SForm<S> t = form_scaled(w, c);
        for (int g : generators_of(m, N))
            t = rmul_gen(t, g);
        out = form_add(out, t);
    }
    return out;
}

template <class S>
SForm<S> SphereCalculus<S>::d(const Poly<S>& p)
{
    SForm<S> out;
    for (auto& [m, c] : p) {
        auto gs = generators_of(m, N);
        Mono prefix = 0;
        for (std::size_t t = 0; t < gs.size(); ++t) {
            SForm<S> w = lmul(Poly<S>{{prefix, c}}, dgen(gs[t]));
            for (std::size_t u = t + 1; u < gs.size(); ++u)
                w = rmul_gen(w, gs[u]);
            out = form_add(out, w);
            prefix += gen_mono(gs[t], N);
        }
    }
    return out;
}

template <class S>
SForm<S> SphereCalculus<S>::phi(const Form<S>& w)
{
    SForm<S> out;
    for (auto& [k, c] : w) {
        int dx = fdx(k), u = dx / N + 1, v = dx % N + 1;
        // d(z_u z*_v) = dz_u·z*_v + z_u dz*_v
        SForm<S> e = form_add(rmul_gen(dgen(u - 1), N + v - 1), SForm<S>{{skey(N + v - 1, zbit(u)), S(1)}});
        out = form_add(out, lmul(Poly<S>{{k & kMonoMask, c}}, e));
    }
    return out;
}

template <class S>
typename SphereCalculus<S>::Slice& SphereCalculus<S>::slice(uint64_t weight, int deg)
{
    auto key = std::make_pair(weight, deg);
    if (auto it = slices_.find(key); it != slices_.end())
        return it->second;
    Slice& sl = slices_[key];
    std::vector<int> w(N);
    for (int i = 1; i <= N; ++i)
        w[i - 1] = int((weight >> (8 * (i - 1))) & 255) - 64;
    // multipliers of the given torus weight; the generator has weight 0 and degree 1
    std::vector<Mono> monos;
    std::function<void(int, Mono, int)> rec = [&](int i, Mono m, int d) {
        if (i > N) {
            monos.push_back(m);
            return;
        }
        for (int b = std::max(0, -w[i - 1]);; ++b) {
            int a = w[i - 1] + b;
            if (d + a + b > deg - 1 || a > 15 || b > 15)
                break;
            if (i == N && a > 0 && b > 0)
                break;
            rec(i + 1, m + Mono(a) * zbit(i) + Mono(b) * sbit(i), d + a + b);
        }
    };
    rec(1, 0, 0);
    for (Mono m : monos)
        for (auto& r : rel_) {
            std::map<uint32_t, S> row;
            for (auto& [k, c] : lmul(Poly<S>{{m, S(1)}}, r)) {
                auto [it, fresh] = sl.col.try_emplace(k, uint32_t(sl.key.size()));
                if (fresh)
                    sl.key.push_back(k);
                row[it->second] += c;
            }
            sl.ech.insert(SparseVec<S>::from_map(row));
        }
    return sl;
}

template <class S>
bool SphereCalculus<S>::in_relations(const SForm<S>& w)
{
    if (rel_.empty())
        return w.empty();
    std::map<uint64_t, std::vector<std::pair<uint64_t, S>>> parts;
    for (auto& [k, c] : w)
        parts[tweight(k, N)].push_back({k, c});
    for (auto& [wt, terms] : parts) {
        int D = 0;
        for (auto& [k, c] : terms)
            D = std::max(D, tdeg(k & kMonoMask, N));
        Slice& sl = slice(wt, D + 2);
        std::map<uint32_t, S> row;
        for (auto& [k, c] : terms) {
            auto it = sl.col.find(k);
            if (it == sl.col.end())
                return false;
            row[it->second] += c;
        }
        if (!sl.ech.reduce(SparseVec<S>::from_map(row)).empty())
            return false;
    }
    return true;
}

template <class S>
RestrictionReport restrict_sphere_calculus(CalculusEngine<S>& eng, SphereFamily fam, const SphereParams<S>& p, HWeights w)
{
    const int N = eng.N;
    SphereCalculus<S> sc(eng, fam, p, w);
    RestrictionReport rep;
    rep.family = family_name(fam);
    rep.hweights = w.fingerprint();
    rep.expected = case_name(expected_restriction(fam));
    {
        std::ostringstream os;
        os << "alpha=" << to_string(p.alpha) << " tau=" << to_string(p.tau) << " omega=" << to_string(p.omega)
           << " psi=" << to_string(p.psi) << " rho=" << to_string(p.rho)
           << " lambda=" << (p.lambda_inf ? std::string("inf") : to_string(p.lambda));
        rep.params = os.str();
    }

    // d(g)·h + g·d(h) = d(gh) for every pair of generators, and the relation is stable
    // under right multiplication
    rep.well_defined = true;
    for (int a = 0; a < 2 * N; ++a)
        for (int b = 0; b < 2 * N; ++b) {
            SForm<S> lhs = form_add(sc.rmul_gen(sc.dgen(a), b), sc.lmul(Poly<S>{{gen_mono(a, N), S(1)}}, sc.dgen(b)));
            SForm<S> rhs = sc.d(eng.sphere.mul(gen_mono(a, N), gen_mono(b, N)));
            if (!sc.in_relations(form_add(lhs, rhs, S(-1))))
                rep.well_defined = false;
        }
    for (auto& r : sc.relations())
        for (int g = 0; g < 2 * N; ++g)
            if (!sc.in_relations(sc.rmul_gen(r, g)))
                rep.well_defined = false;

    auto fit = [&](CaseTag t) {
        TargetFit f;
        auto values = published_values(t, N, eng.fam.F);
        auto rel = published_relation(t, N, eng.fam.F);
        for (int i = 1; i <= N; ++i)
            for (int j = 1; j <= N; ++j) {
                SForm<S> dxij = sc.phi(eng.dx(i, j));
                for (int k = 1; k <= N; ++k)
                    for (int l = 1; l <= N; ++l) {
                        SForm<S> lhs = sc.rmul_gen(sc.rmul_gen(dxij, k - 1), N + l - 1);
                        SForm<S> rhs = sc.phi(eng.expand(values, i, j, k, l));
                        ++f.bimodule_tuples;
                        if (!sc.in_relations(form_add(lhs, rhs, S(-1))))
                            ++f.bimodule_failures;
                    }
            }
        f.relations_hold = true;
        for (auto& g : relation_generators(eng, t, rel, false))
            f.relations_hold = f.relations_hold && sc.in_relations(sc.phi(g));
        return f;
    };
    rep.red1 = fit(CaseTag::Red1);
    rep.red2 = fit(CaseTag::Red2);
    SForm<S> h = sc.phi(eng.H());
    rep.h_vanishes = sc.in_relations(h);
    if (fam == SphereFamily::G1) {
        auto qc = q_constants(N, eng.fam.F);
        SForm<S> ha = form_add(form_scaled(sc.Hplus(), p.alpha), sc.Hminus());
        rep.h_identity = sc.in_relations(form_add(h, ha, S(-qc.si * p.tau)));
    }
    // H separates the two: it survives in red1 and is a relation of red2
    if (rep.h_vanishes && rep.red2.fits())
        rep.landed = "red2";
    else if (!rep.h_vanishes && rep.red1.fits())
        rep.landed = "red1";
    else
        rep.landed = "none";
    return rep;
}

template <class S>
std::vector<std::pair<HWeights, bool>> scan_hweights(CalculusEngine<S>& eng, SphereFamily fam, const SphereParams<S>& p)
{
    std::vector<std::pair<HWeights, bool>> out;
    const int N = eng.N;
    for (int a : {-2, 0, 2})
        for (int b : {-2, 0, 2}) {
            HWeights w{a, b};
            SphereCalculus<S> sc(eng, fam, p, w);
            bool ok = true;
            for (int x = 0; x < 2 * N && ok; ++x)
                for (int y = 0; y < 2 * N && ok; ++y) {
                    SForm<S> lhs = form_add(sc.rmul_gen(sc.dgen(x), y), sc.lmul(Poly<S>{{gen_mono(x, N), S(1)}}, sc.dgen(y)));
                    ok = sc.in_relations(form_add(lhs, sc.d(eng.sphere.mul(gen_mono(x, N), gen_mono(y, N))), S(-1)));
                }
            out.push_back({w, ok});
        }
    return out;
}

#define CPQ_INST(S)                                                                                                      \
    template class SphereCalculus<S>;                                                                                    \
    template RestrictionReport restrict_sphere_calculus(CalculusEngine<S>&, SphereFamily, const SphereParams<S>&, HWeights); \
    template std::vector<std::pair<HWeights, bool>> scan_hweights(CalculusEngine<S>&, SphereFamily, const SphereParams<S>&);

CPQ_INST(Rat)
CPQ_INST(QScalar)

} // namespace cpq

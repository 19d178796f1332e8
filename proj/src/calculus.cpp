#include "cpq/calculus.hpp"

#include <algorithm>
#include <stdexcept>

namespace cpq {

const std::array<const char*, kTerms> kAnsatzNames = {"a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "a9",
                                                      "e1", "e2", "e3", "e4", "f1", "f2", "f3", "f4", "f5",
                                                      "b1", "b2", "b3", "b4", "b5", "b6", "g1", "g2", "c"};

int ansatz_index(const std::string& name)
{
    for (int n = 0; n < kTerms; ++n)
        if (name == kAnsatzNames[n])
            return n;
    throw std::invalid_argument("unknown ansatz coefficient " + name);
}

std::string case_name(CaseTag c)
{
    switch (c) {
    case CaseTag::Free:
        return "free";
    case CaseTag::Red1:
        return "red1";
    case CaseTag::Red2:
        return "red2";
    }
    return "?";
}

CaseTag parse_case(const std::string& s)
{
    if (s == "free")
        return CaseTag::Free;
    if (s == "red1")
        return CaseTag::Red1;
    if (s == "red2")
        return CaseTag::Red2;
    throw std::invalid_argument("unknown case " + s);
}

std::vector<std::string> case_unknowns(CaseTag c)
{
    switch (c) {
    case CaseTag::Free:
        return {"a1", "a2", "a3", "a7", "a8", "e1", "e2", "e3", "e4", "f2", "f3", "f4", "f5", "b2", "b4", "b6",
                "g1", "g2", "a4", "a5", "a6", "a9", "b1", "b3", "b5", "f1", "c"};
    case CaseTag::Red1:
        return {"a5", "a6", "f5", "e1", "e2", "e3", "e4", "b2", "b4", "b5", "g1", "g2",
                "a7", "a8", "a9", "b1", "b3", "b6", "c"};
    case CaseTag::Red2:
        return {"a7", "a8", "e1", "e2", "e3", "e4", "b1", "b2", "b3", "b4", "a5", "a6"};
    }
    return {};
}

template <class S>
Form<S> form_add(const Form<S>& a, const Form<S>& b, const S& fb)
{
    Form<S> out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first))
            out.push_back(a[i++]);
        else if (i == a.size() || b[j].first < a[i].first) {
            S v = fb * b[j].second;
            if (!is_zero(v))
                out.emplace_back(b[j].first, std::move(v));
            ++j;
        } else {
            S v = a[i].second + fb * b[j].second;
            if (!is_zero(v))
                out.emplace_back(a[i].first, std::move(v));
            ++i;
            ++j;
        }
    }
    return out;
}

template <class S>
Form<S> form_scaled(const Form<S>& a, const S& f)
{
    Form<S> out;
    if (is_zero(f))
        return out;
    out.reserve(a.size());
    for (auto& [k, c] : a)
        out.emplace_back(k, S(c * f));
    return out;
}

uint64_t weight_key(int N, Mono m, int dx)
{
    uint64_t key = 0;
    for (int i = 1; i <= N; ++i) {
        int w = zexp(m, i) - sexp(m, i);
        if (dx >= 0) {
            int u = dx / N + 1, v = dx % N + 1;
            w += (i == u) - (i == v);
        }
        key |= uint64_t(w + 64) << (8 * (i - 1));
    }
    return key;
}

namespace {

uint64_t weight_sub(int N, uint64_t a, uint64_t b)
{
    uint64_t key = 0;
    for (int i = 0; i < N; ++i) {
        int wa = int((a >> (8 * i)) & 255) - 64, wb = int((b >> (8 * i)) & 255) - 64;
        key |= uint64_t(wa - wb + 64) << (8 * i);
    }
    return key;
}

template <class S>
std::vector<std::vector<typename CalculusEngine<S>::E8>> index8(const Tensor<S>& T, int N)
{
    std::vector<std::vector<typename CalculusEngine<S>::E8>> out(std::size_t(N) * N * N * N);
    T.for_each([&](const Index& x, const S& v) {
        std::size_t t = std::size_t((((x[4] - 1) * N + (x[5] - 1)) * N + (x[6] - 1)) * N + (x[7] - 1));
        out[t].push_back({{uint8_t(x[0]), uint8_t(x[1]), uint8_t(x[2]), uint8_t(x[3])}, v});
    });
    return out;
}

template <class S>
Tensor<S> weighted(const Tensor<S>& T, int axis, int slope, const Field<S>& F)
{
    if (slope == 0)
        return T;
    Tensor<S> r(T.shape());
    T.for_each([&](const Index& x, const S& v) { r.set(x, S(v * F.qpow(slope * x[axis]))); });
    return r;
}

} // namespace

template <class S>
CalculusEngine<S>::CalculusEngine(const RFamily<S>& f, const Convention& c)
    : fam(f), conv(c), N(f.N), sphere(build_sphere(f, c))
{
    build_tables();
    x_.resize(std::size_t(N) * N);
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j)
            x_[(i - 1) * N + (j - 1)] = sphere.unit_reduce(Poly<S>{{xmono(i, j), S(1)}});
}

template <class S>
void CalculusEngine<S>::build_tables()
{
    const Tensor<S>* T[4] = {&fam.RCP, &fam.RCPm, &fam.RCPc, &fam.RCPcm};
    for (int w = 0; w < 4; ++w)
        rcp_[w] = index8(*T[w], N);

    // a4: RCPm applied after RCPc
    a4_.assign(std::size_t(N) * N * N * N, {});
    for (std::size_t t = 0; t < a4_.size(); ++t) {
        std::map<std::array<uint8_t, 4>, S> acc;
        for (auto& e1 : rcp_[2][t]) {
            auto& mid = rcp_[1][t4(e1.out[0], e1.out[1], e1.out[2], e1.out[3])];
            for (auto& e2 : mid)
                acc[e2.out] += e1.v * e2.v;
        }
        for (auto& [o, v] : acc)
            if (!is_zero(v))
                a4_[t].push_back({o, v});
    }

    // Y^{stuv}_{ij}
    y_.assign(std::size_t(N) * N, {});
    y_tensor(fam, conv).for_each([&](const Index& x, const S& v) {
        y_[(x[4] - 1) * N + (x[5] - 1)].push_back({{uint8_t(x[0]), uint8_t(x[1]), uint8_t(x[2]), uint8_t(x[3])}, v});
    });

    // Q^{sv}_{ijkl} = Σ q^(link c) Rr^{ab}_{jk} Rm^{sc}_{ia} Rc^{cv}_{bl}
    Tensor<S> Rmw = weighted(fam.Rm, 1, conv.link, fam.F);
    Tensor<S> Q = contract<S>("abjk,scia,cvbl->svijkl", {&fam.Rr, &Rmw, &fam.Rc});
    q_.assign(std::size_t(N) * N * N * N, {});
    Q.for_each([&](const Index& x, const S& v) {
        q_[t4(x[2], x[3], x[4], x[5])].push_back({{uint8_t(x[0]), uint8_t(x[1]), 0, 0}, v});
    });

    // a8: ΣR_b q^(link d) Rr^{st}_{ab} Rrm^{uv}_{bc} Rl^{ad}_{ij} Rlm^{dc}_{kl}
    Tensor<S> Rrw = weighted(fam.Rr, 3, conv.sigmaR, fam.F);
    Tensor<S> Rlw = weighted(fam.Rl, 1, conv.link, fam.F);
    Tensor<S> A8 = contract<S>("stab,uvbc,adij,dckl->stuvijkl", {&Rrw, &fam.Rrm, &Rlw, &fam.Rlm});
    a8_ = index8(A8, N);
}

template <class S>
const std::vector<typename CalculusEngine<S>::E8>& CalculusEngine<S>::rcp(int which, int i, int j, int k, int l) const
{
    return rcp_[which][t4(i, j, k, l)];
}

template <class S>
const std::vector<typename CalculusEngine<S>::E8>& CalculusEngine<S>::ytab(int i, int j) const
{
    return y_[(i - 1) * N + (j - 1)];
}

template <class S>
const std::vector<typename CalculusEngine<S>::E8>& CalculusEngine<S>::qtab(int i, int j, int k, int l) const
{
    return q_[t4(i, j, k, l)];
}

template <class S>
std::string CalculusEngine<S>::term_recipe_size() const
{
    std::size_t n = 0;
    for (auto& v : a8_)
        n += v.size();
    return std::to_string(n);
}

template <class S>
const Poly<S>& CalculusEngine<S>::x(int i, int j)
{
    return x_[(i - 1) * N + (j - 1)];
}

template <class S>
const Poly<S>& CalculusEngine<S>::word(const std::vector<std::pair<int, int>>& w)
{
    uint64_t key = w.size();
    for (auto& [i, j] : w)
        key = (key << 6) | uint64_t((i - 1) * N + (j - 1));
    key |= uint64_t(w.size()) << 60;
    if (auto it = words_.find(key); it != words_.end())
        return it->second;
    Poly<S> p;
    if (w.empty())
        p = Poly<S>{{0, S(1)}};
    else if (w.size() == 1)
        p = x(w[0].first, w[0].second);
    else {
        std::vector<std::pair<int, int>> pre(w.begin(), w.end() - 1);
        p = sphere.mul(word(pre), x(w.back().first, w.back().second));
    }
    return words_.emplace(key, std::move(p)).first->second;
}

template <class S>
Poly<S> CalculusEngine<S>::xx(int i, int j, int k, int l)
{
    return word({{i, j}, {k, l}});
}

template <class S>
Form<S> CalculusEngine<S>::lmul(const Poly<S>& p, const Form<S>& w)
{
    Accum<S> acc;
    for (auto& [m, c] : p)
        for (auto& [k, cw] : w) {
            uint64_t dxbits = k & ~kMonoMask;
            S f = c * cw;
            for (auto& [u, cu] : sphere.mul_cached(m, k & kMonoMask))
                acc.add(dxbits | u, S(f * cu));
        }
    return acc.take();
}

template <class S>
Form<S> CalculusEngine<S>::dx(int u, int v)
{
    return Form<S>{{fkey(dxi(u, v), 0), S(1)}};
}

template <class S>
Form<S> CalculusEngine<S>::x_dx(int i, int j, int u, int v)
{
    Form<S> f;
    for (auto& [m, c] : x(i, j))
        f.emplace_back(fkey(dxi(u, v), m), c);
    return f;
}

namespace {

template <class S>
void put(Accum<S>& acc, const S& c, const Poly<S>& p, int dx)
{
    if (is_zero(c))
        return;
    for (auto& [m, cm] : p)
        acc.add(fkey(dx, m), S(c * cm));
}

} // namespace

template <class S>
Form<S> CalculusEngine<S>::E(int i, int k)
{
    Accum<S> acc;
    for (int s = 1; s <= N; ++s)
        put(acc, L(s), x(i, s), dxi(s, k));
    return acc.take();
}

template <class S>
Form<S> CalculusEngine<S>::Y(int i, int k)
{
    Accum<S> acc;
    for (auto& e : ytab(i, k))
        put(acc, e.v, x(e.out[0], e.out[1]), dxi(e.out[2], e.out[3]));
    return acc.take();
}

template <class S>
const Form<S>& CalculusEngine<S>::H()
{
    if (!H_) {
        Accum<S> acc;
        for (int a = 1; a <= N; ++a)
            for (int b = 1; b <= N; ++b)
                put(acc, L(b), x(a, b), dxi(b, a));
        H_ = acc.take();
    }
    return *H_;
}

template <class S>
Form<S> CalculusEngine<S>::xH(int i, int k)
{
    return lmul(x(i, k), H());
}

template <class S>
const std::vector<Form<S>>& CalculusEngine<S>::term_forms(int i, int j, int k, int l)
{
    uint32_t key = t4(i, j, k, l);
    if (auto it = terms_.find(key); it != terms_.end())
        return it->second;

    using W = std::vector<std::pair<int, int>>;
    std::vector<Accum<S>> acc(kTerms);
    auto T = [&](const char* n) -> Accum<S>& { return acc[ansatz_index(n)]; };
    auto Hterm = [&](Accum<S>& a, const S& c, W w) {
        w.push_back({0, 0});
        for (int p = 1; p <= N; ++p)
            for (int r = 1; r <= N; ++r) {
                w.back() = {p, r};
                put(a, S(c * L(r)), word(w), dxi(r, p));
            }
    };
    const S one(1);

    put(T("a1"), one, x(i, j), dxi(k, l));
    for (auto& e : rcp(1, i, j, k, l))
        put(T("a2"), e.v, x(e.out[0], e.out[1]), dxi(e.out[2], e.out[3]));
    for (auto& e : rcp(2, i, j, k, l))
        put(T("a3"), e.v, x(e.out[0], e.out[1]), dxi(e.out[2], e.out[3]));
    for (auto& e : a4_[key])
        put(T("a4"), e.v, x(e.out[0], e.out[1]), dxi(e.out[2], e.out[3]));
    if (j == k) {
        for (int s = 1; s <= N; ++s)
            put(T("a5"), L(s), x(i, s), dxi(s, l));
        for (auto& e : ytab(i, l))
            put(T("a6"), e.v, x(e.out[0], e.out[1]), dxi(e.out[2], e.out[3]));
    }
    for (auto& e : qtab(i, j, k, l))
        for (int t = 1; t <= N; ++t)
            put(T("a7"), S(e.v * L(t)), x(e.out[0], t), dxi(t, e.out[1]));
    for (auto& e : a8_[key])
        put(T("a8"), e.v, x(e.out[0], e.out[1]), dxi(e.out[2], e.out[3]));
    if (j == k && i == l)
        Hterm(T("a9"), Dw(l), {});
    if (i == j) {
        for (int s = 1; s <= N; ++s)
            put(T("e1"), S(Dw(j) * L(s)), x(k, s), dxi(s, l));
        for (auto& e : ytab(k, l))
            put(T("e2"), S(Dw(j) * e.v), x(e.out[0], e.out[1]), dxi(e.out[2], e.out[3]));
    }
    if (k == l) {
        for (int s = 1; s <= N; ++s)
            put(T("e3"), S(Dw(k) * L(s)), x(i, s), dxi(s, j));
        for (auto& e : ytab(i, j))
            put(T("e4"), S(Dw(k) * e.v), x(e.out[0], e.out[1]), dxi(e.out[2], e.out[3]));
    }
    const Poly<S> unit{{0, one}};
    if (j == k)
        put(T("f1"), one, unit, dxi(i, l));
    for (auto& e : qtab(i, j, k, l))
        put(T("f2"), e.v, unit, dxi(e.out[0], e.out[1]));
    if (i == j)
        put(T("f3"), Dw(j), unit, dxi(k, l));
    if (k == l)
        put(T("f4"), Dw(k), unit, dxi(i, j));
    if (i == j && k == l)
        Hterm(T("f5"), S(Dw(j) * Dw(k)), {});
    for (int s = 1; s <= N; ++s)
        put(T("b1"), L(s), word({{i, j}, {k, s}}), dxi(s, l));
    for (auto& e : rcp(2, i, j, k, l))
        for (int w = 1; w <= N; ++w)
            put(T("b2"), S(e.v * L(w)), word({{e.out[0], e.out[1]}, {e.out[2], w}}), dxi(w, e.out[3]));
    for (auto& e : ytab(k, l))
        put(T("b3"), e.v, word({{i, j}, {e.out[0], e.out[1]}}), dxi(e.out[2], e.out[3]));
    for (auto& e1 : rcp(1, i, j, k, l))
        for (auto& e2 : ytab(e1.out[2], e1.out[3]))
            put(T("b4"), S(e1.v * e2.v), word({{e1.out[0], e1.out[1]}, {e2.out[0], e2.out[1]}}),
                dxi(e2.out[2], e2.out[3]));
    if (j == k)
        Hterm(T("b5"), one, {{i, l}});
    for (auto& e : qtab(i, j, k, l))
        Hterm(T("b6"), e.v, {{e.out[0], e.out[1]}});
    if (i == j)
        Hterm(T("g1"), Dw(j), {{k, l}});
    if (k == l)
        Hterm(T("g2"), Dw(k), {{i, j}});
    Hterm(T("c"), one, {{i, j}, {k, l}});

    std::vector<Form<S>> forms(kTerms);
    for (int n = 0; n < kTerms; ++n)
        forms[n] = acc[n].take();
    return terms_.emplace(key, std::move(forms)).first->second;
}

template <class S>
Form<S> CalculusEngine<S>::expand(const std::vector<S>& values, int i, int j, int k, int l)
{
    Accum<S> acc;
    auto& tf = term_forms(i, j, k, l);
    for (int n = 0; n < kTerms; ++n)
        if (!is_zero(values[n]))
            for (auto& [key, c] : tf[n])
                acc.add(key, S(values[n] * c));
    return acc.take();
}

// ---------------------------------------------------------------------------
// relation submodule

template <class S>
RelationModule<S>::RelationModule(CalculusEngine<S>& eng, std::vector<Form<S>> gens, bool trace_only, int slack)
    : eng_(eng), gens_(std::move(gens)), trace_only_(trace_only), slack_(slack)
{
    for (auto& g : gens_) {
        if (g.empty())
            throw std::invalid_argument("empty relation generator");
        int d = 0;
        uint64_t w = weight_key(eng_.N, g.front().first & kMonoMask, fdx(g.front().first));
        for (auto& [k, c] : g) {
            d = std::max(d, mono_degree(k & kMonoMask));
            if (weight_key(eng_.N, k & kMonoMask, fdx(k)) != w)
                throw std::invalid_argument("relation generator is not weight homogeneous");
        }
        gdeg_.push_back(d);
        gw_.push_back(w);
    }
}

template <class S>
void RelationModule<S>::enumerate(int deg)
{
    const int N = eng_.N;
    for (int d = maxdeg_ + 1; d <= deg; ++d) {
        // all exponent vectors of total degree d
        std::vector<Mono> zs, ss;
        std::function<void(int, int, Mono, bool)> rec = [&](int i, int left, Mono m, bool star) {
            if (i == N) {
                Mono full = m + (star ? sbit(N) : zbit(N)) * Mono(left);
                (star ? ss : zs).push_back(full);
                return;
            }
            for (int e = 0; e <= left; ++e)
                rec(i + 1, left - e, m + (star ? sbit(i) : zbit(i)) * Mono(e), star);
        };
        rec(1, d, 0, false);
        rec(1, d, 0, true);
        for (Mono a : zs)
            for (Mono b : ss) {
                Mono m = a | b;
                if (zexp(m, N) > 0 && sexp(m, N) > 0)
                    continue;
                monos_[weight_key(N, m, -1)].push_back(m);
            }
    }
    maxdeg_ = std::max(maxdeg_, deg);
}

template <class S>
typename RelationModule<S>::Block& RelationModule<S>::block(uint64_t weight, int deg)
{
    auto key = std::make_pair(weight, deg);
    if (auto it = blocks_.find(key); it != blocks_.end())
        return it->second;
    Block& b = blocks_[key];
    int need = 0;
    for (int d : gdeg_)
        need = std::max(need, deg - d);
    enumerate(need);
    for (std::size_t g = 0; g < gens_.size(); ++g) {
        if (gdeg_[g] > deg)
            continue;
        auto it = monos_.find(weight_sub(eng_.N, weight, gw_[g]));
        if (it == monos_.end())
            continue;
        for (Mono m : it->second) {
            if (mono_degree(m) + gdeg_[g] > deg)
                continue;
            Form<S> row = eng_.lmul(Poly<S>{{m, S(1)}}, gens_[g]);
            std::map<uint32_t, S> r;
            for (auto& [k, c] : row) {
                auto [ci, fresh] = b.col.try_emplace(k, uint32_t(b.key.size()));
                if (fresh)
                    b.key.push_back(k);
                r[ci->second] += c;
            }
            b.ech.insert(SparseVec<S>::from_map(r));
        }
    }
    return b;
}

template <class S>
Form<S> RelationModule<S>::canonical(const Form<S>& w)
{
    if (gens_.empty() || w.empty())
        return w;
    const int N = eng_.N;
    if (trace_only_) {
        // Σ dx_ii = 0 only: eliminate dx_NN
        Accum<S> acc;
        int nn = eng_.dxi(N, N);
        for (auto& [k, c] : w) {
            if (fdx(k) != nn) {
                acc.add(k, c);
                continue;
            }
            for (int i = 1; i < N; ++i)
                acc.add(fkey(eng_.dxi(i, i), k & kMonoMask), S(-c));
        }
        return acc.take();
    }
    std::map<uint64_t, std::vector<std::pair<uint64_t, S>>> byw;
    for (auto& [k, c] : w)
        byw[weight_key(N, k & kMonoMask, fdx(k))].push_back({k, c});
    Accum<S> out;
    for (auto& [wt, terms] : byw) {
        int deg = 0;
        for (auto& [k, c] : terms)
            deg = std::max(deg, mono_degree(k & kMonoMask));
        for (auto& [k, c] : reduce_in(block(wt, deg + slack_), terms))
            out.add(k, c);
    }
    return out.take();
}

template <class S>
Form<S> RelationModule<S>::reduce_in(Block& b, const std::vector<std::pair<uint64_t, S>>& terms)
{
    std::map<uint32_t, S> r;
    for (auto& [k, c] : terms) {
        auto [ci, fresh] = b.col.try_emplace(k, uint32_t(b.key.size()));
        if (fresh)
            b.key.push_back(k);
        r[ci->second] += c;
    }
    Form<S> out;
    for (auto& [ci, c] : b.ech.reduce(SparseVec<S>::from_map(r)).e)
        out.emplace_back(b.key[ci], c);
    std::sort(out.begin(), out.end(), [](auto& x, auto& y) { return x.first < y.first; });
    return out;
}

template <class S>
std::vector<Form<S>> RelationModule<S>::canonical_batch(const std::vector<Form<S>>& ws)
{
    if (gens_.empty() || trace_only_) {
        std::vector<Form<S>> out;
        for (auto& w : ws)
            out.push_back(canonical(w));
        return out;
    }
    const int N = eng_.N;
    std::map<uint64_t, int> deg;
    for (auto& w : ws)
        for (auto& [k, c] : w) {
            int& d = deg.try_emplace(weight_key(N, k & kMonoMask, fdx(k)), 0).first->second;
            d = std::max(d, mono_degree(k & kMonoMask));
        }
    std::vector<Form<S>> out;
    for (auto& w : ws) {
        std::map<uint64_t, std::vector<std::pair<uint64_t, S>>> byw;
        for (auto& [k, c] : w)
            byw[weight_key(N, k & kMonoMask, fdx(k))].push_back({k, c});
        Accum<S> acc;
        for (auto& [wt, terms] : byw)
            for (auto& [k, c] : reduce_in(block(wt, deg[wt] + slack_), terms))
                acc.add(k, c);
        out.push_back(acc.take());
    }
    return out;
}

// ---------------------------------------------------------------------------

template <class S>
RelationCoeffs<S> published_relation(CaseTag c, int N, const Field<S>& F)
{
    auto qc = q_constants(N, F);
    switch (c) {
    case CaseTag::Free:
        return {S(), S(), S(), S()};
    case CaseTag::Red1:
        return {F.qpow(2), F.qpow(-1), S(-qc.sii / qc.si), S(S(-1) / qc.si)};
    case CaseTag::Red2:
        return {F.qpow(2), F.qpow(-1), S(), S()};
    }
    return {};
}

template <class S>
std::vector<S> published_values(CaseTag c, int N, const Field<S>& F)
{
    std::vector<S> v(kTerms, S());
    auto set = [&](const char* n, const S& x) { v[ansatz_index(n)] = x; };
    auto qc = q_constants(N, F);
    switch (c) {
    case CaseTag::Free:
        set("a2", F.qpow(-1));
        set("a3", F.q);
        set("a4", S(1));
        set("b1", S(-1));
        set("b2", S(-F.q));
        set("b3", S(-F.q));
        set("b4", S(-1));
        set("c", S(F.qpow(2) + S(1)));
        break;
    case CaseTag::Red1:
        set("b4", F.qpow(-2));
        set("b2", F.qpow(3));
        set("b5", S(-F.qpow(2 * N + 2) / qc.si));
        set("b6", S(-F.qpow(-1) / qc.si));
        set("g1", S(-F.qpow(-2) / qc.si));
        set("c", S(-F.qpow(-2) * qc.siv / qc.si));
        break;
    case CaseTag::Red2:
        set("b4", F.qpow(-2));
        set("b2", F.qpow(3));
        break;
    }
    return v;
}

template <class S>
std::vector<Form<S>> relation_generators(CalculusEngine<S>& eng, CaseTag c, const RelationCoeffs<S>& r, bool withH)
{
    const int N = eng.N;
    std::vector<Form<S>> gens;
    Accum<S> tr;
    for (int i = 1; i <= N; ++i)
        tr.add(fkey(eng.dxi(i, i), 0), S(1));
    gens.push_back(tr.take());
    if (c == CaseTag::Free)
        return gens;
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) {
            Form<S> g = eng.dx(i, j);
            g = form_add(g, eng.E(i, j), S(-r.A));
            g = form_add(g, eng.Y(i, j), S(-r.B));
            if (!is_zero(r.C))
                g = form_add(g, eng.xH(i, j), S(-r.C));
            if (i == j && !is_zero(r.D))
                g = form_add(g, eng.H(), S(-r.D * eng.Dw(j)));
            gens.push_back(std::move(g));
        }
    if (c == CaseTag::Red2 && withH)
        gens.push_back(eng.H());
    return gens;
}

template <class S>
RelationCoeffs<S> determine_relation(CalculusEngine<S>& eng, CaseTag c, RelationReport* rep)
{
    const int N = eng.N;
    const bool withH = c == CaseTag::Red1;
    auto X = [&](int which, int u, int v) -> Form<S> {
        switch (which) {
        case 0:
            return eng.E(u, v);
        case 1:
            return eng.Y(u, v);
        case 2:
            return eng.xH(u, v);
        default:
            return u == v ? form_scaled(eng.H(), eng.Dw(v)) : Form<S>{};
        }
    };
    // coefficients of `piece` over `basis`; throws when it does not decompose
    auto decompose = [&](const std::vector<Form<S>>& basis, const Form<S>& piece) {
        std::map<uint64_t, std::map<uint32_t, S>> rows;
        const uint32_t n = uint32_t(basis.size());
        for (uint32_t b = 0; b < n; ++b)
            for (auto& [k, v] : basis[b])
                rows[k][b] += v;
        for (auto& [k, v] : piece)
            rows[k][n] -= v;
        Echelon<S> ech;
        for (auto& [k, r] : rows)
            ech.insert(SparseVec<S>::from_map(r));
        auto sol = solve_affine(ech, int(n));
        if (!sol.consistent || sol.dim() != 0)
            throw std::runtime_error("relation substitution does not decompose");
        return sol.x0;
    };

    std::vector<std::pair<int, int>> tuples;
    if (N <= 3) {
        for (int i = 1; i <= N; ++i)
            for (int k = 1; k <= N; ++k)
                tuples.push_back({i, k});
    } else {
        tuples = {{1, 1}, {1, 2}, {2, 1}, {N, N}, {1, N}, {N, 2}};
    }
    // coefficient matrices: sub[which piece][basis element]
    std::optional<std::vector<std::vector<S>>> Esub, Ysub;
    std::optional<std::vector<S>> trace;
    for (auto [i, k] : tuples) {
        std::vector<Form<S>> basis = {eng.E(i, k), eng.Y(i, k), eng.xH(i, k)};
        std::vector<std::vector<S>> es(4), ys(4);
        for (int w = 0; w < 4; ++w) {
            Accum<S> pe, py;
            for (int j = 1; j <= N; ++j)
                for (auto& [key, v] : eng.lmul(eng.x(i, j), X(w, j, k)))
                    pe.add(key, S(v * eng.L(j)));
            for (auto& e : eng.ytab(i, k))
                for (auto& [key, v] : eng.lmul(eng.x(e.out[0], e.out[1]), X(w, e.out[2], e.out[3])))
                    py.add(key, S(v * e.v));
            es[w] = decompose(basis, pe.take());
            ys[w] = decompose(basis, py.take());
        }
        if (Esub && (*Esub != es || *Ysub != ys))
            throw std::runtime_error("relation substitution depends on the index tuple");
        Esub = es;
        Ysub = ys;
    }
    {
        std::vector<S> tr(4);
        for (int w = 0; w < 4; ++w) {
            Accum<S> acc;
            for (int i = 1; i <= N; ++i)
                for (auto& [key, v] : X(w, i, i))
                    acc.add(key, v);
            tr[w] = decompose({eng.H()}, acc.take())[0];
        }
        trace = tr;
    }
    // unknowns A,B,C,D in columns 0..3, constant in column 4
    Echelon<S> ech;
    auto eq = [&](std::vector<S> coef, const S& rhs) {
        std::map<uint32_t, S> r;
        for (uint32_t w = 0; w < 4; ++w)
            r[w] = coef[w];
        r[4] = -rhs;
        ech.insert(SparseVec<S>::from_map(r));
    };
    auto column = [&](const std::vector<std::vector<S>>& m, int b) {
        std::vector<S> v(4);
        for (int w = 0; w < 4; ++w)
            v[w] = m[w][b];
        return v;
    };
    eq(column(*Esub, 0), S(1));
    eq(column(*Esub, 1), S(0));
    eq(column(*Ysub, 1), S(1));
    eq(column(*Ysub, 0), S(0));
    if (withH) {
        eq(column(*Esub, 2), S(0));
        eq(column(*Ysub, 2), S(0));
        eq(*trace, S(0));
    } else {
        eq({S(), S(), S(1), S()}, S(0));
        eq({S(), S(), S(), S(1)}, S(0));
    }
    auto sol = solve_affine(ech, 4);
    if (rep) {
        rep->decomposes = true;
        rep->unique = sol.consistent && sol.dim() == 0;
    }
    if (!sol.consistent || sol.dim() != 0)
        throw std::runtime_error("relation coefficients not unique");
    RelationCoeffs<S> r{sol.x0[0], sol.x0[1], sol.x0[2], sol.x0[3]};
    if (rep)
        rep->coeffs = {to_string(r.A), to_string(r.B), to_string(r.C), to_string(r.D)};
    return r;
}

#define CPQ_INST(S)                                                                                          \
    template Form<S> form_add(const Form<S>&, const Form<S>&, const S&);                                     \
    template Form<S> form_scaled(const Form<S>&, const S&);                                                  \
    template class CalculusEngine<S>;                                                                        \
    template class RelationModule<S>;                                                                        \
    template RelationCoeffs<S> published_relation(CaseTag, int, const Field<S>&);                            \
    template std::vector<S> published_values(CaseTag, int, const Field<S>&);                                 \
    template std::vector<Form<S>> relation_generators(CalculusEngine<S>&, CaseTag, const RelationCoeffs<S>&, \
                                                      bool);                                                 \
    template RelationCoeffs<S> determine_relation(CalculusEngine<S>&, CaseTag, RelationReport*);

CPQ_INST(Rat)
CPQ_INST(QScalar)

} // namespace cpq

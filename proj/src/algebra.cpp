#include "cpq/algebra.hpp"

#include <sstream>
#include <stdexcept>

namespace cpq {

std::string Convention::fingerprint() const
{
    std::ostringstream os;
    os << "L" << sigmaL << ".R" << sigmaR << ".D" << delta << ".U" << link;
    return os.str();
}

template <class S>
std::vector<AlgElem<S>> build_cp_relations(const RFamily<S>& f, const Convention& conv, bool with_trace)
{
    const int N = f.N;
    auto byin = [&](const Tensor<S>& T) {
        std::map<std::array<int, 4>, AlgElem<S>> out;
        T.for_each([&](const Index& x, const S& v) {
            add_to(out[{x[4], x[5], x[6], x[7]}], Word{letter(N, x[0], x[1]), letter(N, x[2], x[3])}, v);
        });
        return out;
    };
    std::vector<AlgElem<S>> rels;
    auto push = [&](const Tensor<S>& T, const S& lam) {
        auto m = byin(T);
        for (int i = 1; i <= N; ++i)
            for (int j = 1; j <= N; ++j)
                for (int k = 1; k <= N; ++k)
                    for (int l = 1; l <= N; ++l) {
                        AlgElem<S> r = m[{i, j, k, l}];
                        add_to(r, Word{letter(N, i, j), letter(N, k, l)}, S(-lam));
                        rels.push_back(std::move(r));
                    }
    };
    push(f.RCPm, f.F.qpow(-1));
    push(f.RCPc, f.F.q);
    if (with_trace) {
        AlgElem<S> t;
        for (int i = 1; i <= N; ++i)
            add_to(t, Word{letter(N, i, i)}, f.F.qpow(conv.sigmaR * i));
        add_to(t, Word{}, S(-1));
        rels.push_back(std::move(t));
    }
    return rels;
}

namespace {

uint64_t ipow(uint64_t b, int e)
{
    uint64_t r = 1;
    while (e-- > 0)
        r *= b;
    return r;
}

} // namespace

// Columns run from the longest, lexicographically largest word down to the empty word,
// so pivots land on large words and short words survive as basis elements.
template <class S>
uint32_t QuotientBasis<S>::col(const Word& w) const
{
    const uint64_t n = uint64_t(N) * N;
    int L = int(w.size());
    if (L > k)
        throw std::out_of_range("degree overflow");
    uint64_t off = 0;
    for (int m = k; m > L; --m)
        off += ipow(n, m);
    uint64_t val = 0;
    for (uint8_t g : w)
        val = val * n + g;
    return uint32_t(off + (ipow(n, L) - 1 - val));
}

template <class S>
Word QuotientBasis<S>::word(uint32_t c) const
{
    const uint64_t n = uint64_t(N) * N;
    uint64_t x = c;
    for (int L = k; L >= 0; --L) {
        uint64_t sz = ipow(n, L);
        if (x < sz) {
            uint64_t val = sz - 1 - x;
            Word w(L);
            for (int a = L; a-- > 0;) {
                w[a] = uint8_t(val % n);
                val /= n;
            }
            return w;
        }
        x -= sz;
    }
    throw std::out_of_range("column out of range");
}

template <class S>
AlgElem<S> QuotientBasis<S>::normal_form(const AlgElem<S>& e) const
{
    std::map<uint32_t, S> m;
    for (auto& [w, c] : e)
        m[col(w)] += c;
    auto r = ideal.reduce(SparseVec<S>::from_map(m));
    AlgElem<S> out;
    for (auto& [c, v] : r.e)
        out.emplace(word(c), v);
    return out;
}

template <class S>
QuotientBasis<S> quotient_basis(int N, const std::vector<AlgElem<S>>& relations, int k, std::size_t max_columns)
{
    const uint64_t n = uint64_t(N) * N;
    uint64_t cols = 0;
    for (int L = 0; L <= k; ++L)
        cols += ipow(n, L);
    if (cols > max_columns)
        throw std::length_error("quotient basis too large: " + std::to_string(cols) + " columns");
    QuotientBasis<S> qb;
    qb.N = N;
    qb.k = k;

    std::vector<std::vector<Word>> words(k + 1);
    words[0].push_back({});
    for (int L = 1; L <= k; ++L)
        for (auto& w : words[L - 1])
            for (uint8_t g = 0; g < n; ++g) {
                Word x(w);
                x.push_back(g);
                words[L].push_back(std::move(x));
            }

    for (auto& r : relations) {
        if (r.empty())
            continue;
        int deg = 0;
        for (auto& [w, c] : r)
            deg = std::max(deg, int(w.size()));
        for (int lu = 0; lu + deg <= k; ++lu)
            for (int lv = 0; lu + lv + deg <= k; ++lv)
                for (auto& u : words[lu])
                    for (auto& v : words[lv]) {
                        std::map<uint32_t, S> row;
                        for (auto& [w, c] : r) {
                            Word x(u);
                            x.insert(x.end(), w.begin(), w.end());
                            x.insert(x.end(), v.begin(), v.end());
                            row[qb.col(x)] += c;
                        }
                        qb.ideal.insert(SparseVec<S>::from_map(row));
                    }
    }
    for (uint32_t c = 0; c < cols; ++c)
        if (!qb.ideal.is_pivot(c))
            qb.basis.push_back(qb.word(c));
    return qb;
}

namespace {

template <class S>
bool proportional(const AlgElem<S>& a, const AlgElem<S>& b, S& lam)
{
    if (b.empty())
        return false;
    auto& [w0, c0] = *b.begin();
    auto it = a.find(w0);
    lam = it == a.end() ? S() : S(it->second / c0);
    AlgElem<S> d = a;
    for (auto& [w, c] : b)
        add_to(d, w, S(-lam * c));
    return d.empty();
}


// One-forms over the word quotient: generator index (u-1)*N+(v-1) of dx_uv -> coefficient.
template <class S>
using WForm = std::map<int, AlgElem<S>>;

template <class S>
void wadd(WForm<S>& a, const WForm<S>& b, const S& f)
{
    for (auto& [g, e] : b)
        for (auto& [w, c] : e)
            add_to(a[g], w, S(f * c));
}

template <class S>
WForm<S> lmul(const Word& u, const WForm<S>& a)
{
    WForm<S> r;
    for (auto& [g, e] : a)
        for (auto& [w, c] : e) {
            Word x(u);
            x.insert(x.end(), w.begin(), w.end());
            add_to(r[g], x, c);
        }
    return r;
}

template <class S>
bool substitution_pattern(const RFamily<S>& f, const Convention& cv, const Tensor<S>& Y, const QuotientBasis<S>& qb)
{
    const int N = f.N;
    auto L = [&](int j) { return f.F.qpow(cv.sigmaL * j); };
    auto dx = [&](int u, int v) { return (u - 1) * N + (v - 1); };
    auto E = [&](int i, int k) {
        WForm<S> w;
        for (int s = 1; s <= N; ++s)
            add_to(w[dx(s, k)], Word{letter(N, i, s)}, L(s));
        return w;
    };
    auto H = [&]() {
        WForm<S> w;
        for (int a = 1; a <= N; ++a)
            for (int b = 1; b <= N; ++b)
                add_to(w[dx(b, a)], Word{letter(N, a, b)}, L(b));
        return w;
    };
    std::map<std::pair<int, int>, WForm<S>> Ys;
    Y.for_each([&](const Index& x, const S& v) {
        add_to(Ys[{x[4], x[5]}][dx(x[2], x[3])], Word{letter(N, x[0], x[1])}, v);
    });
    auto nf = [&](const WForm<S>& w) {
        WForm<S> r;
        for (auto& [g, e] : w) {
            auto n = qb.normal_form(e);
            if (!n.empty())
                r[g] = std::move(n);
        }
        return r;
    };
    const WForm<S> h = H();
    std::vector<S> expect_E = {f.F.qpow(-2), S(), S(), S()};
    std::vector<S> expect_H = {S(), f.F.qpow(-1), f.F.qpow(-2), S(1)};
    for (int i = 1; i <= N; ++i)
        for (int k = 1; k <= N; ++k) {
            WForm<S> xH = lmul(Word{letter(N, i, k)}, h);
            std::vector<WForm<S>> basis = {nf(E(i, k)), nf(Ys[{i, k}]), nf(xH)};
            std::vector<WForm<S>> piece(4);
            for (int j = 1; j <= N; ++j) {
                Word xij{letter(N, i, j)};
                wadd(piece[0], lmul(xij, E(j, k)), L(j));
                wadd(piece[1], lmul(xij, Ys[{j, k}]), L(j));
                wadd(piece[2], lmul(Word{letter(N, i, j), letter(N, j, k)}, h), L(j));
                if (j == k)
                    wadd(piece[3], lmul(xij, h), S(L(j) * f.F.qpow(cv.delta * k)));
            }
            for (int p = 0; p < 4; ++p) {
                // coordinates: columns 0..2 basis coefficients, 3 the piece itself
                std::map<std::pair<int, Word>, std::map<uint32_t, S>> rows;
                for (int b = 0; b < 3; ++b)
                    for (auto& [g, e] : basis[b])
                        for (auto& [w, c] : e)
                            rows[{g, w}][b] += c;
                for (auto& [g, e] : nf(piece[p]))
                    for (auto& [w, c] : e)
                        rows[{g, w}][3] -= c;
                Echelon<S> ech;
                for (auto& [key, r] : rows)
                    ech.insert(SparseVec<S>::from_map(r));
                auto sol = solve_affine(ech, 3);
                if (!sol.consistent || sol.dim() != 0)
                    return false;
                if (!(sol.x0[0] == expect_E[p]) || !is_zero(sol.x0[1]) || !(sol.x0[2] == expect_H[p]))
                    return false;
            }
        }
    return true;
}

} // namespace

template <class S>
Tensor<S> y_tensor(const RFamily<S>& f, const Convention& conv)
{
    // Y^{stuv}_{ij} = ΣR_a Rlm^{tu}_{bc} Rm^{sb}_{ia} Rc^{cv}_{aj}
    Tensor<S> Rmw = Tensor<S>::cube(f.N, 4);
    f.Rm.for_each([&](const Index& x, const S& v) { Rmw.set(x, S(v * f.F.qpow(conv.sigmaR * x[3]))); });
    return contract<S>({&f.Rlm, &Rmw, &f.Rc}, ContractionPlan::parse("tubc,sbia,cvaj->stuvij"));
}

template <class S>
ConventionReport resolve_convention(const RFamily<S>& f)
{
    const int N = f.N;
    const int cand[] = {-2, 0, 2};
    ConventionReport rep;

    auto quad = quotient_basis(N, build_cp_relations(f, Convention{}, false), 2);

    // (a) ΣL_j x_ij x_jk must reduce to one common multiple of x_ik.
    std::map<int, std::pair<bool, S>> implied;
    for (int cL : cand) {
        bool ok = true;
        S lam0;
        bool have = false;
        for (int i = 1; i <= N && ok; ++i)
            for (int k = 1; k <= N && ok; ++k) {
                AlgElem<S> e;
                for (int j = 1; j <= N; ++j)
                    add_to(e, Word{letter(N, i, j), letter(N, j, k)}, f.F.qpow(cL * j));
                // degree 2 against degree 1: pad x_ik with the (unweighted) trace
                AlgElem<S> x;
                for (int m = 1; m <= N; ++m)
                    add_to(x, Word{letter(N, m, m), letter(N, i, k)}, S(1));
                S lam;
                if (!proportional(quad.normal_form(e), quad.normal_form(x), lam)) {
                    ok = false;
                    break;
                }
                if (have && !(lam == lam0))
                    ok = false;
                lam0 = lam;
                have = true;
            }
        implied[cL] = {ok, lam0};
    }
    // (b) the weighted trace has to be central for the unit relation to be consistent.
    std::map<int, bool> central;
    for (int cR : cand) {
        bool ok = true;
        for (int k = 1; k <= N && ok; ++k)
            for (int l = 1; l <= N && ok; ++l) {
                AlgElem<S> e;
                for (int i = 1; i <= N; ++i) {
                    add_to(e, Word{letter(N, i, i), letter(N, k, l)}, f.F.qpow(cR * i));
                    add_to(e, Word{letter(N, k, l), letter(N, i, i)}, S(-f.F.qpow(cR * i)));
                }
                ok = quad.normal_form(e).empty();
            }
        central[cR] = ok;
    }
    // (c) substitute the relation family dx_jk = A E_jk + B Y_jk + C x_jk H + D δ_jk q^(cD k) H
    // into ΣL_j x_ij dx_jk and decompose each piece over {E_ik, Y_ik, x_ik H}.
    for (int cR : cand) {
        Convention base{-2, cR, 0, 2};
        auto qb = quotient_basis(N, build_cp_relations(f, base, true), 3);
        auto Y = y_tensor(f, base);
        for (int cL : cand)
            for (int cD : cand) {
                Convention c{cL, cR, cD, 2};
                std::map<std::string, bool> m;
                m["implied"] = implied[cL].first;
                m["central"] = central[cR];
                m["substitution"] = substitution_pattern(f, c, Y, qb);
                rep.matrix.push_back({c, m});
            }
    }
    int hits = 0;
    for (auto& [c, m] : rep.matrix) {
        bool all = true;
        for (auto& [name, ok] : m)
            all = all && ok;
        if (all) {
            ++hits;
            rep.resolved = c;
            rep.implied_scalar = to_string(implied[c.sigmaL].second);
        }
    }
    rep.unique = hits == 1;
    return rep;
}

#define CPQ_INST(S)                                                                                        \
    template std::vector<AlgElem<S>> build_cp_relations(const RFamily<S>&, const Convention&, bool);       \
    template struct QuotientBasis<S>;                                                                      \
    template QuotientBasis<S> quotient_basis(int, const std::vector<AlgElem<S>>&, int, std::size_t);       \
    template ConventionReport resolve_convention(const RFamily<S>&);                                      \
    template Tensor<S> y_tensor(const RFamily<S>&, const Convention&);

CPQ_INST(Rat)
CPQ_INST(QScalar)

} // namespace cpq

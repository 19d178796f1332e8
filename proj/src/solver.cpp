#include "cpq/calculus.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <set>
#include <sstream>

namespace cpq {

namespace {

// Affine family of ansatz vectors: vals[0] + Σ_k p_k vals[k].
template <class S>
struct Param {
    std::vector<std::vector<S>> vals;
    std::vector<std::string> names;
    int P() const { return int(vals.size()) - 1; }
};

template <class S>
std::string coeff_text(const Param<S>& par, int n)
{
    std::string out;
    if (!is_zero(par.vals[0][n]))
        out = to_string(par.vals[0][n]);
    for (int k = 1; k <= par.P(); ++k) {
        const S& c = par.vals[k][n];
        if (is_zero(c))
            continue;
        std::string t = to_string(c);
        std::string term = t == "1" ? par.names[k - 1] : "(" + t + ")*" + par.names[k - 1];
        out += out.empty() ? term : " + " + term;
    }
    return out.empty() ? "0" : out;
}

template <class S>
bool determined(const Param<S>& par, int n)
{
    for (int k = 1; k <= par.P(); ++k)
        if (!is_zero(par.vals[k][n]))
            return false;
    return true;
}

// p_k = x0[k] + Σ_f basis[f][k] t_f
template <class S>
Param<S> compose(const Param<S>& par, const AffineSolution<S>& sol)
{
    Param<S> out;
    std::vector<S> base = par.vals[0];
    for (int k = 0; k < par.P(); ++k)
        if (!is_zero(sol.x0[k]))
            for (int n = 0; n < kTerms; ++n)
                base[n] += sol.x0[k] * par.vals[k + 1][n];
    out.vals.push_back(std::move(base));
    for (std::size_t f = 0; f < sol.free_vars.size(); ++f) {
        std::vector<S> d(kTerms, S());
        for (int k = 0; k < par.P(); ++k)
            if (!is_zero(sol.basis[f][k]))
                for (int n = 0; n < kTerms; ++n)
                    d[n] += sol.basis[f][k] * par.vals[k + 1][n];
        out.vals.push_back(std::move(d));
        out.names.push_back(par.names[sol.free_vars[f]]);
    }
    return out;
}

template <class S>
class Work {
public:
    Work(CalculusEngine<S>& e, RelationModule<S>& k, Param<S> p, RelationCoeffs<S> r)
        : eng(e), K(k), par(std::move(p)), rel(r), N(e.N)
    {
    }

    CalculusEngine<S>& eng;
    RelationModule<S>& K;
    Param<S> par;
    RelationCoeffs<S> rel;
    int N;

    void reset(Param<S> p)
    {
        par = std::move(p);
        ans_.clear();
        dxxx_.clear();
    }

    // dx_ij·x_kl per parameter column
    const std::vector<Form<S>>& ansP(int i, int j, int k, int l)
    {
        uint32_t key = uint32_t((((i - 1) * N + (j - 1)) * N + (k - 1)) * N + (l - 1));
        if (auto it = ans_.find(key); it != ans_.end())
            return it->second;
        auto& tf = eng.term_forms(i, j, k, l);
        std::vector<Form<S>> out(par.P() + 1);
        for (int c = 0; c <= par.P(); ++c) {
            Accum<S> acc;
            for (int n = 0; n < kTerms; ++n)
                if (!is_zero(par.vals[c][n]))
                    for (auto& [key2, v] : tf[n])
                        acc.add(key2, S(par.vals[c][n] * v));
            out[c] = acc.take();
        }
        return ans_.emplace(key, std::move(out)).first->second;
    }

    // ---- linear conditions: one accumulator per column, column 0 = constant
    using Cols = std::vector<Accum<S>>;
    Cols cols() { return Cols(par.P() + 1); }
    void add_ans(Cols& c, const S& f, int i, int j, int k, int l)
    {
        auto& a = ansP(i, j, k, l);
        for (int p = 0; p <= par.P(); ++p)
            for (auto& [key, v] : a[p])
                c[p].add(key, S(f * v));
    }
    void add_left(Cols& c, const S& f, const Poly<S>& left, int i, int j, int k, int l)
    {
        auto& a = ansP(i, j, k, l);
        for (int p = 0; p <= par.P(); ++p)
            for (auto& [key, v] : eng.lmul(left, a[p]))
                c[p].add(key, S(f * v));
    }
    void add_const(Cols& c, const S& f, const Form<S>& w)
    {
        for (auto& [key, v] : w)
            c[0].add(key, S(f * v));
    }
    // H·x_kl = Σ L(b) x_ab (dx_ba·x_kl)
    void add_hx(Cols& c, const S& f, const Poly<S>& left, int k, int l)
    {
        for (int a = 1; a <= N; ++a)
            for (int b = 1; b <= N; ++b)
                add_left(c, S(f * eng.L(b)), eng.sphere.mul(left, eng.x(a, b)), b, a, k, l);
    }

    Cols kl1(int j, int k)
    {
        Cols c = cols();
        for (int i = 1; i <= N; ++i)
            add_ans(c, eng.fam.F.qpow(eng.conv.sigmaR * i), i, i, j, k);
        return c;
    }
    Cols kl2(int i, int j)
    {
        Cols c = cols();
        for (int k = 1; k <= N; ++k)
            add_ans(c, S(1), i, j, k, k);
        add_const(c, S(-1), eng.dx(i, j));
        return c;
    }
    Cols kl3(int i, int k)
    {
        Cols c = cols();
        for (int j = 1; j <= N; ++j) {
            add_const(c, eng.L(j), eng.x_dx(i, j, j, k));
            add_ans(c, eng.L(j), i, j, j, k);
        }
        add_const(c, S(-eng.fam.F.qpow(-2)), eng.dx(i, k));
        return c;
    }
    // which = 3 with λ = q, which = 0 with λ = q^-1
    Cols kl45(int which, int i, int j, int k, int l)
    {
        S lam = eng.fam.F.qpow(which == 3 ? 1 : -1);
        Cols c = cols();
        add_ans(c, S(1), i, j, k, l);
        add_const(c, S(1), eng.x_dx(i, j, k, l));
        for (auto& e : eng.rcp(which, i, j, k, l)) {
            S f = -lam * e.v;
            add_ans(c, f, e.out[0], e.out[1], e.out[2], e.out[3]);
            add_const(c, f, eng.x_dx(e.out[0], e.out[1], e.out[2], e.out[3]));
        }
        return c;
    }
    // relation r_ij multiplied by x_kl from the right
    Cols kl8(int i, int j, int k, int l)
    {
        Cols c = cols();
        add_ans(c, S(1), i, j, k, l);
        if (!is_zero(rel.A))
            for (int m = 1; m <= N; ++m)
                add_left(c, S(-rel.A * eng.L(m)), eng.x(i, m), m, j, k, l);
        if (!is_zero(rel.B))
            for (auto& e : eng.ytab(i, j))
                add_left(c, S(-rel.B * e.v), eng.x(e.out[0], e.out[1]), e.out[2], e.out[3], k, l);
        if (!is_zero(rel.C))
            add_hx(c, S(-rel.C), eng.x(i, j), k, l);
        if (i == j && !is_zero(rel.D))
            add_hx(c, S(-rel.D * eng.Dw(j)), Poly<S>{{0, S(1)}}, k, l);
        return c;
    }
    Cols hx(int k, int l)
    {
        Cols c = cols();
        add_hx(c, S(1), Poly<S>{{0, S(1)}}, k, l);
        return c;
    }

    // ---- quadratic conditions: one accumulator per pair (a <= b) of columns
    int npairs() const { return (par.P() + 1) * (par.P() + 2) / 2; }
    int pair(int a, int b) const
    {
        if (a > b)
            std::swap(a, b);
        // (a,b) in row-major upper triangle over 0..P
        int P1 = par.P() + 1;
        return a * P1 - a * (a - 1) / 2 + (b - a);
    }

    // (dx_ij·x_st)·x_uv
    const std::vector<Form<S>>& dxxx(int i, int j, int s, int t, int u, int v)
    {
        uint64_t key = 0;
        for (int x : {i, j, s, t, u, v})
            key = key * 8 + uint64_t(x);
        if (auto it = dxxx_.find(key); it != dxxx_.end())
            return it->second;
        std::vector<Accum<S>> acc(npairs());
        auto& first = ansP(i, j, s, t);
        for (int a = 0; a <= par.P(); ++a)
            for (auto& [k1, c1] : first[a]) {
                Poly<S> left{{k1 & kMonoMask, c1}};
                int dx = fdx(k1);
                auto& second = ansP(dx / N + 1, dx % N + 1, u, v);
                for (int b = 0; b <= par.P(); ++b) {
                    if (second[b].empty())
                        continue;
                    auto& dst = acc[pair(a, b)];
                    for (auto& [k2, c2] : eng.lmul(left, second[b]))
                        dst.add(k2, c2);
                }
            }
        std::vector<Form<S>> out(npairs());
        for (int p = 0; p < npairs(); ++p)
            out[p] = acc[p].take();
        if (dxxx_.size() > 400000)
            dxxx_.clear();
        return dxxx_.emplace(key, std::move(out)).first->second;
    }
    using QCols = std::vector<Accum<S>>;
    void add_q(QCols& c, const S& f, int i, int j, int s, int t, int u, int v)
    {
        auto& d = dxxx(i, j, s, t, u, v);
        for (int p = 0; p < npairs(); ++p)
            for (auto& [key, x] : d[p])
                c[p].add(key, S(f * x));
    }
    QCols kl6(int which, int i, int j, int k, int l, int m, int n)
    {
        S lam = eng.fam.F.qpow(which == 3 ? 1 : -1);
        QCols c(npairs());
        for (auto& e : eng.rcp(which, k, l, m, n))
            add_q(c, S(lam * e.v), i, j, e.out[0], e.out[1], e.out[2], e.out[3]);
        add_q(c, S(-1), i, j, k, l, m, n);
        return c;
    }
    QCols kl7(int i, int j, int k, int l)
    {
        QCols c(npairs());
        for (int m = 1; m <= N; ++m)
            add_q(c, eng.L(m), i, j, k, m, m, l);
        auto& a = ansP(i, j, k, l);
        S f = -eng.fam.F.qpow(-2);
        for (int p = 0; p <= par.P(); ++p)
            for (auto& [key, v] : a[p])
                c[pair(0, p)].add(key, S(f * v));
        return c;
    }

private:
    std::unordered_map<uint32_t, std::vector<Form<S>>> ans_;
    std::unordered_map<uint64_t, std::vector<Form<S>>> dxxx_;
};

// Rows of the coordinate system: one per basis key of the canonical remainder.
template <class S>
std::vector<SparseVec<S>> rows_of(RelationModule<S>& K, std::vector<Accum<S>>& cols,
                                  const std::vector<uint32_t>& colmap)
{
    std::vector<Form<S>> forms;
    for (auto& a : cols)
        forms.push_back(a.take());
    forms = K.canonical_batch(forms);
    std::map<uint64_t, std::map<uint32_t, S>> byk;
    for (std::size_t c = 0; c < forms.size(); ++c)
        for (auto& [k, v] : forms[c])
            byk[k][colmap[c]] += v;
    std::vector<SparseVec<S>> out;
    for (auto& [k, r] : byk) {
        auto v = SparseVec<S>::from_map(r);
        if (!v.empty())
            out.push_back(std::move(v));
    }
    return out;
}

using Tuple = std::array<int, 6>;

std::vector<Tuple> tuples(int N, int arity, bool shuffle)
{
    std::vector<Tuple> out;
    Tuple t{1, 1, 1, 1, 1, 1};
    for (;;) {
        out.push_back(t);
        int p = arity - 1;
        while (p >= 0 && t[p] == N)
            t[p--] = 1;
        if (p < 0)
            break;
        ++t[p];
    }
    if (shuffle) {
        std::mt19937_64 rng(0x5eedULL + uint64_t(N) * 31 + uint64_t(arity));
        std::shuffle(out.begin(), out.end(), rng);
    }
    return out;
}

// Row accumulator. Over Q(q) every row is first specialised at an off-grid q and
// only rows that raise the specialised rank are eliminated symbolically; the rest
// are kept and checked exactly against the final solution (see solve).
template <class S>
struct Screen {
    Echelon<S> ech;
    bool insert(SparseVec<S> r) { return ech.insert(std::move(r)); }
    AffineSolution<S> solve(int n) { return solve_affine(ech, n); }
};

template <>
struct Screen<QScalar> {
    Echelon<QScalar> ech;
    Echelon<Rat> probe;
    std::vector<SparseVec<QScalar>> skipped;
    static Rat at() { return Rat(29, 17); }

    bool insert(SparseVec<QScalar> r)
    {
        SparseVec<Rat> v;
        try {
            for (auto& [c, x] : r.e) {
                Rat y = x.eval(at());
                if (y != 0)
                    v.e.push_back({c, y});
            }
        } catch (const std::domain_error&) {
            return ech.insert(std::move(r));
        }
        if (!probe.insert(std::move(v))) {
            skipped.push_back(std::move(r));
            return false;
        }
        return ech.insert(std::move(r));
    }

    static bool vanishes(const SparseVec<QScalar>& r, const std::vector<QScalar>& x, bool affine, int n)
    {
        QScalar acc;
        for (auto& [c, y] : r.e)
            if (int(c) < n)
                acc += y * x[c];
            else if (affine)
                acc += y;
        return is_zero(acc);
    }

    AffineSolution<QScalar> solve(int n)
    {
        for (;;) {
            auto sol = solve_affine(ech, n);
            if (!sol.consistent)
                return sol;
            std::vector<SparseVec<QScalar>> keep;
            bool grew = false;
            for (auto& r : skipped) {
                bool ok = vanishes(r, sol.x0, true, n);
                for (auto& b : sol.basis)
                    ok = ok && vanishes(r, b, false, n);
                if (ok)
                    keep.push_back(std::move(r));
                else
                    grew |= ech.insert(std::move(r));
            }
            skipped = std::move(keep);
            if (!grew)
                return sol;
        }
    }
};

struct StageSpec {
    std::string name;
    int arity;
    bool quadratic;
};

template <class S>
class Solver {
public:
    Solver(CalculusEngine<S>& e, RelationModule<S>& k, Param<S> p, RelationCoeffs<S> r, const SolveOptions& o)
        : w(e, k, std::move(p), r), opt(o)
    {
    }
    Work<S> w;
    SolveOptions opt;
    bool consistent = true;
    int unresolved = 0;

    std::vector<typename Work<S>::Cols> lin_conditions(const std::string& name, const Tuple& t)
    {
        std::vector<typename Work<S>::Cols> out;
        if (name == "kl1")
            out.push_back(w.kl1(t[0], t[1]));
        else if (name == "kl2")
            out.push_back(w.kl2(t[0], t[1]));
        else if (name == "kl3")
            out.push_back(w.kl3(t[0], t[1]));
        else if (name == "kl4")
            out.push_back(w.kl45(3, t[0], t[1], t[2], t[3]));
        else if (name == "kl5")
            out.push_back(w.kl45(0, t[0], t[1], t[2], t[3]));
        else if (name == "kl8")
            out.push_back(w.kl8(t[0], t[1], t[2], t[3]));
        else if (name == "kl8h")
            out.push_back(w.hx(t[0], t[1]));
        else
            throw std::logic_error("unknown condition " + name);
        return out;
    }
    std::vector<typename Work<S>::QCols> quad_conditions(const std::string& name, const Tuple& t)
    {
        std::vector<typename Work<S>::QCols> out;
        if (name == "kl6") {
            out.push_back(w.kl6(3, t[0], t[1], t[2], t[3], t[4], t[5]));
            out.push_back(w.kl6(0, t[0], t[1], t[2], t[3], t[4], t[5]));
        } else if (name == "kl7")
            out.push_back(w.kl7(t[0], t[1], t[2], t[3]));
        else
            throw std::logic_error("unknown condition " + name);
        return out;
    }

    bool stop_early(std::size_t stable) const { return !opt.exhaustive && opt.patience > 0 && stable >= std::size_t(opt.patience); }

    StageReport linear(const StageSpec& st)
    {
        StageReport rep{st.name};
        const int P = w.par.P();
        rep.params_before = P;
        // column 0 (constant) goes last, parameter k to k-1
        std::vector<uint32_t> colmap(P + 1);
        colmap[0] = uint32_t(P);
        for (int k = 1; k <= P; ++k)
            colmap[k] = uint32_t(k - 1);
        Screen<S> scr;
        std::size_t stable = 0;
        for (auto& t : tuples(w.N, st.arity, !opt.exhaustive)) {
            bool grew = false;
            for (auto& c : lin_conditions(st.name, t))
                for (auto& r : rows_of(w.K, c, colmap)) {
                    ++rep.rows;
                    grew |= scr.insert(std::move(r));
                }
            ++rep.tuples;
            stable = grew ? 0 : stable + 1;
            if (scr.ech.is_pivot(uint32_t(P)) || stop_early(stable))
                break;
        }
        auto sol = scr.solve(P);
        if (!sol.consistent) {
            consistent = rep.consistent = false;
            rep.params_after = P;
            return rep;
        }
        w.reset(compose(w.par, sol));
        rep.params_after = w.par.P();
        return rep;
    }

    StageReport quadratic(const StageSpec& st)
    {
        StageReport rep{st.name};
        rep.params_before = w.par.P();
        for (;;) {
            const int P = w.par.P();
            const int PP = P * (P + 1) / 2;
            // pair (a,b): products first, then linear, then constant
            std::vector<uint32_t> colmap(w.npairs());
            for (int a = 0; a <= P; ++a)
                for (int b = a; b <= P; ++b) {
                    uint32_t c;
                    if (a == 0 && b == 0)
                        c = uint32_t(PP + P);
                    else if (a == 0)
                        c = uint32_t(PP + b - 1);
                    else
                        c = uint32_t((a - 1) * P - (a - 1) * (a - 2) / 2 + (b - a));
                    colmap[w.pair(a, b)] = c;
                }
            Screen<S> scr;
            auto& ech = scr.ech;
            std::size_t stable = 0;
            for (auto& t : tuples(w.N, st.arity, !opt.exhaustive)) {
                bool grew = false;
                for (auto& c : quad_conditions(st.name, t))
                    for (auto& r : rows_of(w.K, c, colmap)) {
                        ++rep.rows;
                        grew |= P > 0 ? scr.insert(std::move(r)) : ech.insert(std::move(r));
                    }
                ++rep.tuples;
                stable = grew ? 0 : stable + 1;
                if (ech.is_pivot(uint32_t(PP + P)) || stop_early(stable))
                    break;
            }
            if (ech.is_pivot(uint32_t(PP + P))) {
                consistent = rep.consistent = false;
                break;
            }
            // linear consequences, plus p_k^2 = 0 rows
            Echelon<S> lin;
            int quad_left = 0;
            std::vector<int> diag(PP, -1);
            for (int a = 1; a <= P; ++a)
                diag[colmap[w.pair(a, a)]] = a;
            for (auto& [p, r] : ech.rows()) {
                if (p >= uint32_t(PP)) {
                    std::map<uint32_t, S> m;
                    for (auto& [c, v] : r.e)
                        m[c - PP] = v;
                    lin.insert(SparseVec<S>::from_map(m));
                } else if (r.size() == 1 && diag[p] > 0) {
                    lin.insert(SparseVec<S>::from_map({{uint32_t(diag[p] - 1), S(1)}}));
                } else {
                    ++quad_left;
                }
            }
            if (lin.rank() == 0) {
                unresolved = quad_left;
                break;
            }
            auto sol = solve_affine(lin, P);
            if (!sol.consistent) {
                consistent = rep.consistent = false;
                break;
            }
            w.reset(compose(w.par, sol));
            if (w.par.P() == 0) {
                // rerun once more to confirm the fully determined point
                continue;
            }
        }
        rep.params_after = w.par.P();
        return rep;
    }
};

template <class S>
std::string mode_name(const Field<S>& F);
template <>
std::string mode_name(const Field<Rat>& F)
{
    return "sampled q=" + to_string(F.q);
}
template <>
std::string mode_name(const Field<QScalar>&)
{
    return "symbolic";
}

} // namespace

template <class S>
std::vector<std::vector<S>> term_kernel(CalculusEngine<S>& eng, RelationModule<S>& K, const SolveOptions& opt,
                                        const std::vector<int>& terms)
{
    std::vector<int> use = terms;
    if (use.empty())
        for (int n = 0; n < kTerms; ++n)
            use.push_back(n);
    const int T = int(use.size());
    Screen<S> scr;
    std::vector<uint32_t> colmap(T);
    for (int n = 0; n < T; ++n)
        colmap[n] = uint32_t(n);
    std::size_t stable = 0;
    for (auto& t : tuples(eng.N, 4, !opt.exhaustive)) {
        auto& tf = eng.term_forms(t[0], t[1], t[2], t[3]);
        std::vector<Accum<S>> cols(T);
        for (int n = 0; n < T; ++n)
            for (auto& [k, v] : tf[use[n]])
                cols[n].add(k, v);
        bool grew = false;
        for (auto& r : rows_of(K, cols, colmap))
            grew |= scr.insert(std::move(r));
        stable = grew ? 0 : stable + 1;
        if (int(scr.ech.rank()) == T || (!opt.exhaustive && opt.patience > 0 && stable >= std::size_t(opt.patience)))
            break;
    }
    std::vector<std::vector<S>> out;
    for (auto& b : scr.solve(T).basis) {
        std::vector<S> full(kTerms, S());
        for (int n = 0; n < T; ++n)
            full[use[n]] = b[n];
        out.push_back(std::move(full));
    }
    return out;
}

template <class S>
SolveReport solve_case(CalculusEngine<S>& eng, CaseTag c, const SolveOptions& opt)
{
    SolveReport rep;
    rep.case_name = case_name(c);
    rep.N = eng.N;
    rep.mode = mode_name(eng.fam.F);
    rep.convention = eng.conv.fingerprint();

    RelationCoeffs<S> rel{};
    if (c != CaseTag::Free)
        rel = determine_relation(eng, c);
    rep.relation = {to_string(rel.A), to_string(rel.B), to_string(rel.C), to_string(rel.D)};
    RelationModule<S> K(eng, relation_generators(eng, c, rel), c == CaseTag::Free, opt.slack);

    // kernel directions: fix the latest unknowns they move to zero
    std::vector<int> terms;
    for (auto& n : case_unknowns(c))
        terms.push_back(ansatz_index(n));
    auto kernel = term_kernel(eng, K, opt, terms);
    std::set<std::string> gauge;
    {
        Echelon<S> ech;
        const uint32_t T = uint32_t(terms.size());
        for (auto& kv : kernel) {
            std::map<uint32_t, S> r;
            for (uint32_t t = 0; t < T; ++t)
                r[T - 1 - t] = kv[terms[t]];
            ech.insert(SparseVec<S>::from_map(r));
        }
        for (auto& [p, row] : ech.rows()) {
            gauge.insert(kAnsatzNames[terms[T - 1 - p]]);
            rep.gauge.push_back(kAnsatzNames[terms[T - 1 - p]]);
        }
    }

    Param<S> par;
    par.vals.push_back(std::vector<S>(kTerms, S()));
    for (auto& n : case_unknowns(c)) {
        if (gauge.count(n))
            continue;
        std::vector<S> d(kTerms, S());
        d[ansatz_index(n)] = S(1);
        par.vals.push_back(std::move(d));
        par.names.push_back(n);
    }

    std::vector<StageSpec> stages;
    switch (c) {
    case CaseTag::Free:
        stages = {{"kl4", 4, false}, {"kl5", 4, false}, {"kl1", 2, false}, {"kl2", 2, false},
                  {"kl3", 2, false}, {"kl6", 6, true},  {"kl7", 4, true}};
        break;
    case CaseTag::Red1:
        stages = {{"kl1", 2, false}, {"kl2", 2, false}, {"kl3", 2, false},
                  {"kl4", 4, false}, {"kl5", 4, false}, {"kl8", 4, false}};
        break;
    case CaseTag::Red2:
        stages = {{"kl1", 2, false}, {"kl2", 2, false}, {"kl3", 2, false},
                  {"kl4", 4, false}, {"kl5", 4, false}, {"kl7", 4, true}};
        break;
    }

    Solver<S> sv(eng, K, std::move(par), rel, opt);
    auto snapshot = [&](const std::string& name) {
        auto& p = sv.w.par;
        rep.stage_free[name] = p.names;
        auto& vals = rep.stage_values[name];
        for (int n = 0; n < kTerms; ++n)
            vals[kAnsatzNames[n]] = coeff_text(p, n);
    };
    for (auto& st : stages) {
        auto t0 = std::chrono::steady_clock::now();
        rep.stages.push_back(st.quadratic ? sv.quadratic(st) : sv.linear(st));
        rep.stages.back().seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        snapshot(st.name);
        if (!sv.consistent)
            break;
    }

    rep.consistent = sv.consistent;
    auto pub = published_values(c, eng.N, eng.fam.F);
    if (sv.consistent) {
        // pub - vals[0] in the span of the directions and the kernel?
        auto& p = sv.w.par;
        std::vector<const std::vector<S>*> span;
        for (int k = 1; k <= p.P(); ++k)
            span.push_back(&p.vals[k]);
        for (auto& kv : kernel)
            span.push_back(&kv);
        const uint32_t n_span = uint32_t(span.size());
        Echelon<S> ech;
        for (int n = 0; n < kTerms; ++n) {
            std::map<uint32_t, S> r;
            for (uint32_t k = 0; k < n_span; ++k)
                r[k] = (*span[k])[n];
            r[n_span] = p.vals[0][n] - pub[n];
            ech.insert(SparseVec<S>::from_map(r));
        }
        rep.published_in_solution_set = solve_affine(ech, int(n_span)).consistent;
    }
    auto& p = sv.w.par;
    rep.unresolved_quadratic = sv.unresolved;
    rep.solution_dim = p.P();
    rep.free_parameters = p.names;
    for (int n = 0; n < kTerms; ++n) {
        rep.coefficients[kAnsatzNames[n]] = coeff_text(p, n);
        rep.published_match[kAnsatzNames[n]] = sv.consistent && determined(p, n) && p.vals[0][n] == pub[n];
    }
    return rep;
}

template <class S>
VerifyReport verify_calculus(CalculusEngine<S>& eng, CaseTag c, const std::vector<S>& values,
                             const RelationCoeffs<S>& rel, int quad_stride)
{
    const int N = eng.N;
    VerifyReport rep;
    rep.calculus = case_name(c);
    rep.N = N;
    RelationModule<S> K(eng, relation_generators(eng, c, rel), c == CaseTag::Free);
    Param<S> par;
    par.vals.push_back(values);
    Work<S> w(eng, K, par, rel);

    auto fail_text = [](const Tuple& t, int arity) {
        std::string s = "(";
        for (int a = 0; a < arity; ++a)
            s += std::to_string(t[a]) + (a + 1 < arity ? "," : ")");
        return s;
    };
    auto run = [&](const std::string& name, int arity, int stride, auto&& eval) {
        ConditionResult cr{name};
        std::size_t idx = 0;
        for (auto& t : tuples(N, arity, false)) {
            if (stride > 1 && (idx++ % std::size_t(stride)) != 0)
                continue;
            ++cr.tuples;
            bool bad = false;
            for (auto& cols : eval(t)) {
                std::vector<Form<S>> f;
                f.push_back(cols[0].take());
                if (!K.canonical(f[0]).empty())
                    bad = true;
            }
            if (bad && cr.failures++ == 0)
                cr.first_failure = fail_text(t, arity);
        }
        rep.conditions.push_back(cr);
    };
    using Cols = typename Work<S>::Cols;
    run("kl1", 2, 1, [&](const Tuple& t) { return std::vector<Cols>{w.kl1(t[0], t[1])}; });
    run("kl2", 2, 1, [&](const Tuple& t) { return std::vector<Cols>{w.kl2(t[0], t[1])}; });
    run("kl3", 2, 1, [&](const Tuple& t) { return std::vector<Cols>{w.kl3(t[0], t[1])}; });
    run("kl4", 4, 1, [&](const Tuple& t) { return std::vector<Cols>{w.kl45(3, t[0], t[1], t[2], t[3])}; });
    run("kl5", 4, 1, [&](const Tuple& t) { return std::vector<Cols>{w.kl45(0, t[0], t[1], t[2], t[3])}; });
    run("kl6", 6, quad_stride, [&](const Tuple& t) {
        return std::vector<Cols>{w.kl6(3, t[0], t[1], t[2], t[3], t[4], t[5]),
                                 w.kl6(0, t[0], t[1], t[2], t[3], t[4], t[5])};
    });
    run("kl7", 4, 1, [&](const Tuple& t) { return std::vector<Cols>{w.kl7(t[0], t[1], t[2], t[3])}; });
    if (c != CaseTag::Free)
        run("kl8", 4, 1, [&](const Tuple& t) { return std::vector<Cols>{w.kl8(t[0], t[1], t[2], t[3])}; });
    if (c == CaseTag::Red2)
        run("kl8h", 2, 1, [&](const Tuple& t) { return std::vector<Cols>{w.hx(t[0], t[1])}; });
    return rep;
}

template <class S>
FactorizationReport factorization_check(CalculusEngine<S>& eng)
{
    const int N = eng.N;
    const auto& F = eng.fam.F;
    FactorizationReport rep;
    auto r1 = published_relation(CaseTag::Red1, N, F);
    auto r2 = published_relation(CaseTag::Red2, N, F);
    auto g1 = relation_generators(eng, CaseTag::Red1, r1);
    auto g2 = relation_generators(eng, CaseTag::Red2, r2);

    // K1 + (H) = K2
    auto g1h = g1;
    g1h.push_back(eng.H());
    RelationModule<S> K1h(eng, g1h), K2(eng, g2), K1(eng, g1);
    bool ok = true;
    for (auto& g : g2)
        ok = ok && K1h.contains(g);
    for (auto& g : g1h)
        ok = ok && K2.contains(g);
    rep.h_zero = ok;

    // the quotient maps carry the right actions across
    auto vf = published_values(CaseTag::Free, N, F);
    auto v1 = published_values(CaseTag::Red1, N, F);
    auto v2 = published_values(CaseTag::Red2, N, F);
    ok = K1.contains(g2.front()); // Σ dx_ii
    for (auto& t : tuples(N, 4, false)) {
        auto a = eng.expand(vf, t[0], t[1], t[2], t[3]);
        auto b = eng.expand(v1, t[0], t[1], t[2], t[3]);
        auto d = eng.expand(v2, t[0], t[1], t[2], t[3]);
        ok = ok && K1.contains(form_add(a, b, S(-1))) && K2.contains(form_add(b, d, S(-1)));
        if (!ok)
            break;
    }
    rep.relations = ok;

    // no relations beyond the trace: generic quotient agrees with the trace elimination
    RelationModule<S> Kg(eng, relation_generators(eng, CaseTag::Free, r1)),
        Kt(eng, relation_generators(eng, CaseTag::Free, r1), true);
    ok = true;
    for (auto& t : tuples(N, 4, false)) {
        auto a = eng.expand(vf, t[0], t[1], t[2], t[3]);
        auto x = Kg.canonical(a), y = Kt.canonical(a);
        ok = ok && Kg.contains(form_add(x, y, S(-1))) && !Kg.contains(eng.dx(t[0], t[1]));
        if (!ok)
            break;
    }
    rep.identity = ok;
    return rep;
}

template <class S>
std::map<int, int> link_weight_scan(const RFamily<S>& f, Convention conv)
{
    std::map<int, int> out;
    for (int link : {-2, 0, 2}) {
        conv.link = link;
        CalculusEngine<S> eng(f, conv);
        RelationModule<S> K(eng, relation_generators(eng, CaseTag::Free, RelationCoeffs<S>{}), true);
        Param<S> par;
        par.vals.push_back(std::vector<S>(kTerms, S()));
        for (int n = 0; n < kTerms; ++n) {
            std::vector<S> d(kTerms, S());
            d[n] = S(1);
            par.vals.push_back(std::move(d));
            par.names.push_back(kAnsatzNames[n]);
        }
        SolveOptions opt;
        Solver<S> sv(eng, K, std::move(par), RelationCoeffs<S>{}, opt);
        sv.linear({"kl4", 4, false});
        sv.linear({"kl5", 4, false});
        int ker = int(term_kernel(eng, K, opt).size());
        out[link] = sv.consistent ? sv.w.par.P() - ker : -1;
    }
    return out;
}

#define CPQ_INST(S)                                                                                                 \
    template SolveReport solve_case(CalculusEngine<S>&, CaseTag, const SolveOptions&);                              \
    template VerifyReport verify_calculus(CalculusEngine<S>&, CaseTag, const std::vector<S>&,                       \
                                          const RelationCoeffs<S>&, int);                                            \
    template std::vector<std::vector<S>> term_kernel(CalculusEngine<S>&, RelationModule<S>&, const SolveOptions&,      \
                                                     const std::vector<int>&);                                        \
    template FactorizationReport factorization_check(CalculusEngine<S>&);                                           \
    template std::map<int, int> link_weight_scan(const RFamily<S>&, Convention);

CPQ_INST(Rat)
CPQ_INST(QScalar)

} // namespace cpq

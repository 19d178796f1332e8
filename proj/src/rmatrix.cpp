#include "cpq/rmatrix.hpp"

namespace cpq {

template <class S>
Tensor<S> build_R(int N, const Field<S>& F)
{
    if (N < 2)
        throw std::invalid_argument("N must be at least 2");
    Tensor<S> R = Tensor<S>::cube(N, 4);
    S qq = F.q - F.qpow(-1);
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) {
            if (i == j)
                R.set({i, i, i, i}, F.q);
            else
                R.set({i, j, j, i}, S(1));
            if (i < j)
                R.set({i, j, i, j}, qq);
        }
    return R;
}

template <class S>
static Tensor<S> permuted(const Tensor<S>& T, int N, auto&& f)
{
    Tensor<S> out = Tensor<S>::cube(N, 4);
    T.for_each([&](const Index& x, const S& v) { f(out, x[0], x[1], x[2], x[3], v); });
    return out;
}

template <class S>
RFamily<S> build_family_from(const Tensor<S>& R, const Field<S>& F)
{
    RFamily<S> f{R.shape()[0], F, R};
    int N = f.N;
    Tensor<S> d = Tensor<S>::delta(N);
    f.Rm = R - contract<S>("ik,jl->ijkl", {&d, &d}).scaled(F.q - F.qpow(-1));

    // Rc^{ij}_{kl} = R^{lk}_{ji}
    auto c = [](Tensor<S>& o, int l, int k, int j, int i, const S& v) { o.set({i, j, k, l}, v); };
    // Rl^{ij}_{kl} = q^{2l-2i} R^{jl}_{ik}
    auto l = [&](Tensor<S>& o, int j, int ll, int i, int k, const S& v) { o.set({i, j, k, ll}, v * F.qpow(2 * ll - 2 * i)); };
    // Rr^{ij}_{kl} = R^{ki}_{lj}
    auto r = [](Tensor<S>& o, int k, int i, int ll, int j, const S& v) { o.set({i, j, k, ll}, v); };
    f.Rc = permuted(f.R, N, c);
    f.Rcm = permuted(f.Rm, N, c);
    f.Rl = permuted(f.R, N, l);
    f.Rlm = permuted(f.Rm, N, l);
    f.Rr = permuted(f.R, N, r);
    f.Rrm = permuted(f.Rm, N, r);

    const char* cp = "tuab,saic,cbjk,vl->stuvijkl";
    const char* cpc = "tuab,bvcl,acjk,si->stuvijkl";
    f.RCP = contract<S>(cp, {&f.Rlm, &f.R, &f.Rr, &d});
    f.RCPm = contract<S>(cp, {&f.Rlm, &f.Rm, &f.Rr, &d});
    f.RCPc = contract<S>(cpc, {&f.Rlm, &f.Rc, &f.Rr, &d});
    f.RCPcm = contract<S>(cpc, {&f.Rlm, &f.Rcm, &f.Rr, &d});
    return f;
}

template <class S>
RFamily<S> build_family(int N, const Field<S>& F)
{
    return build_family_from(build_R(N, F), F);
}

template <class S>
QConstants<S> q_constants(int N, const Field<S>& F)
{
    QConstants<S> c;
    c.s = S(0);
    for (int i = 0; i < N; ++i)
        c.s += F.qpow(2 * i);
    c.si = c.s - S(1);
    c.sii = c.si - F.qpow(2);
    c.siii = c.sii - F.qpow(4);
    c.siv = c.siii - F.qpow(6);
    return c;
}

template <class S>
std::vector<IdentityResult> check_identities(const RFamily<S>& f)
{
    int N = f.N;
    std::vector<IdentityResult> out;
    Tensor<S> M = as_matrix(f.R, {0, 1}, {2, 3});
    Tensor<S> Mm = as_matrix(f.Rm, {0, 1}, {2, 3});
    Tensor<S> I = identity_matrix<S>(N * N);
    out.push_back({"R*Rm=I", matmul(M, Mm) == I && matmul(Mm, M) == I});

    Tensor<S> h = matmul(M - I.scaled(f.F.q), M + I.scaled(f.F.qpow(-1)));
    out.push_back({"hecke", h.nnz() == 0});

    Tensor<S> d = Tensor<S>::delta(N);
    Tensor<S> R12 = contract<S>("ijab,kc->ijkabc", {&f.R, &d});
    Tensor<S> R23 = contract<S>("jkbc,ia->ijkabc", {&f.R, &d});
    auto m3 = [&](const Tensor<S>& t) { return as_matrix(t, {0, 1, 2}, {3, 4, 5}); };
    Tensor<S> A = m3(R12), B = m3(R23);
    out.push_back({"braid", matmul(matmul(A, B), A) == matmul(matmul(B, A), B)});
    return out;
}

#define CPQ_INST(S)                                                                          \
    template Tensor<S> build_R(int, const Field<S>&);                                        \
    template RFamily<S> build_family(int, const Field<S>&);                                  \
    template RFamily<S> build_family_from(const Tensor<S>&, const Field<S>&);                \
    template QConstants<S> q_constants(int, const Field<S>&);                                \
    template std::vector<IdentityResult> check_identities(const RFamily<S>&);
CPQ_INST(Rat)
CPQ_INST(QScalar)

} // namespace cpq

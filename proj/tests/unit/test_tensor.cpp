#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cpq/rmatrix.hpp"

using namespace cpq;

// dense loop oracle, deliberately independent of contract()
template <class S>
static S dense_rcp(const RFamily<S>& f, const Tensor<S>& mid, int s, int t, int u, int v, int i, int j, int k, int l)
{
    S acc(0);
    if (v != l)
        return acc;
    int N = f.N;
    for (int a = 1; a <= N; ++a)
        for (int b = 1; b <= N; ++b)
            for (int c = 1; c <= N; ++c)
                acc += f.Rlm.get({t, u, a, b}) * mid.get({s, a, i, c}) * f.Rr.get({c, b, j, k});
    return acc;
}

TEST_CASE("contraction agrees with a dense loop oracle")
{
    for (int N : {2, 3}) {
        Field<Rat> F(Rat(3, 2));
        auto f = build_family(N, F);
        int bad = 0;
        for (int s = 1; s <= N; ++s) for (int t = 1; t <= N; ++t) for (int u = 1; u <= N; ++u)
        for (int v = 1; v <= N; ++v) for (int i = 1; i <= N; ++i) for (int j = 1; j <= N; ++j)
        for (int k = 1; k <= N; ++k) for (int l = 1; l <= N; ++l) {
            if (f.RCP.get({s, t, u, v, i, j, k, l}) != dense_rcp(f, f.R, s, t, u, v, i, j, k, l))
                ++bad;
            if (f.RCPm.get({s, t, u, v, i, j, k, l}) != dense_rcp(f, f.Rm, s, t, u, v, i, j, k, l))
                ++bad;
        }
        CHECK(bad == 0);
    }
    Field<QScalar> S;
    auto f = build_family(2, S);
    CHECK(f.RCP.get({1, 1, 1, 1, 1, 1, 1, 1}) == dense_rcp(f, f.R, 1, 1, 1, 1, 1, 1, 1, 1));
}

TEST_CASE("contract with identity and multilinearity")
{
    Field<QScalar> F;
    auto f = build_family(2, F);
    Tensor<QScalar> I = identity_matrix<QScalar>(4);
    Tensor<QScalar> M = as_matrix(f.R, {0, 1}, {2, 3});
    CHECK(matmul(I, M) == M);
    CHECK(matmul(M, as_matrix(f.Rm, {0, 1}, {2, 3})) == I);

    QScalar a = QScalar::parse("q^2 + 3"), b = QScalar::parse("1/(q - 2)");
    Tensor<QScalar> T1 = f.Rc, T2 = f.Rl;
    auto lhs = contract<QScalar>("ijab,abkl->ijkl", {&(const Tensor<QScalar>&)(T1.scaled(a) + T2.scaled(b)), &f.Rr});
    auto rhs = contract<QScalar>("ijab,abkl->ijkl", {&T1, &f.Rr}).scaled(a) + contract<QScalar>("ijab,abkl->ijkl", {&T2, &f.Rr}).scaled(b);
    CHECK(lhs == rhs);
}

TEST_CASE("contraction shape errors")
{
    Field<Rat> F(Rat(2));
    auto R2 = build_R(2, F);
    auto R3 = build_R(3, F);
    CHECK_THROWS_WITH(contract<Rat>("ijab,abkl->ijkl", {&R2, &R3}), "contraction shape");
    CHECK_THROWS_WITH(contract<Rat>("ijab,abkl->ijk", {&R2, &R2}), "contraction shape");
    CHECK_THROWS_WITH(contract<Rat>("ijaa,abkl->ijkl", {&R2, &R2}), "contraction shape");
}

TEST_CASE("as_matrix ordering and round trip")
{
    Field<QScalar> F;
    auto R = build_R(2, F);
    auto M = as_matrix(R, {0, 1}, {2, 3});
    CHECK(M.shape() == std::vector<int>{4, 4});
    // rows/cols ordered 11,12,21,22
    CHECK(M.get({1, 1}) == QScalar::q());
    CHECK(M.get({2, 3}) == QScalar(1));
    CHECK(M.get({2, 2}) == QScalar::parse("q - q^-1"));
    CHECK(from_matrix(M, 2, {0, 1}, {2, 3}) == R);
    auto d = Tensor<QScalar>::delta(3);
    auto dd = contract<QScalar>("ik,jl->ijkl", {&d, &d});
    CHECK(as_matrix(dd, {0, 1}, {2, 3}) == identity_matrix<QScalar>(9));
    CHECK_THROWS(as_matrix(R, {0, 1}, {1, 3}));
}

TEST_CASE("json round trip")
{
    Field<QScalar> F;
    auto f = build_family(2, F);
    auto j = f.RCPc.to_json();
    CHECK(Tensor<QScalar>::from_json(j) == f.RCPc);
    Field<Rat> G(Rat(3, 2));
    auto g = build_family(3, G);
    CHECK(Tensor<Rat>::from_json(g.Rl.to_json()) == g.Rl);
    j["version"] = 0;
    CHECK_THROWS(Tensor<QScalar>::from_json(j));
}

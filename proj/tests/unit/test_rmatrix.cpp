#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cpq/rmatrix.hpp"

using namespace cpq;

TEST_CASE("R entries at N=2 and N=3")
{
    Field<QScalar> F;
    auto R = build_R(2, F);
    QScalar q = QScalar::q();
    CHECK(R.nnz() == 5);
    CHECK(R.get({1, 1, 1, 1}) == q);
    CHECK(R.get({2, 2, 2, 2}) == q);
    CHECK(R.get({1, 2, 2, 1}) == QScalar(1));
    CHECK(R.get({2, 1, 1, 2}) == QScalar(1));
    CHECK(R.get({1, 2, 1, 2}) == q - QScalar(1) / q);
    auto R3 = build_R(3, F);
    CHECK(R3.get({1, 3, 1, 3}) == q - QScalar(1) / q);
    CHECK(R3.get({3, 1, 3, 1}) == QScalar());
    CHECK_THROWS(build_R(1, F));
}

TEST_CASE("nonzero count matches enumeration")
{
    Field<Rat> F(Rat(2));
    for (int N = 2; N <= 6; ++N) {
        int expect = 0;
        for (int i = 1; i <= N; ++i) for (int j = 1; j <= N; ++j) for (int k = 1; k <= N; ++k) for (int l = 1; l <= N; ++l)
            if ((i == l && k == j && i != k) || (i == j && j == k && k == l) || (i == k && j == l && i < j))
                ++expect;
        CHECK(int(build_R(N, F).nnz()) == expect);
        CHECK(expect == N + N * (N - 1) + N * (N - 1) / 2);
    }
}

TEST_CASE("derived matrices follow their index permutations")
{
    Field<QScalar> F;
    for (int N : {2, 3}) {
        auto f = build_family(N, F);
        int bad = 0;
        for (int i = 1; i <= N; ++i) for (int j = 1; j <= N; ++j) for (int k = 1; k <= N; ++k) for (int l = 1; l <= N; ++l) {
            bad += f.Rc.get({i, j, k, l}) != f.R.get({l, k, j, i});
            bad += f.Rcm.get({i, j, k, l}) != f.Rm.get({l, k, j, i});
            bad += f.Rl.get({i, j, k, l}) != QScalar::qpow(2 * l - 2 * i) * f.R.get({j, l, i, k});
            bad += f.Rlm.get({i, j, k, l}) != QScalar::qpow(2 * l - 2 * i) * f.Rm.get({j, l, i, k});
            bad += f.Rr.get({i, j, k, l}) != f.R.get({k, i, l, j});
            bad += f.Rrm.get({i, j, k, l}) != f.Rm.get({k, i, l, j});
            QScalar dd = (i == k && j == l) ? QScalar::q() - QScalar::qpow(-1) : QScalar();
            bad += f.Rm.get({i, j, k, l}) != f.R.get({i, j, k, l}) - dd;
        }
        CHECK(bad == 0);
    }
    auto f = build_family(2, F);
    CHECK(f.Rc.get({1, 1, 1, 1}) == QScalar::q());
    CHECK(f.Rl.get({1, 2, 1, 2}) == QScalar::qpow(2) * f.R.get({2, 2, 1, 1}));
}

TEST_CASE("RCPm differs from RCP by the middle factor")
{
    Field<QScalar> F;
    auto f = build_family(2, F);
    // rebuild with the substituted factor
    auto d = Tensor<QScalar>::delta(2);
    auto alt = contract<QScalar>("tuab,saic,cbjk,vl->stuvijkl", {&f.Rlm, &f.Rm, &f.Rr, &d});
    CHECK(alt == f.RCPm);
    CHECK(!(f.RCP == f.RCPm));
    // R - Rm = (q - 1/q) I, so the difference is (q - 1/q) times the same contraction with I
    auto dd = contract<QScalar>("ik,jl->ijkl", {&d, &d});
    auto diff = contract<QScalar>("tuab,saic,cbjk,vl->stuvijkl", {&f.Rlm, &dd, &f.Rr, &d});
    CHECK(f.RCP - f.RCPm == diff.scaled(QScalar::q() - QScalar::qpow(-1)));
}

TEST_CASE("identities symbolic N=2..3, sampled N=3")
{
    Field<QScalar> F;
    for (int N : {2, 3})
        for (auto& r : check_identities(build_family(N, F)))
            CHECK_MESSAGE(r.pass, r.identity);
    Field<Rat> G(Rat(3, 2));
    for (auto& r : check_identities(build_family(3, G)))
        CHECK_MESSAGE(r.pass, r.identity);
}

TEST_CASE("perturbed R fails the inverse identity")
{
    Field<Rat> G(Rat(3, 2));
    auto R = build_R(2, G);
    R.set({1, 2, 1, 2}, Rat(1));
    auto rep = check_identities(build_family_from(R, G));
    CHECK(!rep[0].pass);
}

TEST_CASE("q constants")
{
    Field<QScalar> F;
    auto c = q_constants(2, F);
    CHECK(c.s == QScalar::parse("1 + q^2"));
    CHECK(c.si == QScalar::parse("q^2"));
    CHECK(QScalar(1) / c.si == QScalar::qpow(-2));
    CHECK(c.sii == QScalar());
    auto c3 = q_constants(3, Field<Rat>(Rat(2)));
    CHECK(c3.s == 21);
    auto c6 = q_constants(6, F);
    CHECK(c6.siv == QScalar::parse("q^8 + q^10"));
    CHECK(!c6.si.is_zero());
}

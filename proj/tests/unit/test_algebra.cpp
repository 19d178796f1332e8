#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cpq/algebra.hpp"
#include "cpq/repdecomp.hpp"

using namespace cpq;

template <class S>
static long long expected_dim(int N, int k)
{
    long long d = 0;
    auto tower = pi_tower(N, k);
    for (int m = 0; m <= k; ++m)
        d += dim(tower[m], N);
    return d;
}

TEST_CASE("relation count")
{
    Field<Rat> F(Rat(3, 2));
    auto f = build_family(3, F);
    CHECK(build_cp_relations(f, Convention{}, false).size() == 2 * 81);
    CHECK(build_cp_relations(f, Convention{}, true).size() == 2 * 81 + 1);
}

TEST_CASE("quotient dimensions, symbolic")
{
    Field<QScalar> F;
    for (int N : {2, 3}) {
        auto f = build_family(N, F);
        auto rels = build_cp_relations(f, Convention{});
        auto q1 = quotient_basis(N, rels, 1);
        CHECK(q1.dim() == std::size_t(expected_dim<QScalar>(N, 1)));
        auto q2 = quotient_basis(N, rels, 2);
        CHECK(q2.dim() == std::size_t(expected_dim<QScalar>(N, 2)));
    }
    auto f2 = build_family(2, F);
    CHECK(quotient_basis(2, build_cp_relations(f2, Convention{}), 1).dim() == 4);
}

TEST_CASE("quotient dimension N=3 is 36 and N=4 agrees at two samples")
{
    Field<QScalar> F;
    auto f = build_family(3, F);
    CHECK(quotient_basis(3, build_cp_relations(f, Convention{}), 2).dim() == 36);

    std::vector<Word> first;
    for (Rat q0 : {Rat(3, 2), Rat(2)}) {
        Field<Rat> G(q0);
        auto g = build_family(4, G);
        auto qb = quotient_basis(4, build_cp_relations(g, Convention{}), 2);
        CHECK(qb.dim() == 100);
        if (first.empty())
            first = qb.basis;
        else
            CHECK(first == qb.basis);
    }
}

TEST_CASE("normal form kills relations and is a projection")
{
    Field<QScalar> F;
    auto f = build_family(2, F);
    auto rels = build_cp_relations(f, Convention{});
    auto qb = quotient_basis(2, rels, 2);
    for (auto& r : rels)
        CHECK(qb.normal_form(r).empty());
    auto x11 = x_gen<QScalar>(2, 1, 1);
    CHECK(qb.normal_form(x11) == x11);
    for (auto& w : qb.basis) {
        AlgElem<QScalar> e{{w, QScalar(1)}};
        CHECK(qb.normal_form(e) == e);
    }
    AlgElem<QScalar> e = mul(x_gen<QScalar>(2, 2, 2), x_gen<QScalar>(2, 1, 2));
    add_to(e, Word{letter(2, 2, 1)}, QScalar(7));
    auto n = qb.normal_form(e);
    CHECK(qb.normal_form(n) == n);
}

TEST_CASE("product then reduce equals reduce, product, reduce")
{
    Field<Rat> F(Rat(3, 2));
    auto f = build_family(3, F);
    auto qb = quotient_basis(3, build_cp_relations(f, Convention{}), 2);
    for (int a = 0; a < 9; ++a)
        for (int b = 0; b < 9; ++b) {
            AlgElem<Rat> u{{Word{uint8_t(a)}, Rat(1)}, {Word{}, Rat(2)}};
            AlgElem<Rat> v{{Word{uint8_t(b)}, Rat(1)}, {Word{uint8_t((a + b) % 9)}, Rat(-1)}};
            CHECK(qb.normal_form(mul(u, v)) == qb.normal_form(mul(qb.normal_form(u), qb.normal_form(v))));
        }
}

TEST_CASE("implied relation lies in the ideal")
{
    for (int N : {2, 3, 4}) {
        Field<Rat> F(Rat(3, 2));
        auto f = build_family(N, F);
        auto qb = quotient_basis(N, build_cp_relations(f, Convention{}), 2);
        for (int i = 1; i <= N; ++i)
            for (int k = 1; k <= N; ++k) {
                AlgElem<Rat> e;
                for (int j = 1; j <= N; ++j)
                    add_to(e, Word{letter(N, i, j), letter(N, j, k)}, F.qpow(-2 * j));
                add_to(e, Word{letter(N, i, k)}, Rat(-F.qpow(-2)));
                CHECK(qb.in_ideal(e));
            }
    }
}

TEST_CASE("resolver returns exactly one convention")
{
    Field<QScalar> F;
    auto rep = resolve_convention(build_family(2, F));
    CHECK(rep.unique);
    CHECK(rep.resolved == Convention{-2, 0, 2, 2});
    CHECK(rep.implied_scalar == "q^-2");
    Field<Rat> G(Rat(3, 2));
    auto rep3 = resolve_convention(build_family(3, G));
    CHECK(rep3.unique);
    CHECK(rep3.resolved == Convention{-2, 0, 2, 2});
}

TEST_CASE("a weight law violating the implied relation is rejected")
{
    Field<Rat> F(Rat(3, 2));
    auto rep = resolve_convention(build_family(2, F));
    for (auto& [c, m] : rep.matrix)
        if (c.sigmaL == 0)
            CHECK_FALSE(m.at("implied"));
}

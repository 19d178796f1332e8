#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cpq/sphere.hpp"

using namespace cpq;

TEST_CASE("sphere rules are solved, not assumed")
{
    Field<QScalar> F;
    SphereReport rep;
    auto sp = build_sphere(build_family(2, F), Convention{}, &rep);
    CHECK(rep.resolved);
    CHECK(rep.confluent);
    CHECK(rep.zz == "q^-1"); // z_2 z_1 = q^-1 z_1 z_2
    CHECK(rep.ss == "q");
    CHECK(rep.mu_lt == "q^-1");
    CHECK(rep.mu_gt == "q^-1");
    CHECK(rep.nu == "1");
    CHECK(rep.kap_gt == "1 - q^-2");
    CHECK(rep.kap_lt == "0");
}

TEST_CASE("embedding respects relations and products")
{
    for (int N : {2, 3, 4}) {
        Field<Rat> F(Rat(3, 2));
        auto f = build_family(N, F);
        auto sp = build_sphere(f, Convention{});
        CHECK(sp.confluent());
        for (auto& r : build_cp_relations(f, Convention{}))
            CHECK(embed(sp, r).empty());
        // trace maps to the unit
        AlgElem<Rat> t;
        for (int i = 1; i <= N; ++i)
            add_to(t, Word{letter(N, i, i)}, Rat(1));
        CHECK(embed(sp, t) == Poly<Rat>{{0, Rat(1)}});
        for (int a = 0; a < N * N; ++a)
            for (int b = 0; b < N * N; ++b) {
                AlgElem<Rat> wa{{Word{uint8_t(a)}, Rat(1)}}, wb{{Word{uint8_t(b)}, Rat(1)}};
                CHECK(embed(sp, mul(wa, wb)) == sp.mul(embed(sp, wa), embed(sp, wb)));
            }
    }
}

TEST_CASE("unit reduction is compatible with multiplication")
{
    Field<Rat> F(Rat(2));
    auto sp = build_sphere(build_family(3, F), Convention{});
    std::vector<Mono> ms = {xmono(3, 3), xmono(1, 3), xmono(3, 2), zbit(3) + zbit(3) + sbit(3) + sbit(1), xmono(2, 2)};
    for (Mono a : ms)
        for (Mono b : ms) {
            auto direct = sp.mul(a, b);
            auto viaReduced = sp.mul(sp.unit_reduce(Poly<Rat>{{a, Rat(1)}}), sp.unit_reduce(Poly<Rat>{{b, Rat(1)}}));
            CHECK(direct == viaReduced);
            for (auto& [m, c] : direct)
                CHECK((zexp(m, 3) == 0 || sexp(m, 3) == 0));
        }
}

TEST_CASE("quotient dimension matches the reduced monomial count")
{
    // span of images of all CP words of length <= 2 equals 1 + dim π(1) + dim π(2) at N=3
    Field<Rat> F(Rat(3, 2));
    auto sp = build_sphere(build_family(3, F), Convention{});
    std::map<Mono, int> seen;
    for (int a = 0; a < 9; ++a)
        for (int b = 0; b < 9; ++b)
            for (auto& [m, c] : sp.mul(xmono(a / 3 + 1, a % 3 + 1), xmono(b / 3 + 1, b % 3 + 1)))
                seen[m] = 1;
    CHECK(seen.size() == 36);
}

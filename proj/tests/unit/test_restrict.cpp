#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cpq/restrict.hpp"

using namespace cpq;

namespace {

struct Setup {
    Field<Rat> F{Rat(3, 2)};
    RFamily<Rat> fam = build_family(2, F);
    CalculusEngine<Rat> eng{fam, Convention{}};
};

Mono gen(int g, int N) { return g < N ? zbit(g + 1) : sbit(g - N + 1); }

} // namespace

TEST_CASE("family names round trip")
{
    for (auto f : {SphereFamily::G1, SphereFamily::G2, SphereFamily::G3, SphereFamily::G4, SphereFamily::Gt1,
                   SphereFamily::Gt2, SphereFamily::Gt3})
        CHECK(parse_family(family_name(f)) == f);
    CHECK_THROWS(parse_family("G5"));
    CHECK(expected_restriction(SphereFamily::G4) == CaseTag::Red1);
    CHECK(expected_restriction(SphereFamily::Gt2) == CaseTag::Red2);
}

TEST_CASE("d kills the unit relation")
{
    Setup s;
    SphereParams<Rat> p;
    p.alpha = 2;
    p.tau = Rat(1, 3);
    SphereCalculus<Rat> sc(s.eng, SphereFamily::G1, p);
    Poly<Rat> one;
    for (int i = 1; i <= 2; ++i)
        one.push_back({xmono(i, i), Rat(1)});
    // Σ z_i z*_i reduces to 1, so its differential vanishes exactly
    CHECK(sc.d(s.eng.sphere.unit_reduce(one)).empty());
}

TEST_CASE("Leibniz rule on an ordered product")
{
    Setup s;
    SphereParams<Rat> p;
    p.omega = Rat(5, 7);
    p.psi = 3;
    SphereCalculus<Rat> sc(s.eng, SphereFamily::G3, p);
    const int N = 2;
    // d(z1 z*2) = dz1·z*2 + z1 dz*2
    auto lhs = sc.d(Poly<Rat>{{xmono(1, 2), Rat(1)}});
    auto rhs = form_add(sc.rmul_gen(sc.dgen(0), N + 1), sc.lmul(Poly<Rat>{{gen(0, N), Rat(1)}}, sc.dgen(N + 1)));
    CHECK(form_add(lhs, rhs, Rat(-1)).empty());
}

TEST_CASE("relation submodule of the one-relation families")
{
    Setup s;
    SphereParams<Rat> p;
    p.lambda = Rat(7, 3);
    SphereCalculus<Rat> sc(s.eng, SphereFamily::Gt1, p);
    CHECK(sc.in_relations(form_add(sc.Hplus(), sc.Hminus(), p.lambda)));
    CHECK(sc.in_relations(sc.lmul(Poly<Rat>{{xmono(1, 2), Rat(5)}}, form_add(sc.Hplus(), sc.Hminus(), p.lambda))));
    CHECK_FALSE(sc.in_relations(sc.Hplus()));
    SphereCalculus<Rat> free(s.eng, SphereFamily::G2, p);
    CHECK(free.relations().empty());
    CHECK_FALSE(free.in_relations(free.Hplus()));
}

TEST_CASE("only the default H weights give a well defined calculus")
{
    Setup s;
    SphereParams<Rat> p;
    p.alpha = 2;
    p.tau = Rat(1, 3);
    int good = 0;
    for (auto& [w, ok] : scan_hweights(s.eng, SphereFamily::G1, p))
        if (ok) {
            ++good;
            CHECK(w.fingerprint() == HWeights{}.fingerprint());
        }
    CHECK(good == 1);
}

TEST_CASE("restrictions at generic parameters")
{
    Setup s;
    SphereParams<Rat> p;
    p.alpha = Rat(-1, 2);
    p.tau = 4;
    auto r = restrict_sphere_calculus(s.eng, SphereFamily::G1, p);
    CHECK(r.well_defined);
    CHECK(r.h_identity);
    CHECK(r.red1.fits());
    CHECK_FALSE(r.red2.fits());
    CHECK(r.landed == "red1");
    CHECK(r.pass());

    p.lambda = 0;
    auto t = restrict_sphere_calculus(s.eng, SphereFamily::Gt3, p);
    CHECK(t.well_defined);
    CHECK(t.landed == "red1");

    auto g = restrict_sphere_calculus(s.eng, SphereFamily::G2, p);
    CHECK(g.h_vanishes);
    CHECK(g.landed == "red2");
}

TEST_CASE("tau = 0 makes H vanish on the first family")
{
    Setup s;
    SphereParams<Rat> p;
    p.alpha = 1;
    p.tau = 0;
    auto r = restrict_sphere_calculus(s.eng, SphereFamily::G1, p);
    CHECK(r.well_defined);
    CHECK(r.h_vanishes);
    CHECK(r.landed == "red2");
    CHECK_FALSE(r.pass());
}

TEST_CASE("wrong H weights break well-definedness")
{
    Setup s;
    SphereParams<Rat> p;
    p.alpha = 2;
    p.tau = Rat(1, 3);
    auto r = restrict_sphere_calculus(s.eng, SphereFamily::G1, p, HWeights{0, 0});
    CHECK_FALSE(r.well_defined);
    CHECK_FALSE(r.pass());
}

TEST_CASE("symbolic parameters")
{
    Field<QScalar> F;
    auto fam = build_family(2, F);
    CalculusEngine<QScalar> eng(fam, Convention{});
    SphereParams<QScalar> p;
    p.rho = QScalar::q();
    p.tau = QScalar::qpow(-1);
    auto r = restrict_sphere_calculus(eng, SphereFamily::G4, p);
    CHECK(r.landed == "red1");
    CHECK(r.pass());
}

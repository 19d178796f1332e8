#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cpq/linalg.hpp"

using namespace cpq;

static SparseVec<Rat> row(std::map<uint32_t, Rat> m) { return SparseVec<Rat>::from_map(m); }

TEST_CASE("affine solve with one free variable")
{
    // x0 + x1 = 3, x1 - x2 = 1
    Echelon<Rat> E;
    E.insert(row({{0, 1}, {1, 1}, {3, -3}}));
    E.insert(row({{1, 1}, {2, -1}, {3, -1}}));
    CHECK_FALSE(E.insert(row({{0, 1}, {2, 1}, {3, -2}})));
    auto s = solve_affine(E, 3);
    REQUIRE(s.consistent);
    CHECK(s.dim() == 1);
    CHECK(s.free_vars[0] == 2);
    CHECK(s.x0[0] == 2);
    CHECK(s.x0[1] == 1);
    CHECK(s.basis[0][0] == -1);
    CHECK(s.basis[0][1] == 1);
}

TEST_CASE("inconsistent system is reported")
{
    Echelon<Rat> E;
    E.insert(row({{0, 1}, {1, -1}}));
    E.insert(row({{0, 2}, {1, -3}}));
    CHECK_FALSE(solve_affine(E, 1).consistent);
}

TEST_CASE("reduce leaves a canonical remainder")
{
    Echelon<Rat> E;
    E.insert(row({{1, 2}, {4, 1}}));
    E.insert(row({{0, 1}, {1, 1}, {5, 1}}));
    auto a = E.reduce(row({{0, 3}, {4, 1}}));
    E.make_reduced();
    auto b = E.reduce(row({{0, 3}, {4, 1}}));
    CHECK(a.e == b.e);
    for (auto& [c, v] : a.e)
        CHECK_FALSE(E.is_pivot(c));
    CHECK(E.reduce(row({{0, 1}, {1, 1}, {5, 1}})).empty());
}

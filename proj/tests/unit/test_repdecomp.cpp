#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cpq/repdecomp.hpp"

#include <functional>

using namespace cpq;

// Independent oracle: characters as weight multiplicities from semistandard tableaux,
// products of characters, then peeling off dominant weights.
using Weight = std::vector<int>;
using Character = std::map<Weight, long long>;

static Character character(const Frame& f, int N)
{
    Character ch;
    std::vector<std::vector<int>> T;
    for (int r : f.rows)
        T.push_back(std::vector<int>(r, 0));
    std::vector<std::pair<int, int>> cells;
    for (std::size_t r = 0; r < T.size(); ++r)
        for (int c = 0; c < f.rows[r]; ++c)
            cells.push_back({int(r), c});
    std::function<void(std::size_t)> rec = [&](std::size_t n) {
        if (n == cells.size()) {
            Weight w(N, 0);
            for (auto& row : T)
                for (int x : row)
                    ++w[x];
            ++ch[w];
            return;
        }
        auto [r, c] = cells[n];
        int lo = 0;
        if (c > 0)
            lo = std::max(lo, T[r][c - 1]);
        if (r > 0)
            lo = std::max(lo, T[r - 1][c] + 1);
        for (int x = lo; x < N; ++x) {
            T[r][c] = x;
            rec(n + 1);
        }
    };
    rec(0);
    return ch;
}

static Character multiply(const Character& a, const Character& b)
{
    Character out;
    for (auto& [wa, ma] : a)
        for (auto& [wb, mb] : b) {
            Weight w(wa.size());
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] = wa[i] + wb[i];
            out[w] += ma * mb;
        }
    return out;
}

static Decomp peel(Character ch, int N)
{
    Decomp d;
    for (;;) {
        // highest dominant weight in lexicographic order
        const Weight* best = nullptr;
        for (auto& [w, m] : ch)
            if (m != 0 && std::is_sorted(w.rbegin(), w.rend()) && (!best || w > *best))
                best = &w;
        if (!best)
            break;
        Weight hw = *best;
        long long m = ch[hw];
        REQUIRE(m > 0);
        Frame f = Frame::canonical(std::vector<int>(hw.begin(), hw.end()), N);
        d[f] += int(m);
        for (auto& [w, k] : character(Frame{std::vector<int>(hw.begin(), hw.end())}, N))
            ch[w] -= m * k;
        for (auto it = ch.begin(); it != ch.end();)
            it = it->second == 0 ? ch.erase(it) : std::next(it);
    }
    for (auto& [w, m] : ch)
        REQUIRE(m == 0);
    return d;
}

static std::vector<Frame> small_frames(int N, int maxboxes)
{
    std::vector<Frame> out;
    std::function<void(std::vector<int>, int, int)> rec = [&](std::vector<int> rows, int left, int cap) {
        if (!rows.empty() || true)
            if (int(rows.size()) <= N)
                out.push_back(Frame{rows});
        if (left == 0 || int(rows.size()) == N)
            return;
        for (int r = std::min(cap, left); r >= 1; --r) {
            auto nr = rows;
            nr.push_back(r);
            rec(nr, left - r, r);
        }
    };
    rec({}, maxboxes, maxboxes);
    return out;
}

TEST_CASE("Weyl dimensions")
{
    CHECK(dim(Frame::canonical({2, 1, 1, 1}, 5), 5) == 24);
    CHECK(dim(Frame{}, 5) == 1);
    CHECK(dim(Frame::canonical({4, 2, 2, 2}, 5), 5) == 200);
    for (int N : {2, 3, 4})
        for (auto& f : small_frames(N, 4))
            CHECK(dim(f, N) == (long long)character(f, N).size() * 0 + [&] {
                long long t = 0;
                for (auto& [w, m] : character(f, N))
                    t += m;
                return t;
            }());
    CHECK_THROWS(dim(Frame{{1, 1, 1}}, 2));
}

TEST_CASE("LR products agree with the character oracle")
{
    for (int N : {4, 5, 6}) {
        auto fr = small_frames(N, 3);
        for (auto& a : fr)
            for (auto& b : fr) {
                Decomp d = lr_tensor(a, b, N);
                CHECK(total_dim(d, N) == dim(a, N) * dim(b, N));
                if (a.boxes() + b.boxes() <= 4)
                    CHECK(d == peel(multiply(character(a, N), character(b, N)), N));
            }
    }
}

TEST_CASE("adjoint squared at N=5")
{
    auto pi = pi_tower(5, 2);
    Decomp d = lr_tensor(pi[1], pi[1], 5);
    std::multiset<long long> dims;
    for (auto& [f, m] : d)
        for (int i = 0; i < m; ++i)
            dims.insert(dim(f, 5));
    CHECK(dims == std::multiset<long long>{1, 24, 24, 75, 126, 126, 200});
    CHECK(total_dim(d, 5) == 576);
    CHECK(d == peel(multiply(character(pi[1], 5), character(pi[1], 5)), 5));
}

TEST_CASE("trivial and determinant factors")
{
    Frame a = Frame::canonical({3, 1}, 4);
    CHECK(lr_tensor(a, Frame{}, 4) == Decomp{{a, 1}});
    Frame det{{1, 1, 1, 1}};
    CHECK(lr_tensor(det, a, 4) == Decomp{{a, 1}});
    CHECK(Frame::canonical({1, 1, 1, 1}, 4) == Frame{});
}

TEST_CASE("pi tower")
{
    auto pi = pi_tower(5, 3);
    CHECK(pi[0] == Frame{});
    CHECK(pi[1].rows == std::vector<int>{2, 1, 1, 1});
    CHECK(pi[2].rows == std::vector<int>{4, 2, 2, 2});
    CHECK(dim(pi[1], 5) == 24);
    CHECK(dim(pi[2], 5) == 200);
    // recursion consistency: pi(k+1) occurs in pi(k) x (pi(1) + pi(0))
    for (int N : {3, 4, 5})
        for (int k = 0; k < 3; ++k) {
            auto p = pi_tower(N, k + 1);
            Decomp V{{p[0], 1}, {p[1], 1}};
            CHECK(lr_tensor(Decomp{{p[k], 1}}, V, N).count(p[k + 1]) == 1);
        }
    // degree filtration: sum of dim pi(m), m <= k, equals binom(k+N-1, N-1)^2
    for (int N : {2, 3, 4, 5})
        for (int k = 0; k <= 3; ++k) {
            long long t = 0, b = 1;
            for (auto& f : pi_tower(N, k))
                t += dim(f, N);
            for (int i = 1; i <= N - 1; ++i)
                b = b * (k + i) / i;
            CHECK(t == b * b);
        }
}

TEST_CASE("morphism count")
{
    auto mc = morphism_count(5, 5);
    // the oracle finds (2,2,1) in both sources and the k=1 target
    CHECK(mc.per_k_common == std::vector<int>{2, 6, 4, 1, 0, 0});
    CHECK(mc.raw_total == 34);
    CHECK(mc.after_trace == 27);
    for (int N : {4, 6})
        CHECK(morphism_count(N, 5).after_trace == 27);
    CHECK_THROWS_WITH(morphism_count(3, 3), "frame coincidences");
}

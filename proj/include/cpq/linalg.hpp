#pragma once

#include "cpq/coeff.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace cpq {

// Sparse vector with strictly increasing column indices and no stored zeros.
template <class S>
struct SparseVec {
    std::vector<std::pair<uint32_t, S>> e;

    bool empty() const { return e.empty(); }
    std::size_t size() const { return e.size(); }
    uint32_t lead() const { return e.front().first; }

    static SparseVec from_map(const std::map<uint32_t, S>& m)
    {
        SparseVec v;
        v.e.reserve(m.size());
        for (auto& [c, x] : m)
            if (!is_zero(x))
                v.e.push_back({c, x});
        return v;
    }
    S at(uint32_t c) const
    {
        auto it = std::lower_bound(e.begin(), e.end(), c, [](auto& p, uint32_t k) { return p.first < k; });
        return it != e.end() && it->first == c ? it->second : S();
    }
    void scale(const S& f)
    {
        for (auto& p : e)
            p.second *= f;
    }
};

// this += f * other
template <class S>
void axpy(SparseVec<S>& v, const S& f, const SparseVec<S>& w)
{
    std::vector<std::pair<uint32_t, S>> out;
    out.reserve(v.e.size() + w.e.size());
    std::size_t i = 0, j = 0;
    while (i < v.e.size() || j < w.e.size()) {
        if (j == w.e.size() || (i < v.e.size() && v.e[i].first < w.e[j].first))
            out.push_back(std::move(v.e[i++]));
        else if (i == v.e.size() || w.e[j].first < v.e[i].first) {
            out.push_back({w.e[j].first, f * w.e[j].second});
            ++j;
        } else {
            S x = v.e[i].second + f * w.e[j].second;
            if (!is_zero(x))
                out.push_back({v.e[i].first, std::move(x)});
            ++i;
            ++j;
        }
    }
    v.e.swap(out);
}

// Row echelon basis; every stored row has leading coefficient 1 at its pivot.
// The pivot of a row is its smallest column, so low column indices are eliminated first.
template <class S>
class Echelon {
public:
    std::size_t rank() const { return rows_.size(); }
    const std::map<uint32_t, SparseVec<S>>& rows() const { return rows_; }
    bool is_pivot(uint32_t c) const { return rows_.count(c) != 0; }

    SparseVec<S> reduce(SparseVec<S> v) const
    {
        std::size_t pos = 0;
        while (pos < v.e.size()) {
            auto it = rows_.find(v.e[pos].first);
            if (it == rows_.end()) {
                ++pos;
                continue;
            }
            S f = -v.e[pos].second;
            axpy(v, f, it->second);
            // entries before pos are untouched: pivot rows only reach columns >= pivot
        }
        return v;
    }

    // Returns true when v was independent of the stored rows.
    bool insert(SparseVec<S> v)
    {
        v = reduce(std::move(v));
        if (v.empty())
            return false;
        S inv = S(1) / v.e.front().second;
        v.scale(inv);
        uint32_t p = v.lead();
        if (full_) {
            for (auto& [c, r] : rows_) {
                S x = r.at(p);
                if (!is_zero(x))
                    axpy(r, S(-x), v);
            }
        }
        rows_.emplace(p, std::move(v));
        return true;
    }

    // Back substitution: afterwards no stored row has a nonzero entry in another pivot column.
    void make_reduced()
    {
        for (auto it = rows_.rbegin(); it != rows_.rend(); ++it) {
            auto& r = it->second;
            for (std::size_t pos = 1; pos < r.e.size();) {
                auto jt = rows_.find(r.e[pos].first);
                if (jt == rows_.end() || jt->first == it->first) {
                    ++pos;
                    continue;
                }
                S f = -r.e[pos].second;
                axpy(r, f, jt->second);
            }
        }
        full_ = true;
    }
    bool reduced() const { return full_; }

private:
    std::map<uint32_t, SparseVec<S>> rows_;
    bool full_ = false;
};

// Solution set of an affine system sum_c a_c x_c = b, columns 0..n-1 are unknowns and
// column n holds -b (rows encode sum a_c x_c + row[n] = 0).
template <class S>
struct AffineSolution {
    bool consistent = true;
    int n = 0;
    std::vector<uint32_t> free_vars;
    // x = x0 + sum_f basis[f] * t_f
    std::vector<S> x0;
    std::vector<std::vector<S>> basis;
    std::size_t dim() const { return free_vars.size(); }
    bool determined(int var) const
    {
        for (auto& b : basis)
            if (!is_zero(b[var]))
                return false;
        return true;
    }
};

template <class S>
AffineSolution<S> solve_affine(Echelon<S> E, int n)
{
    if (!E.reduced())
        E.make_reduced();
    AffineSolution<S> sol;
    sol.n = n;
    if (E.is_pivot(uint32_t(n))) {
        sol.consistent = false;
        return sol;
    }
    for (int c = 0; c < n; ++c)
        if (!E.is_pivot(uint32_t(c)))
            sol.free_vars.push_back(uint32_t(c));
    sol.x0.assign(n, S());
    for (auto& [p, r] : E.rows())
        sol.x0[p] = -r.at(uint32_t(n));
    for (uint32_t f : sol.free_vars) {
        std::vector<S> b(n, S());
        b[f] = S(1);
        for (auto& [p, r] : E.rows())
            b[p] = -r.at(f);
        sol.basis.push_back(std::move(b));
    }
    return sol;
}

} // namespace cpq

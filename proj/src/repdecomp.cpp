#include "cpq/repdecomp.hpp"

#include <functional>
#include <numeric>
#include <stdexcept>

namespace cpq {

Frame Frame::canonical(std::vector<int> rows, int N)
{
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i] > rows[i - 1])
            throw std::invalid_argument("frame rows must be weakly decreasing");
    while (!rows.empty() && rows.back() == 0)
        rows.pop_back();
    if (int(rows.size()) > N)
        throw std::invalid_argument("frame has more than N rows");
    if (int(rows.size()) == N) {
        int full = rows.back();
        for (auto& r : rows)
            r -= full;
        while (!rows.empty() && rows.back() == 0)
            rows.pop_back();
    }
    return Frame{rows};
}

int Frame::boxes() const { return std::accumulate(rows.begin(), rows.end(), 0); }

std::string Frame::str() const
{
    if (rows.empty())
        return "(0)";
    std::string s = "(";
    for (std::size_t i = 0; i < rows.size(); ++i)
        s += (i ? "," : "") + std::to_string(rows[i]);
    return s + ")";
}

long long dim(const Frame& f, int N)
{
    if (int(f.rows.size()) > N)
        throw std::invalid_argument("frame has more than N rows");
    std::vector<long long> l(N, 0);
    for (std::size_t i = 0; i < f.rows.size(); ++i)
        l[i] = f.rows[i];
    // Weyl: prod_{i<j} (l_i - l_j + j - i) / (j - i), accumulated exactly
    long long num = 1, den = 1;
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
            num *= l[i] - l[j] + j - i;
            den *= j - i;
            long long g = std::gcd(num, den);
            num /= g;
            den /= g;
        }
    return num / den;
}

long long total_dim(const Decomp& d, int N)
{
    long long t = 0;
    for (auto& [f, m] : d)
        t += m * dim(f, N);
    return t;
}

// Littlewood-Richardson: add the boxes of b to a, row by row, as horizontal strips
// whose reverse reading word is a lattice word.
Decomp lr_tensor(const Frame& a, const Frame& b, int N)
{
    const std::vector<int>& mu = b.rows;
    int maxrows = int(a.rows.size() + mu.size());
    std::vector<int> shape(a.rows);
    shape.resize(maxrows, 0);
    // label[r] holds the labels placed in row r, left to right
    std::vector<std::vector<int>> label(maxrows);
    Decomp out;

    auto lattice_ok = [&]() {
        // reading word: rows top to bottom, each row right to left
        std::vector<int> c(mu.size(), 0);
        for (int r = 0; r < maxrows; ++r)
            for (auto it = label[r].rbegin(); it != label[r].rend(); ++it) {
                int x = *it;
                ++c[x];
                if (x > 0 && c[x] > c[x - 1])
                    return false;
            }
        return true;
    };

    std::function<void(std::size_t)> fill_label = [&](std::size_t lab) {
        if (lab == mu.size()) {
            std::vector<int> rows(shape);
            if (int(std::count_if(rows.begin(), rows.end(), [](int x) { return x > 0; })) > N)
                return;
            ++out[Frame::canonical(rows, N)];
            return;
        }
        std::vector<int> before(shape);
        // distribute mu[lab] boxes over rows as a horizontal strip
        std::function<void(int, int)> strip = [&](int r, int left) {
            if (left == 0) {
                if (lattice_ok())
                    fill_label(lab + 1);
                return;
            }
            if (r >= maxrows)
                return;
            // horizontal strip: no new box below another new box
            int cap = r == 0 ? left : std::min(left, before[r - 1] - shape[r]);
            for (int k = cap; k >= 0; --k) {
                shape[r] += k;
                for (int x = 0; x < k; ++x)
                    label[r].push_back(int(lab));
                strip(r + 1, left - k);
                for (int x = 0; x < k; ++x)
                    label[r].pop_back();
                shape[r] -= k;
            }
        };
        strip(0, mu[lab]);
    };
    fill_label(0);
    return out;
}

Decomp lr_tensor(const Decomp& a, const Decomp& b, int N)
{
    Decomp out;
    for (auto& [fa, ma] : a)
        for (auto& [fb, mb] : b)
            for (auto& [f, m] : lr_tensor(fa, fb, N))
                out[f] += ma * mb * m;
    return out;
}

std::vector<Frame> pi_tower(int N, int kmax)
{
    if (N < 2 || kmax < 0)
        throw std::invalid_argument("pi_tower needs N >= 2, kmax >= 0");
    std::vector<Frame> out;
    for (int k = 0; k <= kmax; ++k) {
        std::vector<int> rows{2 * k};
        for (int r = 0; r < N - 2; ++r)
            rows.push_back(k);
        out.push_back(Frame::canonical(rows, N));
    }
    return out;
}

MorphismCount morphism_count(int N, int kmax)
{
    if (N < 4)
        throw std::invalid_argument("frame coincidences");
    auto pi = pi_tower(N, kmax + 1);
    Decomp V{{pi[0], 1}};
    ++V[pi[1]];
    Decomp adj{{pi[1], 1}};
    Decomp source = lr_tensor(V, V, N);
    MorphismCount mc;
    for (int k = 0; k <= kmax; ++k) {
        Decomp pk{{pi[k], 1}};
        Decomp target = lr_tensor(pk, V, N);
        Decomp traceless = lr_tensor(pk, adj, N);
        int common = 0;
        long long raw = 0, tr = 0;
        for (auto& [f, m] : source) {
            auto it = target.find(f);
            if (it != target.end()) {
                ++common;
                raw += (long long)m * it->second;
            }
            auto jt = traceless.find(f);
            if (jt != traceless.end())
                tr += (long long)m * jt->second;
        }
        mc.per_k_common.push_back(common);
        mc.per_k_raw.push_back(raw);
        mc.per_k_after_trace.push_back(tr);
        mc.raw_total += raw;
        mc.after_trace += tr;
    }
    return mc;
}

nlohmann::json decomp_json(const Decomp& d, int N)
{
    nlohmann::json j = nlohmann::json::array();
    for (auto& [f, m] : d)
        j.push_back({{"frame", f.rows}, {"mult", m}, {"dim", dim(f, N)}});
    return j;
}

} // namespace cpq

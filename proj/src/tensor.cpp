#include "cpq/tensor.hpp"

#include <algorithm>
#include <set>

namespace cpq {

ContractionPlan ContractionPlan::parse(const std::string& spec)
{
    ContractionPlan p;
    auto arrow = spec.find("->");
    if (arrow == std::string::npos)
        throw std::invalid_argument("contraction shape");
    std::string lhs = spec.substr(0, arrow);
    p.output = spec.substr(arrow + 2);
    std::size_t b = 0;
    for (;;) {
        auto c = lhs.find(',', b);
        p.inputs.push_back(lhs.substr(b, c == std::string::npos ? std::string::npos : c - b));
        if (c == std::string::npos)
            break;
        b = c + 1;
    }
    return p;
}

std::string ContractionPlan::summed() const
{
    std::set<char> s;
    for (auto& in : inputs)
        for (char c : in)
            if (output.find(c) == std::string::npos)
                s.insert(c);
    return {s.begin(), s.end()};
}

void ContractionPlan::validate(const std::vector<std::vector<int>>& shapes) const
{
    if (shapes.size() != inputs.size())
        throw std::invalid_argument("contraction shape");
    std::map<char, int> count, dim;
    for (std::size_t o = 0; o < inputs.size(); ++o) {
        if (inputs[o].size() != shapes[o].size())
            throw std::invalid_argument("contraction shape");
        for (std::size_t a = 0; a < inputs[o].size(); ++a) {
            char c = inputs[o][a];
            ++count[c];
            auto [it, fresh] = dim.emplace(c, shapes[o][a]);
            if (!fresh && it->second != shapes[o][a])
                throw std::invalid_argument("contraction shape");
        }
    }
    for (char c : output)
        if (count[c] != 1)
            throw std::invalid_argument("contraction shape");
    for (auto& [c, n] : count)
        if (output.find(c) == std::string::npos && n != 2)
            throw std::invalid_argument("contraction shape");
}

namespace {

template <class S>
struct Operand {
    std::string labels;
    Tensor<S> t;
};

// Contract two operands over their common labels, keeping labels listed in keep.
template <class S>
Operand<S> pairwise(const Operand<S>& A, const Operand<S>& B, const std::string& keep_order)
{
    std::vector<int> sharedA, sharedB;
    for (std::size_t a = 0; a < A.labels.size(); ++a) {
        auto b = B.labels.find(A.labels[a]);
        if (b != std::string::npos) {
            sharedA.push_back(int(a));
            sharedB.push_back(int(b));
        }
    }
    Operand<S> R;
    std::vector<std::pair<int, int>> src; // (operand 0/1, axis)
    std::vector<int> shape;
    for (char c : keep_order) {
        auto a = A.labels.find(c);
        if (a != std::string::npos) {
            src.push_back({0, int(a)});
            shape.push_back(A.t.shape()[a]);
        } else {
            auto b = B.labels.find(c);
            src.push_back({1, int(b)});
            shape.push_back(B.t.shape()[b]);
        }
        R.labels.push_back(c);
    }
    if (shape.empty()) {
        shape.push_back(1);
        R.labels = "#";
        src.push_back({-1, 0});
    }
    R.t = Tensor<S>(shape);

    auto shared_key = [](const Tensor<S>& t, uint64_t k, const std::vector<int>& axes) {
        uint64_t h = 0;
        for (int a : axes)
            h = h * 1024 + uint64_t(t.axis(k, a));
        return h;
    };
    std::unordered_map<uint64_t, std::vector<std::pair<uint64_t, const S*>>> byB;
    for (auto& [k, v] : B.t.entries())
        byB[shared_key(B.t, k, sharedB)].push_back({k, &v});

    std::map<uint64_t, S> acc;
    Index ix(src.size());
    for (auto& [ka, va] : A.t.entries()) {
        auto it = byB.find(shared_key(A.t, ka, sharedA));
        if (it == byB.end())
            continue;
        for (auto& [kb, vb] : it->second) {
            for (std::size_t o = 0; o < src.size(); ++o) {
                if (src[o].first == 0)
                    ix[o] = A.t.axis(ka, src[o].second);
                else if (src[o].first == 1)
                    ix[o] = B.t.axis(kb, src[o].second);
                else
                    ix[o] = 1;
            }
            R.t.add(ix, va * *vb);
        }
    }
    return R;
}

} // namespace

template <class S>
Tensor<S> contract(const std::vector<const Tensor<S>*>& ops, const ContractionPlan& plan)
{
    std::vector<std::vector<int>> shapes;
    for (auto* t : ops)
        shapes.push_back(t->shape());
    plan.validate(shapes);

    std::vector<Operand<S>> live;
    for (std::size_t o = 0; o < ops.size(); ++o)
        live.push_back({plan.inputs[o], *ops[o]});

    auto needed_elsewhere = [&](char c, std::size_t x, std::size_t y) {
        if (plan.output.find(c) != std::string::npos)
            return true;
        for (std::size_t o = 0; o < live.size(); ++o)
            if (o != x && o != y && live[o].labels.find(c) != std::string::npos)
                return true;
        return false;
    };

    while (live.size() > 1) {
        // greedy: pick the pair whose estimated result is smallest
        std::size_t bx = 0, by = 1;
        double best = -1;
        for (std::size_t x = 0; x < live.size(); ++x)
            for (std::size_t y = x + 1; y < live.size(); ++y) {
                double est = double(live[x].t.nnz()) * double(live[y].t.nnz());
                for (char c : live[x].labels)
                    if (live[y].labels.find(c) != std::string::npos)
                        est /= live[x].t.shape()[live[x].labels.find(c)];
                if (best < 0 || est < best) {
                    best = est;
                    bx = x;
                    by = y;
                }
            }
        std::string keep;
        for (char c : live[bx].labels + live[by].labels)
            if (c != '#' && keep.find(c) == std::string::npos && needed_elsewhere(c, bx, by))
                keep.push_back(c);
        Operand<S> r = pairwise(live[bx], live[by], keep);
        live.erase(live.begin() + by);
        live.erase(live.begin() + bx);
        live.push_back(std::move(r));
    }

    Operand<S>& last = live.front();
    // a lone operand may still carry summed labels (traces) or need reordering
    std::vector<int> out_shape;
    for (char c : plan.output) {
        auto a = last.labels.find(c);
        out_shape.push_back(last.t.shape()[a]);
    }
    if (out_shape.empty())
        out_shape.push_back(1);
    Tensor<S> out(out_shape);
    for (auto& [k, v] : last.t.entries()) {
        bool ok = true;
        // repeated labels inside the lone operand must agree
        for (std::size_t a = 0; a < last.labels.size() && ok; ++a)
            for (std::size_t b = a + 1; b < last.labels.size(); ++b)
                if (last.labels[a] == last.labels[b] && last.t.axis(k, int(a)) != last.t.axis(k, int(b)))
                    ok = false;
        if (!ok)
            continue;
        Index ix;
        for (char c : plan.output)
            ix.push_back(last.t.axis(k, int(last.labels.find(c))));
        if (ix.empty())
            ix.push_back(1);
        out.add(ix, v);
    }
    return out;
}

template <class S>
Tensor<S> as_matrix(const Tensor<S>& t, const std::vector<int>& row_axes, const std::vector<int>& col_axes)
{
    std::vector<int> all(row_axes);
    all.insert(all.end(), col_axes.begin(), col_axes.end());
    std::vector<int> sorted(all);
    std::sort(sorted.begin(), sorted.end());
    for (int a = 0; a < t.rank(); ++a)
        if (int(sorted.size()) != t.rank() || sorted[a] != a)
            throw std::invalid_argument("axis partition invalid");
    auto flat_dim = [&](const std::vector<int>& axes) {
        int d = 1;
        for (int a : axes)
            d *= t.shape()[a];
        return d;
    };
    Tensor<S> m({flat_dim(row_axes), flat_dim(col_axes)});
    auto flat = [&](const Index& ix, const std::vector<int>& axes) {
        int r = 0;
        for (int a : axes)
            r = r * t.shape()[a] + (ix[a] - 1);
        return r + 1;
    };
    t.for_each([&](const Index& ix, const S& v) { m.set({flat(ix, row_axes), flat(ix, col_axes)}, v); });
    return m;
}

template <class S>
Tensor<S> from_matrix(const Tensor<S>& m, int N, const std::vector<int>& row_axes, const std::vector<int>& col_axes)
{
    int rank = int(row_axes.size() + col_axes.size());
    Tensor<S> t = Tensor<S>::cube(N, rank);
    auto unflat = [&](int v, const std::vector<int>& axes, Index& ix) {
        v -= 1;
        for (std::size_t p = axes.size(); p-- > 0;) {
            ix[axes[p]] = v % N + 1;
            v /= N;
        }
    };
    m.for_each([&](const Index& rc, const S& v) {
        Index ix(rank);
        unflat(rc[0], row_axes, ix);
        unflat(rc[1], col_axes, ix);
        t.set(ix, v);
    });
    return t;
}

template Tensor<Rat> contract(const std::vector<const Tensor<Rat>*>&, const ContractionPlan&);
template Tensor<QScalar> contract(const std::vector<const Tensor<QScalar>*>&, const ContractionPlan&);
template Tensor<Rat> as_matrix(const Tensor<Rat>&, const std::vector<int>&, const std::vector<int>&);
template Tensor<QScalar> as_matrix(const Tensor<QScalar>&, const std::vector<int>&, const std::vector<int>&);
template Tensor<Rat> from_matrix(const Tensor<Rat>&, int, const std::vector<int>&, const std::vector<int>&);
template Tensor<QScalar> from_matrix(const Tensor<QScalar>&, int, const std::vector<int>&, const std::vector<int>&);

} // namespace cpq

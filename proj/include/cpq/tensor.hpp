#pragma once

#include "cpq/coeff.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace cpq {

template <class S>
S parse_scalar(const std::string& s);
template <>
inline Rat parse_scalar<Rat>(const std::string& s) { return parse_rat(s); }
template <>
inline QScalar parse_scalar<QScalar>(const std::string& s) { return QScalar::parse(s); }

using Index = std::vector<int>; // 1-based multi-index

// Sparse tensor. Entries are keyed by a packed multi-index whose numeric order is
// the lexicographic order of the index tuples.
template <class S>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) { layout(); }
    static Tensor cube(int N, int rank) { return Tensor(std::vector<int>(rank, N)); }
    static Tensor delta(int N)
    {
        Tensor t = cube(N, 2);
        for (int i = 1; i <= N; ++i)
            t.set({i, i}, S(1));
        return t;
    }

    int rank() const { return int(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    std::size_t nnz() const { return e_.size(); }
    const std::map<uint64_t, S>& entries() const { return e_; }

    uint64_t pack(const Index& ix) const
    {
        if (int(ix.size()) != rank())
            throw std::invalid_argument("tensor index rank");
        uint64_t k = 0;
        for (int a = 0; a < rank(); ++a) {
            if (ix[a] < 1 || ix[a] > shape_[a])
                throw std::out_of_range("tensor index out of bounds");
            k = (k << bits_) | uint64_t(ix[a]);
        }
        return k;
    }
    Index unpack(uint64_t k) const
    {
        Index ix(rank());
        uint64_t m = (uint64_t(1) << bits_) - 1;
        for (int a = rank(); a-- > 0;) {
            ix[a] = int(k & m);
            k >>= bits_;
        }
        return ix;
    }
    int axis(uint64_t k, int a) const { return int((k >> (bits_ * (rank() - 1 - a))) & ((uint64_t(1) << bits_) - 1)); }

    S get(const Index& ix) const
    {
        auto it = e_.find(pack(ix));
        return it == e_.end() ? S() : it->second;
    }
    void set(const Index& ix, const S& v)
    {
        uint64_t k = pack(ix);
        if (is_zero(v))
            e_.erase(k);
        else
            e_[k] = v;
    }
    void add(const Index& ix, const S& v) { add_packed(pack(ix), v); }
    void add_packed(uint64_t k, const S& v)
    {
        if (is_zero(v))
            return;
        auto [it, fresh] = e_.emplace(k, v);
        if (!fresh) {
            it->second += v;
            if (is_zero(it->second))
                e_.erase(it);
        }
    }

    Tensor scaled(const S& s) const
    {
        Tensor r(shape_);
        if (is_zero(s))
            return r;
        for (auto& [k, v] : e_)
            r.e_.emplace_hint(r.e_.end(), k, v * s);
        return r;
    }
    friend Tensor operator+(const Tensor& a, const Tensor& b)
    {
        a.same_shape(b);
        Tensor r = a;
        for (auto& [k, v] : b.e_)
            r.add_packed(k, v);
        return r;
    }
    friend Tensor operator-(const Tensor& a, const Tensor& b) { return a + b.scaled(S(-1)); }
    friend bool operator==(const Tensor& a, const Tensor& b) { return a.shape_ == b.shape_ && a.e_ == b.e_; }

    template <class F>
    void for_each(F&& f) const
    {
        for (auto& [k, v] : e_)
            f(unpack(k), v);
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["format"] = "cpq-tensor";
        j["version"] = 1;
        j["shape"] = shape_;
        auto& arr = j["entries"] = nlohmann::json::array();
        for (auto& [k, v] : e_)
            arr.push_back({unpack(k), to_string(v)});
        return j;
    }
    static Tensor from_json(const nlohmann::json& j)
    {
        if (j.value("format", "") != "cpq-tensor" || j.value("version", 0) != 1)
            throw std::runtime_error("tensor envelope version mismatch");
        Tensor t(j.at("shape").get<std::vector<int>>());
        for (auto& e : j.at("entries"))
            t.set(e.at(0).get<Index>(), parse_scalar<S>(e.at(1).get<std::string>()));
        return t;
    }

private:
    std::vector<int> shape_;
    int bits_ = 1;
    std::map<uint64_t, S> e_;

    void layout()
    {
        int m = 1;
        for (int d : shape_) {
            if (d < 1)
                throw std::invalid_argument("tensor axis dimension");
            m = std::max(m, d);
        }
        bits_ = 1;
        while ((1 << bits_) <= m)
            ++bits_;
        if (bits_ * rank() > 64)
            throw std::invalid_argument("tensor too large to index");
    }
    void same_shape(const Tensor& b) const
    {
        if (shape_ != b.shape_)
            throw std::invalid_argument("contraction shape");
    }
};

// Einstein-summation plan: one label string per operand plus the output labels.
// Every label not in the output is summed and must occur exactly twice.
struct ContractionPlan {
    std::vector<std::string> inputs;
    std::string output;

    static ContractionPlan parse(const std::string& spec); // "ab,bc->ac"
    std::string summed() const;
    void validate(const std::vector<std::vector<int>>& shapes) const;
};

template <class S>
Tensor<S> contract(const std::vector<const Tensor<S>*>& ops, const ContractionPlan& plan);

template <class S>
Tensor<S> contract(const std::string& spec, std::initializer_list<const Tensor<S>*> ops)
{
    return contract<S>(std::vector<const Tensor<S>*>(ops), ContractionPlan::parse(spec));
}

template <class S>
Tensor<S> as_matrix(const Tensor<S>& t, const std::vector<int>& row_axes, const std::vector<int>& col_axes);

// Inverse of as_matrix for a cube tensor of the given rank.
template <class S>
Tensor<S> from_matrix(const Tensor<S>& m, int N, const std::vector<int>& row_axes, const std::vector<int>& col_axes);

template <class S>
Tensor<S> identity_matrix(int dim)
{
    Tensor<S> t({dim, dim});
    for (int i = 1; i <= dim; ++i)
        t.set({i, i}, S(1));
    return t;
}

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b)
{
    return contract<S>("ab,bc->ac", {&a, &b});
}

} // namespace cpq

#pragma once

#include "json.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cpq {

// Young frame for SU(N): weakly decreasing rows, full columns of height N removed.
struct Frame {
    std::vector<int> rows;

    static Frame canonical(std::vector<int> rows, int N);
    int boxes() const;
    std::string str() const;
    auto operator<=>(const Frame&) const = default;
};

using Decomp = std::map<Frame, int>;

long long dim(const Frame& f, int N);
long long total_dim(const Decomp& d, int N);
Decomp lr_tensor(const Frame& a, const Frame& b, int N);
Decomp lr_tensor(const Decomp& a, const Decomp& b, int N);
std::vector<Frame> pi_tower(int N, int kmax);

struct MorphismCount {
    std::vector<int> per_k_common;  // distinct irreps shared with the source, per k
    long long raw_total = 0;        // sum of multiplicity products, dx spanning all of V(0)+V(1)
    long long after_trace = 0;      // same, with the targets built on traceless dx
    std::vector<long long> per_k_raw, per_k_after_trace;
};

MorphismCount morphism_count(int N, int kmax);

nlohmann::json decomp_json(const Decomp& d, int N);

} // namespace cpq

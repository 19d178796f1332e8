#pragma once

#include "cpq/tensor.hpp"

#include <string>
#include <vector>

namespace cpq {

// T^{ij}_{kl} is stored at index (i,j,k,l); eight-index tensors as (s,t,u,v,i,j,k,l).
template <class S>
struct RFamily {
    int N = 0;
    Field<S> F;
    Tensor<S> R, Rm, Rc, Rl, Rr, Rcm, Rlm, Rrm;
    Tensor<S> RCP, RCPm, RCPc, RCPcm;
};

template <class S>
Tensor<S> build_R(int N, const Field<S>& F);

// Rm is always derived as R - (q - 1/q) I, so a perturbed R yields a perturbed family.
template <class S>
RFamily<S> build_family(int N, const Field<S>& F);
template <class S>
RFamily<S> build_family_from(const Tensor<S>& R, const Field<S>& F);

template <class S>
struct QConstants {
    S s, si, sii, siii, siv; // s+, si+, ..., siv+
};
template <class S>
QConstants<S> q_constants(int N, const Field<S>& F);

struct IdentityResult {
    std::string identity;
    bool pass = false;
};

template <class S>
std::vector<IdentityResult> check_identities(const RFamily<S>& f);

} // namespace cpq

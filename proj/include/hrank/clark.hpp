#pragma once

#include <cstddef>
#include <vector>

#include "hrank/herglotz.hpp"
#include "hrank/linalg.hpp"

namespace hrank {

// f = (1 - theta) * sum_n a_n mu_n / (z - t_n), an element of the model space
// of the inner function attached to sys.
struct ModelVector {
    ClarkSystem sys;
    std::vector<CertComplex> a;
};

CertComplex synthesize(const ModelVector& v, const CertComplex& z);

// sqrt(4 pi sum |a_n|^2 mu_n).
CertReal norm(const ModelVector& v);

// Coefficients a_n = c_n / (lambda - t_n) of the eigenvector phi/(z - lambda).
// Throws NotAZero when |H(lambda)| certainly exceeds rel_tol times the scale
// 1 + sum |c_n mu_n / (t_n - lambda)|.
ModelVector eigvec_coeffs(const ClarkSystem& sys, const CertReal& lambda, double rel_tol = 0x1p-20);

struct GapReport {
    std::size_t j = 0;
    std::size_t k = 0;
    CertReal gap;
    // |f_j(t_m) - f_k(t_m)|^2 mu_m, so gap^2 = pi * sum.
    std::vector<CertReal> contributions;
};

// Gap between eigenvectors j and k; lambdas lists the zeros in creation order.
GapReport pairwise_gap(const ClarkSystem& sys, const std::vector<CertReal>& lambdas,
                       std::size_t j, std::size_t k);

// Real matrix M_mj = 2 sqrt(pi mu_m) c_m / (lambda_j - t_m). It differs from
// the Clark coordinates sqrt(pi mu_m) f_j(t_m) by the unimodular factor -i, so
// ||sum_j alpha_j f_j|| = ||M alpha||_2.
RMatrix frame_matrix(const ClarkSystem& sys, const std::vector<CertReal>& lambdas);

struct BasisConstant {
    CertReal A;          // max(previous, 1, sqrt(N)/sigma_lower)
    CertReal sigma_min;  // certified lower bound of sigma_min(M)
    VerifiedInverse inverse;
};

BasisConstant basis_constant_detail(const ClarkSystem& sys, const std::vector<CertReal>& lambdas,
                                    const CertReal& previous);
CertReal basis_constant(const ClarkSystem& sys, const std::vector<CertReal>& lambdas,
                        const CertReal& previous);

// Upper bound of ||(theta_new - theta_prev)/(z - t_n)||_2 where sys_new is
// sys_prev plus one appended atom.
CertReal perturbation_norm_bound(const ClarkSystem& sys_prev, const ClarkSystem& sys_new, std::size_t n);

struct StageDifference {
    CertReal g1;
    CertReal g2;
    CertReal h;
    CertReal total;
};

// Bound of ||f_j^{N-1} - f_j^N|| via the split into g1 (same inner function,
// coefficient change), g2 (inner function change) and h (new atom term).
// pnb[n] must bound perturbation_norm_bound(sys_prev, sys_new, n).
StageDifference stage_difference_bound(const ClarkSystem& sys_prev, const ClarkSystem& sys_new,
                                       const CertReal& lambda_prev, const CertReal& lambda_new,
                                       const std::vector<CertReal>& pnb);
StageDifference stage_difference_bound(const ClarkSystem& sys_prev, const ClarkSystem& sys_new,
                                       const CertReal& lambda_prev, const CertReal& lambda_new);

// Sum_n c_n mu_n / |lambda - t_n| * pnb[n]: the g2 part alone.
CertReal g2_bound(const ClarkSystem& sys_prev, const CertReal& lambda_prev, const std::vector<CertReal>& pnb);

}  // namespace hrank

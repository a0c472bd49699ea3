#pragma once

#include <string>
#include <vector>

#include "hrank/clark.hpp"
#include "hrank/herglotz.hpp"
#include "hrank/linalg.hpp"

namespace hrank {

// (t - i)/(t + i).
CertComplex cayley_point(const CertReal& t);
CertComplex cayley_point(const CertComplex& z);

// Disk Clark mass sigma = 2 mu / (t^2 + 1), so ||k_tau||^2 = 2/sigma.
CertReal disk_clark_mass(const CertReal& t, const CertReal& mu);

enum class VectorChoice { Phi, OneMinusTheta };
enum class Assembly { Analytic, Quadrature };

struct QuadratureOptions {
    int initial_nodes = 64;
    int max_nodes = 1 << 16;
    // Doubling stops once successive matrices agree to this absolute width.
    double tolerance = 1e-30;
};

// Matrix of T (Phi) or of the Clark unitary U (OneMinusTheta) in the
// orthonormal kernel basis e_n = k_{tau_n} sqrt(sigma_n / 2).
// Analytic: T = diag(tau) + (i/kappa) b a^T with kappa = H(-i),
// b_m = c_m sqrt(sigma_m), a_n = tau_n sqrt(sigma_n).
// Quadrature: gamma_f = <w f, theta>/<phi, theta> on uniform circle nodes.
CMatrix build_operator(const ClarkSystem& sys, VectorChoice choice, Assembly assembly = Assembly::Analytic,
                       const QuadratureOptions& opts = {});

// Coordinates in the e_n basis of the disk image F(w) = sqrt(pi) f(z(w)) 2i/(1 - w)
// of f = (1 - theta) sum a_n mu_n/(z - t_n). With 2i/(1 - w) = z + i the inverse
// is f(z) = pi^{-1/2} F(w)/(z + i); the map is unitary from Lebesgue measure on
// the line onto normalized arc length on the circle.
std::vector<CertComplex> transport_coordinates(const ModelVector& v);
// F(w) for w in the open disk.
CertComplex transport_eval(const ModelVector& v, const CertComplex& w);

// e_n(w) for w on the circle given through the boundary parameter z = -cot(alpha/2),
// or any z in the closed upper half-plane.
CertComplex basis_eval(const ClarkSystem& sys, std::size_t n, const CertComplex& z);

struct DiskOperatorBundle {
    Bits precision = 0;
    ClarkSystem sys;
    std::vector<CertReal> lambdas;
    std::vector<CertComplex> tau;
    std::vector<CertReal> sigma;
    std::vector<CertComplex> Lambda;
    CertComplex kappa;   // H(-i)
    CertComplex theta0;  // theta in the disk at 0
    CMatrix T;
    CMatrix U;
    // Column j: transported eigenvector f_j.
    std::vector<std::vector<CertComplex>> eigvecs;
};

DiskOperatorBundle build_bundle(const ClarkSystem& sys, const std::vector<CertReal>& lambdas, Bits bits,
                                Assembly assembly = Assembly::Analytic);

struct SpectralReport {
    std::vector<CertComplex> eig_T;  // point values from shifted QR
    std::vector<int> match;          // eig_T[k] is matched to Lambda[match[k]]
    double max_match_error = 0;      // max |eig_T[k] - Lambda[match[k]]|
    double max_unimodular_error = 0; // max ||eig_T[k]| - 1|
    std::vector<CertReal> residuals; // ||T v_j - Lambda_j v_j|| / ||v_j||, upper bounds
    CertReal max_residual;
    CertReal lambda_unimodular;      // upper bound of max ||Lambda_j|^2 - 1|
    CertReal min_lambda_gap;         // lower bound of min |Lambda_j - Lambda_k|
    CertReal unitarity;              // upper bound of max |(U*U - I)_{jk}|
    CertReal sigma1;                 // lower bound of sigma_1(T - U)
    CertReal sigma2;                 // upper bound of sigma_2(T - U)
    std::vector<CertReal> singular;  // point singular values of T - U
    bool distinct = false;
};

SpectralReport spectral_check(const DiskOperatorBundle& b);

struct ChecklistReport {
    bool unimodular_distinct = false;  // (i)
    CertReal frame_sigma_min;          // (ii) lower bound, > 0 means rank N
    bool frame_full_rank = false;
    struct Partner {
        int j = 0;  // one-based
        int k = 0;  // one-based best partner, 0 if none
        CertReal gap;
    };
    std::vector<Partner> partners;  // (iii), empty when N = 1
    bool gaps_vacuous = true;
    std::string note;
};

ChecklistReport grivaux_checklist(const DiskOperatorBundle& b, const SpectralReport& s);

}  // namespace hrank

#pragma once

#include <vector>

#include "hrank/construct.hpp"

namespace hrank {

// Bound on ||f_j^from - f_j|| for the limit vector f_j (one-based j <= from):
// the certified per-stage (st) bounds of stages from+1..N_max plus the
// geometric tail 2^{-N_max-1}/A_{N_max} for all later stages.
CertReal tail_bound(const std::vector<StageRecord>& records, int j, int from_stage);

struct LimitGapCertificate {
    int j = 0;
    int k = 0;      // partner index, equal to the stage used
    int stage = 0;
    CertReal st1_gap;  // ||f_j^N - f_N^N|| at the stage used
    CertReal tail_j;   // tail_bound(j, N)
    CertReal tail_k;   // tail_bound(N, N)
    CertReal bound;    // upper bound on ||f_j - f_k||
    CertReal epsilon;
    Verdict verdict = Verdict::Undecidable;

    bool pass() const { return verdict == Verdict::Pass; }
};

// Earliest committed stage N with l(N) = j and 2^{-N} < epsilon whose bound
// certifies below epsilon; if none certifies, the earliest qualifying stage.
// Throws NeedMoreStages when no committed stage qualifies.
LimitGapCertificate limit_gap(const std::vector<StageRecord>& records, const Schedule& schedule, int j,
                              const CertReal& epsilon);

struct CompletenessCertificate {
    int N = 0;
    int m = 0;  // one-based atom index
    std::vector<CertReal> alpha;  // g_N = sum alpha_j f_j^N
    CertReal truncation;          // bound on ||g - g_N||
    CertReal residual;            // bound on ||g - sum alpha_j f_j||
    CertReal threshold;           // 2^{-N+1} ||g_N||
    Verdict verdict = Verdict::Undecidable;

    bool pass() const { return verdict == Verdict::Pass; }
};

// g is the unit Clark frame vector with coordinate 1/sqrt(4 pi mu_m) at atom m,
// so ||g_N|| = 1 and the frame equations have right-hand side e_m.
CompletenessCertificate completeness_certificate(const std::vector<StageRecord>& records, const ClarkSystem& sys,
                                                 int N, int m);

struct StructuralReport {
    // mass_sum: sum mu < 1; theta_i_nonzero: |theta(i)| > 0; t_min: 0 < t_min;
    // t_max: t_max < 1; clark_vector: |theta(i) - 1| > 0.
    std::vector<Certificate> checks;
    bool pass = false;
};

StructuralReport structural_checks(const ClarkSystem& sys);

}  // namespace hrank

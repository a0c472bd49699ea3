#include "hrank/certify.hpp"

#include <algorithm>
#include <string>

namespace hrank {

namespace {

Bits max_bits(const std::vector<StageRecord>& records) {
    Bits p = 64;
    for (const auto& r : records) p = std::max(p, r.precision_bits);
    return p;
}

const Certificate& need(const StageRecord& r, const std::string& name) {
    const Certificate* c = r.find(name);
    if (!c) throw IndexError("stage " + std::to_string(r.N) + " has no " + name + " certificate");
    return *c;
}

}  // namespace

CertReal tail_bound(const std::vector<StageRecord>& records, int j, int from_stage) {
    const int n_max = static_cast<int>(records.size());
    if (n_max == 0) throw IndexError("no committed stages");
    if (j < 1 || from_stage < j || from_stage > n_max)
        throw IndexError("tail needs 1 <= j <= from_stage <= committed stages");
    const Bits p = max_bits(records);
    // The aggregated (st) value at stage k is the largest over all j < k.
    CertReal sum(0, p);
    for (int k = from_stage + 1; k <= n_max; ++k) sum += need(records[k - 1], "st").lhs_upper;
    // Later stages: sum_{k > n_max} 2^{-k-2}/A_{k-1} <= 2^{-n_max-1}/A_{n_max}.
    sum += CertReal::pow2(-n_max - 1, p) / records.back().basis_const;
    return upper(sum);
}

LimitGapCertificate limit_gap(const std::vector<StageRecord>& records, const Schedule& schedule, int j,
                              const CertReal& epsilon) {
    if (j < 1) throw IndexError("j must be at least 1");
    if (epsilon.sign() <= 0) throw DomainError("epsilon must be positive");
    const int n_max = static_cast<int>(records.size());
    const Bits p = std::max(max_bits(records), epsilon.prec());

    auto qualifies = [&](int N) {
        int l = 0;
        try {
            l = schedule.target(N);
        } catch (const IndexError&) {
            return false;
        }
        return l == j && certainly_less(CertReal::pow2(-N, p), epsilon);
    };

    std::vector<LimitGapCertificate> found;
    for (int N = 2; N <= n_max; ++N) {
        if (!qualifies(N)) continue;
        LimitGapCertificate g;
        g.j = j;
        g.k = N;
        g.stage = N;
        g.epsilon = epsilon;
        g.st1_gap = need(records[N - 1], "st1").lhs_upper;
        g.tail_j = tail_bound(records, j, N);
        g.tail_k = tail_bound(records, N, N);
        g.bound = upper(g.st1_gap + g.tail_j + g.tail_k);
        g.verdict = make_certificate("limit_gap", g.bound, epsilon, p).verdict;
        if (g.pass()) return g;
        found.push_back(std::move(g));
    }
    if (!found.empty()) return found.front();

    // Report the first stage that would qualify.
    const int limit = n_max + 4096;
    for (int N = std::max(2, n_max + 1); N <= limit; ++N) {
        if (schedule.rule() == Schedule::Rule::Custom && N - 2 >= static_cast<int>(schedule.targets().size())) break;
        if (qualifies(N))
            throw NeedMoreStages("j = " + std::to_string(j) + " needs at least " + std::to_string(N) + " stages",
                                 N);
    }
    throw NeedMoreStages("schedule never returns to j = " + std::to_string(j) + " with 2^-N < epsilon", 0);
}

CompletenessCertificate completeness_certificate(const std::vector<StageRecord>& records, const ClarkSystem& sys,
                                                 int N, int m) {
    const int n_max = static_cast<int>(records.size());
    if (N < 1 || N > n_max || static_cast<int>(sys.size()) < N) throw IndexError("stage not committed");
    if (m < 1 || m > N) throw IndexError("atom index out of range");
    const StageRecord& rec = records[N - 1];
    const Bits p = max_bits(records);

    std::vector<Atom> first(sys.atoms().begin(), sys.atoms().begin() + N);
    const ClarkSystem sN(std::move(first));
    const VerifiedInverse inv = verified_inverse(frame_matrix(sN, rec.lambdas));
    std::vector<CertReal> rhs(static_cast<std::size_t>(N), CertReal(0, p));
    rhs[static_cast<std::size_t>(m - 1)] = CertReal(1, p);

    CompletenessCertificate out;
    out.N = N;
    out.m = m;
    out.alpha = verified_solve(inv, rhs);

    // ||g - g_N|| <= d mu_m (sum_{k > N} sm_k + 4^{-n_max}/(3 A_{n_max})), d = 1/sqrt(4 pi mu_m).
    const CertReal& mu = sys[static_cast<std::size_t>(m - 1)].mu;
    const CertReal d = 1 / sqrt_certified(mul_2si(CertReal::pi(p), 2) * mu);
    CertReal drift(0, p);
    for (int k = N + 1; k <= n_max; ++k) drift += need(records[k - 1], "sm").lhs_upper;
    drift += CertReal::pow2(-2 * n_max, p) / (records.back().basis_const * 3L);
    out.truncation = upper(d * mu * drift);

    CertReal res = out.truncation;
    for (int jj = 1; jj <= N; ++jj) res += abs(out.alpha[static_cast<std::size_t>(jj - 1)]) * tail_bound(records, jj, N);
    out.residual = upper(res);
    out.threshold = CertReal::pow2(-N + 1, p);
    out.verdict = make_certificate("completeness", out.residual, out.threshold, p, m).verdict;
    return out;
}

StructuralReport structural_checks(const ClarkSystem& sys) {
    StructuralReport r;
    if (sys.empty()) return r;
    const Bits p = std::max<Bits>(sys.prec(), 128);
    CertReal mass(0, p);
    for (const auto& a : sys.atoms()) mass += a.mu;
    r.checks.push_back(make_certificate("mass_sum", mass, CertReal(1, p), p));

    const CertComplex th = eval_inner(sys, CertComplex::i(p));
    r.checks.push_back(make_certificate("theta_i_nonzero", CertReal(0, p), th.abs(), p));

    const Atom& lo = sys[sys.order().front()];
    const Atom& hi = sys[sys.order().back()];
    r.checks.push_back(make_certificate("t_min", CertReal(0, p), lo.t, p));
    r.checks.push_back(make_certificate("t_max", hi.t, CertReal(1, p), p));

    r.checks.push_back(make_certificate("clark_vector", CertReal(0, p), (th - CertComplex(CertReal(1, p))).abs(), p));
    r.pass = std::all_of(r.checks.begin(), r.checks.end(), [](const Certificate& c) { return c.pass(); });
    return r;
}

}  // namespace hrank

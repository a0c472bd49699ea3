#include "hrank/clark.hpp"

#include <algorithm>
#include <cmath>

namespace hrank {

namespace {

CertReal four_pi(Bits p) { return mul_2si(CertReal::pi(p), 2); }

CertReal upper_sqrt(const CertReal& x) { return upper(sqrt_certified(upper(x))); }

CertReal positive_dist(const CertReal& a, const CertReal& b) {
    CertReal d = abs(a - b);
    if (d.sign() <= 0) throw PrecisionError("distance between points is not certified positive");
    return d;
}

}  // namespace

CertComplex synthesize(const ModelVector& v, const CertComplex& z) {
    const ClarkSystem& sys = v.sys;
    const Bits p = std::max(z.prec(), sys.prec());
    if (v.a.size() != sys.size()) throw IndexError("coefficient count differs from atom count");
    if (sys.empty()) return CertComplex(CertReal(0, p));
    // Regularized around the nearest atom m, u = t_m - z:
    // f = 2i (u Q - a_m mu_m) / (mu_m + u (R + i)).
    const std::size_t m = nearest_atom(sys, z);
    const CertComplex u = sys[m].t - z;
    CertComplex R(CertReal(0, p)), Q(CertReal(0, p));
    for (std::size_t n = 0; n < sys.size(); ++n) {
        if (n == m) continue;
        const CertComplex inv = CertComplex(CertReal(1, p)) / (sys[n].t - z);
        R += sys[n].mu * inv;
        Q -= (v.a[n] * sys[n].mu) * inv;
    }
    const CertComplex num = u * Q - v.a[m] * sys[m].mu;
    const CertComplex den = CertComplex(sys[m].mu) + u * (R + CertComplex::i(p));
    return mul_i(mul_2si(num / den, 1));
}

CertReal norm(const ModelVector& v) {
    const Bits p = v.sys.prec();
    CertReal s(0, p);
    for (std::size_t n = 0; n < v.a.size(); ++n) s += v.a[n].abs2() * v.sys[n].mu;
    return sqrt_certified(four_pi(p) * s);
}

ModelVector eigvec_coeffs(const ClarkSystem& sys, const CertReal& lambda, double rel_tol) {
    const Bits p = std::max(sys.prec(), lambda.prec());
    ModelVector v{sys, {}};
    CertReal h(1, p), scale(1, p);
    for (std::size_t n = 0; n < sys.size(); ++n) {
        const CertReal d = lambda - sys[n].t;
        const CertReal a = sys[n].c / d;
        v.a.emplace_back(a);
        const CertReal term = a * sys[n].mu;
        h -= term;
        scale += abs(term);
    }
    const CertReal tol = scale * CertReal::from_double(rel_tol, p);
    if (certainly_greater(abs(h), tol)) throw NotAZero("H does not vanish at the given point");
    return v;
}

GapReport pairwise_gap(const ClarkSystem& sys, const std::vector<CertReal>& lambdas, std::size_t j,
                       std::size_t k) {
    if (j >= lambdas.size() || k >= lambdas.size()) throw IndexError("zero index out of range");
    const Bits p = sys.prec();
    GapReport r{j, k, CertReal(0, p), {}};
    const CertReal dl = lambdas[k] - lambdas[j];
    CertReal s(0, p);
    for (std::size_t m = 0; m < sys.size(); ++m) {
        // 1/(lj - t) - 1/(lk - t) = (lk - lj) / ((lj - t)(lk - t)).
        const CertReal diff = dl / ((lambdas[j] - sys[m].t) * (lambdas[k] - sys[m].t));
        const CertReal c = mul_2si(sqr(sys[m].c * diff) * sys[m].mu, 2);
        r.contributions.push_back(c);
        s += c;
    }
    r.gap = sqrt_certified(CertReal::pi(p) * s);
    return r;
}

RMatrix frame_matrix(const ClarkSystem& sys, const std::vector<CertReal>& lambdas) {
    const std::size_t N = sys.size();
    if (lambdas.size() != N) throw IndexError("frame needs one zero per atom");
    Bits p = sys.prec();
    for (const auto& l : lambdas) p = std::max(p, l.prec());
    const CertReal pi = CertReal::pi(p);
    RMatrix M(N, N);
    for (std::size_t m = 0; m < N; ++m) {
        const CertReal w = mul_2si(sqrt_certified(pi * sys[m].mu), 1) * sys[m].c;
        for (std::size_t j = 0; j < N; ++j) M(m, j) = w / (lambdas[j] - sys[m].t);
    }
    return M;
}

BasisConstant basis_constant_detail(const ClarkSystem& sys, const std::vector<CertReal>& lambdas,
                                    const CertReal& previous) {
    const RMatrix M = frame_matrix(sys, lambdas);
    BasisConstant out{CertReal(), CertReal(), verified_inverse(M)};
    out.sigma_min = sigma_min_lower(out.inverse);
    const Bits p = out.sigma_min.prec();
    if (out.sigma_min.sign() <= 0) throw SingularFrame("sigma_min bound is not positive");
    const CertReal bound = upper(sqrt_certified(CertReal(static_cast<long>(sys.size()), p)) / out.sigma_min);
    CertReal A = CertReal(1, p);
    if (certainly_greater(bound, A)) A = bound;
    if (certainly_greater(previous, A)) A = upper(previous);
    out.A = A;
    return out;
}

CertReal basis_constant(const ClarkSystem& sys, const std::vector<CertReal>& lambdas, const CertReal& previous) {
    return basis_constant_detail(sys, lambdas, previous).A;
}

CertReal perturbation_norm_bound(const ClarkSystem& sys_prev, const ClarkSystem& sys_new, std::size_t n) {
    const std::size_t N = sys_new.size();
    if (N != sys_prev.size() + 1 || N < 2) throw IndexError("new system must add exactly one atom");
    if (n + 1 >= N) throw IndexError("atom index out of range");
    const Bits p = sys_new.prec();
    const Atom& last = sys_new[N - 1];
    if (last.mu.is_exact() && mpfr_zero_p(last.mu.mid().get())) return CertReal(0, p);

    const CertReal d = positive_dist(last.t, sys_prev[n].t);
    const CertReal d2 = sqr(d);
    const CertReal pi = CertReal::pi(p);
    // Kernel part: (mu_N / 2d) sqrt(16 pi / mu_n).
    const CertReal t1 = last.mu / mul_2si(d, 1) * sqrt_certified(mul_2si(pi, 4) / sys_prev[n].mu);

    // Window part, minimized over the window radius rho.
    CertReal dmin;
    for (std::size_t m = 0; m + 1 < N; ++m) {
        const CertReal dm = lower(positive_dist(last.t, sys_prev[m].t));
        if (m == 0 || certainly_less(dm, dmin)) dmin = dm;
    }
    CertReal best;
    bool have = false;
    for (int k = 1; k <= 12; ++k) {
        const CertReal rho = mul_2si(dmin, -k);
        const CertReal sl = eval_cauchy_sum(sys_prev, last.t - rho, Weights::Mu);
        const CertReal sr = eval_cauchy_sum(sys_prev, last.t + rho, Weights::Mu);
        // S is increasing between poles, so S(V) lies in [sl.lo, sr.hi].
        CertReal inf(0, p);
        const Mpfr lo = sl.lo(), hi = sr.hi();
        if (mpfr_sgn(lo.get()) > 0) inf = CertReal::from_mpfr(lo);
        else if (mpfr_sgn(hi.get()) < 0) inf = abs(CertReal::from_mpfr(hi));
        const CertReal ghat = 1 / (sqr(inf) + 1);
        const CertReal t2sq = mul_2si(pi, 2) * last.mu * ghat / d2 + mul_2si(sqr(last.mu), 3) / (rho * d2);
        const CertReal cand = upper_sqrt(t2sq);
        if (!have || certainly_less(cand, best)) {
            best = cand;
            have = true;
        }
    }
    return upper(t1 + best);
}

CertReal g2_bound(const ClarkSystem& sys_prev, const CertReal& lambda_prev, const std::vector<CertReal>& pnb) {
    const Bits p = std::max(sys_prev.prec(), lambda_prev.prec());
    CertReal s(0, p);
    for (std::size_t n = 0; n < sys_prev.size(); ++n)
        s += abs(sys_prev[n].c * sys_prev[n].mu / (lambda_prev - sys_prev[n].t)) * pnb[n];
    return upper(s);
}

StageDifference stage_difference_bound(const ClarkSystem& sys_prev, const ClarkSystem& sys_new,
                                       const CertReal& lambda_prev, const CertReal& lambda_new,
                                       const std::vector<CertReal>& pnb) {
    const std::size_t N = sys_new.size();
    if (N != sys_prev.size() + 1) throw IndexError("new system must add exactly one atom");
    if (pnb.size() + 1 != N) throw IndexError("one perturbation bound per old atom required");
    const Bits p = std::max({sys_new.prec(), lambda_prev.prec(), lambda_new.prec()});
    const CertReal fp = four_pi(p);

    // a'_n - a_n = c_n (lambda - lambda') / ((lambda' - t_n)(lambda - t_n)).
    const CertReal dl = lambda_new - lambda_prev;
    CertReal s1(0, p);
    for (std::size_t n = 0; n + 1 < N; ++n) {
        const CertReal diff = sys_prev[n].c * dl / ((lambda_prev - sys_prev[n].t) * (lambda_new - sys_prev[n].t));
        s1 += sqr(diff) * sys_prev[n].mu;
    }
    StageDifference r;
    r.g1 = upper_sqrt(fp * s1);
    r.g2 = g2_bound(sys_prev, lambda_prev, pnb);
    const Atom& last = sys_new[N - 1];
    r.h = upper(sqrt_certified(fp * last.mu) * abs(last.c) / abs(lambda_new - last.t));
    r.total = upper(r.g1 + r.g2 + r.h);
    return r;
}

StageDifference stage_difference_bound(const ClarkSystem& sys_prev, const ClarkSystem& sys_new,
                                       const CertReal& lambda_prev, const CertReal& lambda_new) {
    std::vector<CertReal> pnb;
    for (std::size_t n = 0; n < sys_prev.size(); ++n) pnb.push_back(perturbation_norm_bound(sys_prev, sys_new, n));
    return stage_difference_bound(sys_prev, sys_new, lambda_prev, lambda_new, pnb);
}

}  // namespace hrank

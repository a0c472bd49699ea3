#include "hrank/diskop.hpp"

#include <algorithm>
#include <cmath>

namespace hrank {

namespace {

CertComplex cone(Bits p) { return CertComplex(CertReal(1, p)); }
CertComplex czero(Bits p) { return CertComplex(CertReal(0, p)); }

bool exactly_equal(const CertReal& a, const CertReal& b) {
    return a.is_exact() && b.is_exact() && mpfr_equal_p(a.mid().get(), b.mid().get());
}

int atom_hit(const ClarkSystem& sys, const CertComplex& z) {
    if (!z.im().is_exact() || !mpfr_zero_p(z.im().mid().get())) return -1;
    for (std::size_t n = 0; n < sys.size(); ++n)
        if (exactly_equal(sys[n].t, z.re())) return static_cast<int>(n);
    return -1;
}

double approx_abs(const CertComplex& z) {
    // Ratio-safe magnitude for reporting only.
    const double re = z.re().to_double(), im = z.im().to_double();
    return std::hypot(re, im);
}

double approx_dist(const CertComplex& a, const CertComplex& b) {
    const CertComplex d = (a - b).point();
    const double lr = d.re().log2_abs(), li = d.im().log2_abs();
    const double l = std::max(lr, li);
    if (!std::isfinite(l)) return 0.0;
    return std::ldexp(1.0, static_cast<int>(std::ceil(l)) + 1);
}

// Inner products on M uniform nodes of the circle, evaluated through the
// boundary parameter z_k = -cot(alpha_k / 2).
CMatrix quadrature_operator(const ClarkSystem& sys, VectorChoice choice, int M) {
    const std::size_t N = sys.size();
    const Bits p = sys.prec();
    const CertReal pi = CertReal::pi(p);
    CMatrix Wee(N, N, czero(p));  // <w e_m, e_n>
    std::vector<CertComplex> phi_e(N, czero(p));
    std::vector<CertComplex> we_theta(N, czero(p));
    CertComplex phi_theta = czero(p);
    const ClarkSystem csys = choice == VectorChoice::Phi ? sys : sys.without_c();
    for (int k = 0; k < M; ++k) {
        const CertReal alpha = pi * CertReal(2 * k + 1, p) / CertReal(M, p);
        const CertReal half = mul_2si(alpha, -1);
        const CertReal z = -(cos(half) / sin(half));
        const CertComplex zc(z);
        const CertComplex w(cos(alpha), sin(alpha));
        const CertComplex th = eval_inner(sys, zc, true);
        const CertComplex ph = eval_phi(csys, zc);
        std::vector<CertComplex> e(N);
        for (std::size_t n = 0; n < N; ++n) e[n] = basis_eval(sys, n, zc);
        for (std::size_t m = 0; m < N; ++m) {
            const CertComplex we = w * e[m];
            we_theta[m] += we * th.conj();
            for (std::size_t n = 0; n < N; ++n) Wee(n, m) += we * e[n].conj();
        }
        for (std::size_t n = 0; n < N; ++n) phi_e[n] += ph * e[n].conj();
        phi_theta += ph * th.conj();
    }
    if (phi_theta.contains_zero()) throw DegenerateVector("<phi, theta> is not certified nonzero");
    CMatrix T(N, N);
    const CertReal Mr(M, p);
    for (std::size_t m = 0; m < N; ++m) {
        const CertComplex gamma = we_theta[m] / phi_theta;
        for (std::size_t n = 0; n < N; ++n) T(n, m) = (Wee(n, m) - gamma * phi_e[n]) / Mr;
    }
    return T;
}

}  // namespace

CertComplex cayley_point(const CertReal& t) {
    const CertReal t2 = sqr(t);
    const CertReal den = t2 + 1;
    return {(t2 - 1) / den, -(mul_2si(t, 1) / den)};
}

CertComplex cayley_point(const CertComplex& z) {
    const CertComplex i = CertComplex::i(z.prec());
    return (z - i) / (z + i);
}

CertReal disk_clark_mass(const CertReal& t, const CertReal& mu) { return mul_2si(mu, 1) / (sqr(t) + 1); }

CertComplex basis_eval(const ClarkSystem& sys, std::size_t n, const CertComplex& z) {
    if (n >= sys.size()) throw IndexError("atom index out of range");
    const Bits p = std::max(sys.prec(), z.prec());
    const int hit = atom_hit(sys, z);
    if (hit >= 0 && hit != static_cast<int>(n)) return czero(p);
    // e_n = (t_n - i)(z + i) sqrt(sigma_n/2) / (mu_n + u (R_n + i)), u = t_n - z.
    const CertComplex i = CertComplex::i(p);
    const CertComplex u = sys[n].t - z;
    CertComplex R = czero(p);
    for (std::size_t m = 0; m < sys.size(); ++m) {
        if (m == n) continue;
        R += CertComplex(sys[m].mu) / (sys[m].t - z);
    }
    const CertReal s = sqrt_certified(mul_2si(disk_clark_mass(sys[n].t, sys[n].mu), -1));
    return (sys[n].t - i) * (z + i) * s / (CertComplex(sys[n].mu) + u * (R + i));
}

CMatrix build_operator(const ClarkSystem& sys, VectorChoice choice, Assembly assembly, const QuadratureOptions& opts) {
    const std::size_t N = sys.size();
    const Bits p = sys.prec();
    if (assembly == Assembly::Quadrature) {
        CMatrix prev = quadrature_operator(sys, choice, opts.initial_nodes);
        const CertReal tol = CertReal::from_double(opts.tolerance, p);
        for (int M = 2 * opts.initial_nodes; M <= opts.max_nodes; M *= 2) {
            CMatrix next = quadrature_operator(sys, choice, M);
            const CertReal diff = max_abs(next - prev);
            CertReal pdiff = diff.point();
            if (certainly_less(pdiff, tol)) return next;
            prev = std::move(next);
        }
        throw QuadratureStall("circle quadrature did not stabilize before the node cap");
    }

    const CertComplex i = CertComplex::i(p);
    CMatrix T(N, N, czero(p));
    std::vector<CertComplex> tau(N);
    std::vector<CertReal> sig(N);
    for (std::size_t n = 0; n < N; ++n) {
        tau[n] = cayley_point(sys[n].t);
        sig[n] = disk_clark_mass(sys[n].t, sys[n].mu);
        T(n, n) = tau[n];
    }
    if (choice == VectorChoice::OneMinusTheta) return T;

    CertComplex kappa = cone(p);
    for (std::size_t n = 0; n < N; ++n) kappa += CertComplex(sys[n].c * sys[n].mu) / (sys[n].t + i);
    if (kappa.contains_zero()) throw DegenerateVector("kappa = H(-i) is not certified nonzero");
    const CertComplex ik = i / kappa;
    for (std::size_t n = 0; n < N; ++n) {
        const CertReal bn = sys[n].c * sqrt_certified(sig[n]);
        for (std::size_t m = 0; m < N; ++m) {
            const CertComplex am = tau[m] * sqrt_certified(sig[m]);
            T(n, m) += ik * bn * am;
        }
    }
    return T;
}

std::vector<CertComplex> transport_coordinates(const ModelVector& v) {
    const ClarkSystem& sys = v.sys;
    const Bits p = sys.prec();
    const CertComplex i = CertComplex::i(p);
    const CertReal rpi = sqrt_certified(CertReal::pi(p));
    std::vector<CertComplex> out;
    for (std::size_t m = 0; m < sys.size(); ++m) {
        const CertComplex boundary = mul_2si(mul_i(v.a[m]), 1);  // -f(t_m) = 2i a_m
        const CertReal s = sqrt_certified(mul_2si(disk_clark_mass(sys[m].t, sys[m].mu), -1));
        out.push_back(-((sys[m].t + i) * boundary * s * rpi));
    }
    return out;
}

CertComplex transport_eval(const ModelVector& v, const CertComplex& w) {
    const Bits p = std::max(v.sys.prec(), w.prec());
    const CertComplex i = CertComplex::i(p);
    const CertComplex one = cone(p);
    const CertComplex z = i * (one + w) / (one - w);
    const CertComplex f = synthesize(v, z);
    return mul_2si(i * f / (one - w), 1) * sqrt_certified(CertReal::pi(p));
}

DiskOperatorBundle build_bundle(const ClarkSystem& sys_in, const std::vector<CertReal>& lambdas, Bits bits,
                                Assembly assembly) {
    DiskOperatorBundle b;
    b.precision = bits;
    b.sys = sys_in.at(bits);
    const ClarkSystem& sys = b.sys;
    const std::size_t N = sys.size();
    if (lambdas.size() != N) throw IndexError("one zero per atom required");
    for (const auto& l : lambdas) b.lambdas.push_back(l.at(std::max(bits, l.prec())));

    const CertComplex i = CertComplex::i(bits);
    CertReal mu_sum(0, bits);
    for (std::size_t n = 0; n < N; ++n) {
        b.tau.push_back(cayley_point(sys[n].t));
        b.sigma.push_back(disk_clark_mass(sys[n].t, sys[n].mu));
        mu_sum += sys[n].mu;
    }
    for (const auto& l : b.lambdas) b.Lambda.push_back(cayley_point(l));
    b.kappa = cone(bits);
    for (std::size_t n = 0; n < N; ++n) b.kappa += CertComplex(sys[n].c * sys[n].mu) / (sys[n].t + i);
    b.theta0 = eval_inner(sys, i);

    b.T = build_operator(sys, VectorChoice::Phi, assembly);
    b.U = build_operator(sys, VectorChoice::OneMinusTheta, assembly);
    for (const auto& l : b.lambdas) b.eigvecs.push_back(transport_coordinates(eigvec_coeffs(sys, l)));
    return b;
}

SpectralReport spectral_check(const DiskOperatorBundle& b) {
    SpectralReport r;
    const std::size_t N = b.Lambda.size();
    const Bits p = b.precision;

    r.eig_T = eigenvalues(b.T);
    std::vector<bool> used(N, false);
    for (const auto& e : r.eig_T) {
        int best = -1;
        double bd = 0;
        for (std::size_t j = 0; j < N; ++j) {
            if (used[j]) continue;
            const CertComplex d = (e - b.Lambda[j]).point();
            const double ld = std::max(d.re().log2_abs(), d.im().log2_abs());
            if (best < 0 || ld < bd) {
                best = static_cast<int>(j);
                bd = ld;
            }
        }
        used[best] = true;
        r.match.push_back(best);
        r.max_match_error = std::max(r.max_match_error, approx_dist(e, b.Lambda[best]));
        r.max_unimodular_error = std::max(r.max_unimodular_error, std::abs(approx_abs(e) - 1.0));
    }

    r.max_residual = CertReal(0, p);
    for (std::size_t j = 0; j < N; ++j) {
        const auto& v = b.eigvecs[j];
        CertReal res(0, p), nv(0, p);
        for (std::size_t n = 0; n < N; ++n) {
            CertComplex s = czero(p) - b.Lambda[j] * v[n];
            for (std::size_t m = 0; m < N; ++m) s += b.T(n, m) * v[m];
            res += s.abs2();
            nv += v[n].abs2();
        }
        r.residuals.push_back(upper(sqrt_certified(res / nv)));
        if (certainly_greater(r.residuals.back(), r.max_residual)) r.max_residual = r.residuals.back();
    }

    r.lambda_unimodular = CertReal(0, p);
    for (const auto& L : b.Lambda) {
        const CertReal u = upper(L.abs2() - 1);
        if (certainly_greater(u, r.lambda_unimodular)) r.lambda_unimodular = u;
    }
    r.distinct = true;
    bool have = false;
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = j + 1; k < N; ++k) {
            const CertReal g = lower(sqrt_certified((b.Lambda[j] - b.Lambda[k]).abs2()));
            if (!have || certainly_less(g, r.min_lambda_gap)) r.min_lambda_gap = g;
            have = true;
            if (g.sign() <= 0) r.distinct = false;
        }
    if (!have) r.min_lambda_gap = CertReal(0, p);

    const CMatrix E = adjoint(b.U) * b.U - identity_complex(N, p);
    r.unitarity = max_abs(E);
    const CMatrix D = b.T - b.U;
    const RankOneBound rb = rank_one_bound(D);
    r.sigma1 = rb.sigma1_lower;
    r.sigma2 = rb.sigma2_upper;
    r.singular = singular_values(D);
    return r;
}

ChecklistReport grivaux_checklist(const DiskOperatorBundle& b, const SpectralReport& s) {
    ChecklistReport r;
    const std::size_t N = b.Lambda.size();
    const Bits p = b.precision;
    r.unimodular_distinct = s.distinct && certainly_less(s.lambda_unimodular, CertReal::pow2(-64, p));
    try {
        const BasisConstant bc = basis_constant_detail(b.sys, b.lambdas, CertReal(1, p));
        r.frame_sigma_min = bc.sigma_min;
        r.frame_full_rank = bc.sigma_min.sign() > 0;
    } catch (const SingularFrame&) {
        r.frame_sigma_min = CertReal(0, p);
        r.frame_full_rank = false;
    }
    r.gaps_vacuous = N < 2;
    for (std::size_t j = 0; j < N && N >= 2; ++j) {
        ChecklistReport::Partner best;
        best.j = static_cast<int>(j) + 1;
        for (std::size_t k = 0; k < N; ++k) {
            if (k == j) continue;
            const CertReal g = upper(pairwise_gap(b.sys, b.lambdas, j, k).gap);
            if (best.k == 0 || certainly_less(g, best.gap)) {
                best.k = static_cast<int>(k) + 1;
                best.gap = g;
            }
        }
        r.partners.push_back(best);
    }
    r.note = r.gaps_vacuous
                 ? "N = 1: condition (iii) is vacuous at this stage"
                 : "conditions (ii) and (iii) are finite-stage evidence only, not a proof of hypercyclicity";
    return r;
}

}  // namespace hrank

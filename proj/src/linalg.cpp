#include "hrank/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace hrank {

namespace {

CertComplex czero(Bits p) { return CertComplex(CertReal(0, p)); }

CertComplex pt(const CertComplex& z) { return z.point(); }
CertReal pt(const CertReal& x) { return x.point(); }

bool is_zero_mid(const CertReal& x) { return mpfr_zero_p(x.mid().get()) != 0; }
bool is_zero_mid(const CertComplex& z) { return is_zero_mid(z.re()) && is_zero_mid(z.im()); }

// Point magnitude of a complex number (nonnegative, never throws).
CertReal pabs(const CertComplex& z) {
    const Bits p = z.prec();
    Mpfr r(p);
    mpfr_hypot(r.get(), z.re().mid().get(), z.im().mid().get(), MPFR_RNDN);
    return CertReal::from_mpfr(r);
}

CertComplex psqrt(const CertComplex& z) {
    const Bits p = z.prec();
    Mpfr r(p), re(p), im(p);
    mpfr_hypot(r.get(), z.re().mid().get(), z.im().mid().get(), MPFR_RNDN);
    mpfr_add(re.get(), r.get(), z.re().mid().get(), MPFR_RNDN);
    mpfr_sub(im.get(), r.get(), z.re().mid().get(), MPFR_RNDN);
    mpfr_div_2ui(re.get(), re.get(), 1, MPFR_RNDN);
    mpfr_div_2ui(im.get(), im.get(), 1, MPFR_RNDN);
    if (mpfr_sgn(re.get()) < 0) mpfr_set_zero(re.get(), 1);
    if (mpfr_sgn(im.get()) < 0) mpfr_set_zero(im.get(), 1);
    mpfr_sqrt(re.get(), re.get(), MPFR_RNDN);
    mpfr_sqrt(im.get(), im.get(), MPFR_RNDN);
    if (mpfr_sgn(z.im().mid().get()) < 0) mpfr_neg(im.get(), im.get(), MPFR_RNDN);
    return {CertReal::from_mpfr(re), CertReal::from_mpfr(im)};
}

bool pless(const CertReal& a, const CertReal& b) {
    return mpfr_cmp(a.mid().get(), b.mid().get()) < 0;
}

struct Givens {
    CertReal c;
    CertComplex s;
};

// Rotation G with G [a; b] = [r; 0].
Givens make_givens(const CertComplex& a, const CertComplex& b) {
    const Bits p = std::max(a.prec(), b.prec());
    if (is_zero_mid(b)) return {CertReal(1, p), czero(p)};
    const CertReal nb = pabs(b);
    if (is_zero_mid(a)) return {CertReal(0, p), pt(b.conj() / nb)};
    const CertReal na = pabs(a);
    const CertReal nrm = pt(sqrt_certified(pt(sqr(na) + sqr(nb))));
    return {pt(na / nrm), pt(pt(a / na) * b.conj() / nrm)};
}

void rot_rows(CMatrix& H, std::size_t i, std::size_t j, const Givens& g, std::size_t c0, std::size_t c1) {
    for (std::size_t k = c0; k < c1; ++k) {
        const CertComplex x = H(i, k), y = H(j, k);
        H(i, k) = pt(g.c * x + g.s * y);
        H(j, k) = pt(g.c * y - g.s.conj() * x);
    }
}

void rot_cols(CMatrix& H, std::size_t i, std::size_t j, const Givens& g, std::size_t r0, std::size_t r1) {
    for (std::size_t k = r0; k < r1; ++k) {
        const CertComplex x = H(k, i), y = H(k, j);
        H(k, i) = pt(x * g.c + y * g.s.conj());
        H(k, j) = pt(y * g.c - x * g.s);
    }
}

std::pair<CertComplex, CertComplex> eig2(const CertComplex& a, const CertComplex& b,
                                         const CertComplex& c, const CertComplex& d) {
    const CertComplex half_tr = pt(mul_2si(a + d, -1));
    const CertComplex hd = pt(mul_2si(a - d, -1));
    const CertComplex root = psqrt(pt(hd * hd + b * c));
    return {pt(half_tr + root), pt(half_tr - root)};
}

}  // namespace

RMatrix identity_real(std::size_t n, Bits prec) {
    RMatrix I(n, n, CertReal(0, prec));
    for (std::size_t i = 0; i < n; ++i) I(i, i) = CertReal(1, prec);
    return I;
}

CMatrix identity_complex(std::size_t n, Bits prec) {
    CMatrix I(n, n, czero(prec));
    for (std::size_t i = 0; i < n; ++i) I(i, i) = CertComplex(CertReal(1, prec));
    return I;
}

RMatrix operator*(const RMatrix& a, const RMatrix& b) {
    RMatrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            CertReal s = a(i, 0) * b(0, j);
            for (std::size_t k = 1; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            r(i, j) = s;
        }
    return r;
}

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    CMatrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            CertComplex s = a(i, 0) * b(0, j);
            for (std::size_t k = 1; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            r(i, j) = s;
        }
    return r;
}

CMatrix operator-(const CMatrix& a, const CMatrix& b) {
    CMatrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) - b(i, j);
    return r;
}

CMatrix adjoint(const CMatrix& a) {
    CMatrix r(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(j, i) = a(i, j).conj();
    return r;
}

CertReal frobenius(const RMatrix& a) {
    CertReal s(0, a(0, 0).prec());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += sqr(a(i, j));
    return sqrt_certified(s);
}

CertReal frobenius(const CMatrix& a) {
    CertReal s(0, a(0, 0).prec());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j).abs2();
    return sqrt_certified(s);
}

CertReal max_abs(const CMatrix& a) {
    CertReal m(0, a(0, 0).prec());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const CertReal v = upper(sqrt_certified(a(i, j).abs2()));
            if (pless(m, v)) m = v;
        }
    return m;
}

VerifiedInverse verified_inverse(const RMatrix& M) {
    const std::size_t n = M.rows();
    Bits p = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) p = std::max(p, M(i, j).prec());

    // Gauss-Jordan with partial pivoting on the midpoints.
    RMatrix A(n, n), X = identity_real(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) A(i, j) = pt(M(i, j));
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (mpfr_cmpabs(A(r, col).mid().get(), A(piv, col).mid().get()) > 0) piv = r;
        if (is_zero_mid(A(piv, col))) throw SingularFrame("frame matrix is numerically singular");
        for (std::size_t k = 0; k < n; ++k) {
            std::swap(A(col, k), A(piv, k));
            std::swap(X(col, k), X(piv, k));
        }
        const CertReal d = A(col, col);
        for (std::size_t k = 0; k < n; ++k) {
            A(col, k) = pt(A(col, k) / d);
            X(col, k) = pt(X(col, k) / d);
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || is_zero_mid(A(r, col))) continue;
            const CertReal f = A(r, col);
            for (std::size_t k = 0; k < n; ++k) {
                A(r, k) = pt(A(r, k) - f * A(col, k));
                X(r, k) = pt(X(r, k) - f * X(col, k));
            }
        }
    }

    RMatrix E = X * M;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) E(i, j) = (i == j ? CertReal(1, p) : CertReal(0, p)) - E(i, j);
    VerifiedInverse out{X, upper(frobenius(E)), upper(frobenius(X))};
    if (!certainly_less(out.residual, CertReal(1, p)))
        throw SingularFrame("approximate inverse residual is not below 1");
    return out;
}

CertReal sigma_min_lower(const VerifiedInverse& inv) {
    const Bits p = inv.x_norm.prec();
    return lower((CertReal(1, p) - inv.residual) / inv.x_norm);
}

std::vector<CertReal> verified_solve(const VerifiedInverse& inv, const std::vector<CertReal>& b) {
    const std::size_t n = inv.X.rows();
    const Bits p = inv.x_norm.prec();
    std::vector<CertReal> a(n);
    CertReal s(0, p);
    for (std::size_t i = 0; i < n; ++i) {
        CertReal v = inv.X(i, 0) * b[0];
        for (std::size_t k = 1; k < n; ++k) v += inv.X(i, k) * b[k];
        a[i] = v;
        s += sqr(v);
    }
    // |x - X b| <= e ||X b|| / (1 - e) componentwise (2-norm bound).
    const CertReal err = upper(inv.residual * sqrt_certified(s) / (CertReal(1, p) - inv.residual));
    const CertReal widen = CertReal::hull((-err).lo(), err.hi(), p);
    for (auto& v : a) v += widen;
    return a;
}

std::vector<CertComplex> eigenvalues(const CMatrix& A0) {
    const std::size_t n = A0.rows();
    if (n == 0) return {};
    const Bits p = A0(0, 0).prec();
    CMatrix H(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) H(i, j) = pt(A0(i, j));
    if (n == 1) return {H(0, 0)};

    for (std::size_t k = 0; k + 2 < n; ++k)
        for (std::size_t i = n - 1; i >= k + 2; --i) {
            const Givens g = make_givens(H(i - 1, k), H(i, k));
            rot_rows(H, i - 1, i, g, 0, n);
            rot_cols(H, i - 1, i, g, 0, n);
            H(i, k) = czero(p);
        }

    const CertReal tol = CertReal::pow2(-static_cast<long>(p) + 8, p);
    CertReal scale(0, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = pt(scale + pabs(H(i, j)));

    std::vector<CertComplex> eig;
    std::size_t hi = n - 1;
    int iter = 0;
    while (true) {
        if (hi == 0) {
            eig.push_back(H(0, 0));
            break;
        }
        // Find the start of the unreduced block ending at hi.
        std::size_t lo = hi;
        while (lo > 0) {
            CertReal ref = pt(pabs(H(lo, lo)) + pabs(H(lo - 1, lo - 1)));
            if (is_zero_mid(ref)) ref = scale;
            if (!pless(pt(tol * ref), pabs(H(lo, lo - 1)))) {
                H(lo, lo - 1) = czero(p);
                break;
            }
            --lo;
        }
        if (lo == hi) {
            eig.push_back(H(hi, hi));
            --hi;
            iter = 0;
            continue;
        }
        if (lo + 1 == hi) {
            auto [e1, e2] = eig2(H(lo, lo), H(lo, hi), H(hi, lo), H(hi, hi));
            eig.push_back(e1);
            eig.push_back(e2);
            if (lo == 0) break;
            hi = lo - 1;
            iter = 0;
            continue;
        }
        if (++iter > 60 * static_cast<int>(n)) throw IterationCap("QR eigenvalue iteration did not converge");

        CertComplex mu;
        if (iter % 11 == 0) {
            mu = pt(H(hi, hi) + CertComplex(pabs(H(hi, hi - 1))));
        } else {
            auto [e1, e2] = eig2(H(hi - 1, hi - 1), H(hi - 1, hi), H(hi, hi - 1), H(hi, hi));
            mu = pless(pabs(pt(e1 - H(hi, hi))), pabs(pt(e2 - H(hi, hi)))) ? e1 : e2;
        }
        for (std::size_t k = lo; k <= hi; ++k) H(k, k) = pt(H(k, k) - mu);
        std::vector<Givens> gs;
        for (std::size_t k = lo; k < hi; ++k) {
            const Givens g = make_givens(H(k, k), H(k + 1, k));
            rot_rows(H, k, k + 1, g, lo, hi + 1);
            H(k + 1, k) = czero(p);
            gs.push_back(g);
        }
        for (std::size_t k = lo; k < hi; ++k)
            rot_cols(H, k, k + 1, gs[k - lo], lo, std::min(k + 2, hi) + 1);
        for (std::size_t k = lo; k <= hi; ++k) H(k, k) = pt(H(k, k) + mu);
    }
    return eig;
}

std::vector<CertReal> singular_values(const CMatrix& A) {
    const CMatrix B = adjoint(A) * A;
    std::vector<CertReal> s;
    for (const auto& e : eigenvalues(B)) {
        CertReal v = e.re().point();
        if (v.sign() < 0) v = CertReal(0, v.prec());
        s.push_back(pt(sqrt_certified(v)));
    }
    std::sort(s.begin(), s.end(), [](const CertReal& a, const CertReal& b) { return pless(b, a); });
    return s;
}

RankOneBound rank_one_bound(const CMatrix& A) {
    const std::size_t m = A.rows(), n = A.cols();
    const Bits p = A(0, 0).prec();
    std::size_t best = 0;
    CertReal best_norm(0, p);
    for (std::size_t i = 0; i < m; ++i) {
        CertReal r(0, p);
        for (std::size_t j = 0; j < n; ++j) r = pt(r + pt(A(i, j).abs2()));
        if (pless(best_norm, r)) {
            best_norm = r;
            best = i;
        }
    }
    const CertReal fro2 = sqr(frobenius(A));
    if (is_zero_mid(best_norm)) {
        return {CertReal(0, p), upper(sqrt_certified(fro2))};
    }
    // v = conj(row) with exact (point) entries; Rayleigh quotient bounds sigma_1.
    std::vector<CertComplex> v(n);
    CertReal vv(0, p);
    for (std::size_t j = 0; j < n; ++j) {
        v[j] = pt(A(best, j).conj());
        vv += v[j].abs2();
    }
    CertReal av(0, p);
    for (std::size_t i = 0; i < m; ++i) {
        CertComplex s = A(i, 0) * v[0];
        for (std::size_t j = 1; j < n; ++j) s += A(i, j) * v[j];
        av += s.abs2();
    }
    const CertReal s1sq = av / vv;
    const Mpfr rest_hi = (fro2 - s1sq).hi();
    const CertReal s2 = mpfr_sgn(rest_hi.get()) <= 0
                            ? CertReal(0, p)
                            : upper(sqrt_certified(CertReal::from_mpfr(rest_hi)));
    return {lower(sqrt_certified(lower(s1sq))), s2};
}

}  // namespace hrank

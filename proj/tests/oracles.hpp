#pragma once

// Independent double-precision oracles for the test suite. Nothing here calls
// into the library, so agreement with it is a genuine cross-check.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "hrank/certreal.hpp"

namespace oracle {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

struct DAtom {
    double t;
    double mu;
    double c;
};

// S(z) = sum mu/(t - z).
inline cd S(const std::vector<DAtom>& a, cd z) {
    cd s = 0;
    for (const auto& x : a) s += x.mu / (x.t - z);
    return s;
}

inline cd theta(const std::vector<DAtom>& a, cd z) {
    const cd s = S(a, z);
    const cd i(0, 1);
    return (s - i) / (s + i);
}

// H(x) = 1 + sum c mu/(t - x).
inline double H(const std::vector<DAtom>& a, double x) {
    double h = 1;
    for (const auto& y : a) h += y.c * y.mu / (y.t - x);
    return h;
}

// f(z) = (1 - theta(z)) sum coef_n mu_n/(z - t_n), written as
// 2i sum(...) / (S + i) which is smooth on the real line off the poles.
inline cd model(const std::vector<DAtom>& a, const std::vector<cd>& coef, cd z) {
    const cd i(0, 1);
    cd sum = 0;
    for (std::size_t n = 0; n < a.size(); ++n) sum += coef[n] * a[n].mu / (z - a[n].t);
    return 2.0 * i * sum / (S(a, z) + i);
}

// Integral over the real line of g, via x = tan(s) and adaptive Gauss-Kronrod
// on pieces split at the given breakpoints. The tolerance is relative to the
// whole integral: a coarse pass sizes each piece, then each piece is refined
// to tol * total / |piece| so negligible pieces do not chase rounding noise.
inline double integrate_line(const std::function<double(double)>& g, std::vector<double> breaks,
                             double tol = 1e-11) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    std::vector<double> s{-kPi / 2};
    std::sort(breaks.begin(), breaks.end());
    for (double b : breaks) s.push_back(std::atan(b));
    s.push_back(kPi / 2);
    auto h = [&](double u) {
        const double c = std::cos(u);
        if (c <= 0) return 0.0;
        return g(std::tan(u)) / (c * c);
    };
    std::vector<double> rough(s.size(), 0.0);
    double total = 0;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        if (s[k + 1] <= s[k]) continue;
        rough[k] = GK::integrate(h, s[k], s[k + 1], 10, 1e-6);
        total += std::abs(rough[k]);
    }
    double out = 0;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        if (s[k + 1] <= s[k]) continue;
        const double piece = std::abs(rough[k]);
        const double rel = piece > 0 ? std::max(tol, tol * total / piece) : 1.0;
        out += GK::integrate(h, s[k], s[k + 1], 15, rel);
    }
    return out;
}

// Squared L2 norm on the line of the model function with the given coefficients.
inline double model_norm2(const std::vector<DAtom>& a, const std::vector<cd>& coef) {
    std::vector<double> br;
    for (const auto& x : a) br.push_back(x.t);
    return integrate_line([&](double x) { return std::norm(model(a, coef, cd(x, 0))); }, br);
}

}  // namespace oracle

namespace testutil {

inline hrank::CertReal R(double v, hrank::Bits p = 256) { return hrank::CertReal::from_double(v, p); }

// lo - slack <= v <= hi + slack in double arithmetic.
inline bool near(const hrank::CertReal& x, double v, double slack) {
    const double lo = mpfr_get_d(x.lo().get(), MPFR_RNDD);
    const double hi = mpfr_get_d(x.hi().get(), MPFR_RNDU);
    return lo - slack <= v && v <= hi + slack;
}

// Exact containment of an MPFR value.
inline bool encloses(const hrank::CertReal& x, const hrank::Mpfr& v) {
    return mpfr_lessequal_p(x.lo().get(), v.get()) && mpfr_lessequal_p(v.get(), x.hi().get());
}

inline double width(const hrank::CertReal& x) {
    hrank::Mpfr w(64);
    mpfr_sub(w.get(), x.hi().get(), x.lo().get(), MPFR_RNDU);
    return mpfr_get_d(w.get(), MPFR_RNDU);
}

inline double d(const hrank::CertReal& x) { return x.to_double(); }

}  // namespace testutil

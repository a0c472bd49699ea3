#include "hrank/certreal.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace hrank {

// ---------------------------------------------------------------- Mpfr

Mpfr::Mpfr(Bits prec) {
    mpfr_init2(v_, prec);
    mpfr_set_zero(v_, 1);
}

Mpfr::Mpfr(const Mpfr& other) {
    mpfr_init2(v_, other.prec());
    mpfr_set(v_, other.v_, MPFR_RNDN);
}

Mpfr::Mpfr(Mpfr&& other) noexcept {
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_swap(v_, other.v_);
}

Mpfr& Mpfr::operator=(const Mpfr& other) {
    if (this != &other) {
        mpfr_set_prec(v_, other.prec());
        mpfr_set(v_, other.v_, MPFR_RNDN);
    }
    return *this;
}

Mpfr& Mpfr::operator=(Mpfr&& other) noexcept {
    mpfr_swap(v_, other.v_);
    return *this;
}

Mpfr::~Mpfr() { mpfr_clear(v_); }

std::string Mpfr::to_decimal() const {
    if (mpfr_zero_p(v_)) return "0";
    if (!mpfr_number_p(v_)) throw DomainError("non-finite value cannot be serialized");
    mpfr_exp_t e = 0;
    char* raw = mpfr_get_str(nullptr, &e, 10, 0, v_, MPFR_RNDN);
    std::string digits(raw);
    mpfr_free_str(raw);
    std::string sign;
    if (digits[0] == '-') {
        sign = "-";
        digits.erase(0, 1);
    }
    while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
    std::string out = sign + digits.substr(0, 1);
    if (digits.size() > 1) out += "." + digits.substr(1);
    const long exp10 = static_cast<long>(e) - 1;
    if (exp10 != 0) out += "e" + std::to_string(exp10);
    return out;
}

int Mpfr::set_decimal(const std::string& s, mpfr_rnd_t rnd) {
    char* end = nullptr;
    const int t = mpfr_strtofr(v_, s.c_str(), &end, 10, rnd);
    if (s.empty() || end != s.c_str() + s.size() || !mpfr_number_p(v_))
        throw DomainError("malformed decimal: '" + s + "'");
    return t;
}

bool PrecisionContext::escalate() {
    if (bits >= max_bits) return false;
    bits = std::min<Bits>(bits * escalation_factor, max_bits);
    return true;
}

// ---------------------------------------------------------------- helpers

namespace {

constexpr Bits R = CertReal::kRadBits;

Mpfr abs_up(const Mpfr& x) {
    Mpfr r(R);
    mpfr_abs(r.get(), x.get(), MPFR_RNDU);
    return r;
}

Mpfr abs_down(const Mpfr& x) {
    Mpfr r(R);
    mpfr_abs(r.get(), x.get(), MPFR_RNDD);
    return r;
}

void add_up(Mpfr& acc, const Mpfr& x) { mpfr_add(acc.get(), acc.get(), x.get(), MPFR_RNDU); }

Mpfr mul_up(const Mpfr& a, const Mpfr& b) {
    Mpfr r(R);
    mpfr_mul(r.get(), a.get(), b.get(), MPFR_RNDU);
    return r;
}

// Upper bound for |x - RNDN(x)| given the rounded value m.
Mpfr ulp_of(const Mpfr& m) {
    Mpfr r(R);
    if (mpfr_zero_p(m.get()) || !mpfr_number_p(m.get()))
        throw PrecisionError("rounding produced zero or a non-finite value");
    mpfr_set_ui_2exp(r.get(), 1, mpfr_get_exp(m.get()) - m.prec(), MPFR_RNDU);
    return r;
}

Bits max_prec(const CertReal& a, const CertReal& b) { return std::max(a.prec(), b.prec()); }

}  // namespace

// ---------------------------------------------------------------- CertReal

CertReal::CertReal() : mid_(R), rad_(R) {}

CertReal::CertReal(long v, Bits prec) : mid_(std::max<Bits>(prec, 64)), rad_(R) {
    mpfr_set_si(mid_.get(), v, MPFR_RNDN);
}

void CertReal::add_rounding(int ternary) {
    if (ternary != 0) add_up(rad_, ulp_of(mid_));
}

CertReal CertReal::from_double(double v, Bits prec) {
    if (!std::isfinite(v)) throw DomainError("non-finite double");
    CertReal r;
    r.mid_ = Mpfr(prec);
    r.add_rounding(mpfr_set_d(r.mid_.get(), v, MPFR_RNDN));
    return r;
}

CertReal CertReal::from_decimal(const std::string& s, Bits prec) {
    CertReal r;
    r.mid_ = Mpfr(prec);
    r.add_rounding(r.mid_.set_decimal(s));
    return r;
}

CertReal CertReal::from_ball(const std::string& mid, const std::string& rad, Bits prec) {
    CertReal r;
    r.mid_ = Mpfr(prec);
    // The midpoint is by definition the p-bit value nearest the decimal, so
    // the shortest round-trip decimal written by to_decimal reads back exactly.
    r.mid_.set_decimal(mid);
    // A radius written by to_decimal reads back exactly; any other decimal is
    // rounded up so the ball never shrinks.
    r.rad_.set_decimal(rad, MPFR_RNDN);
    if (r.rad_.to_decimal() != rad) r.rad_.set_decimal(rad, MPFR_RNDU);
    if (mpfr_sgn(r.rad_.get()) < 0) throw DomainError("negative radius");
    return r;
}

CertReal CertReal::from_mpfr(const Mpfr& mid) {
    CertReal r;
    r.mid_ = mid;
    return r;
}

CertReal CertReal::hull(const Mpfr& lo, const Mpfr& hi, Bits prec) {
    if (mpfr_cmp(lo.get(), hi.get()) > 0) throw DomainError("hull with lo > hi");
    CertReal r;
    r.mid_ = Mpfr(prec);
    mpfr_add(r.mid_.get(), lo.get(), hi.get(), MPFR_RNDN);
    mpfr_div_2ui(r.mid_.get(), r.mid_.get(), 1, MPFR_RNDN);
    Mpfr a(R), b(R);
    mpfr_sub(a.get(), hi.get(), r.mid_.get(), MPFR_RNDU);
    mpfr_sub(b.get(), r.mid_.get(), lo.get(), MPFR_RNDU);
    mpfr_max(r.rad_.get(), a.get(), b.get(), MPFR_RNDU);
    if (mpfr_sgn(r.rad_.get()) < 0) mpfr_set_zero(r.rad_.get(), 1);
    return r;
}

CertReal CertReal::pi(Bits prec) {
    CertReal r;
    r.mid_ = Mpfr(prec);
    r.add_rounding(mpfr_const_pi(r.mid_.get(), MPFR_RNDN));
    return r;
}

CertReal CertReal::pow2(long e, Bits prec) {
    CertReal r;
    r.mid_ = Mpfr(prec);
    mpfr_set_si_2exp(r.mid_.get(), 1, e, MPFR_RNDN);
    return r;
}

Mpfr CertReal::lo() const {
    Mpfr r(prec());
    mpfr_sub(r.get(), mid_.get(), rad_.get(), MPFR_RNDD);
    return r;
}

Mpfr CertReal::hi() const {
    Mpfr r(prec());
    mpfr_add(r.get(), mid_.get(), rad_.get(), MPFR_RNDU);
    return r;
}

bool CertReal::is_exact() const { return mpfr_zero_p(rad_.get()) != 0; }

CertReal CertReal::at(Bits p) const {
    CertReal r;
    r.mid_ = Mpfr(p);
    r.rad_ = rad_;
    r.add_rounding(mpfr_set(r.mid_.get(), mid_.get(), MPFR_RNDN));
    return r;
}

CertReal CertReal::point() const { return from_mpfr(mid_); }

double CertReal::to_double() const { return mpfr_get_d(mid_.get(), MPFR_RNDN); }

double CertReal::log2_abs() const {
    if (mpfr_zero_p(mid_.get())) return -std::numeric_limits<double>::infinity();
    long e = 0;
    const double d = mpfr_get_d_2exp(&e, mid_.get(), MPFR_RNDN);
    return std::log2(std::fabs(d)) + static_cast<double>(e);
}

std::string CertReal::str(int digits) const {
    char* s = nullptr;
    mpfr_asprintf(&s, "%.*Rg", digits, mid_.get());
    std::string out(s);
    mpfr_free_str(s);
    if (!is_exact()) {
        mpfr_asprintf(&s, " +/- %.3Rg", rad_.get());
        out += s;
        mpfr_free_str(s);
    }
    return out;
}

int CertReal::sign() const {
    const int s = mpfr_sgn(mid_.get());
    if (s == 0) return 0;
    if (mpfr_cmpabs(mid_.get(), rad_.get()) > 0) return s > 0 ? 1 : -1;
    return 0;
}

CertReal CertReal::operator-() const {
    CertReal r = *this;
    mpfr_neg(r.mid_.get(), r.mid_.get(), MPFR_RNDN);
    return r;
}

CertReal& CertReal::operator+=(const CertReal& o) { return *this = *this + o; }
CertReal& CertReal::operator-=(const CertReal& o) { return *this = *this - o; }
CertReal& CertReal::operator*=(const CertReal& o) { return *this = *this * o; }
CertReal& CertReal::operator/=(const CertReal& o) { return *this = *this / o; }

CertReal operator+(const CertReal& a, const CertReal& b) {
    CertReal r;
    r.mid_ = Mpfr(max_prec(a, b));
    const int t = mpfr_add(r.mid_.get(), a.mid_.get(), b.mid_.get(), MPFR_RNDN);
    mpfr_add(r.rad_.get(), a.rad_.get(), b.rad_.get(), MPFR_RNDU);
    r.add_rounding(t);
    return r;
}

CertReal operator-(const CertReal& a, const CertReal& b) {
    CertReal r;
    r.mid_ = Mpfr(max_prec(a, b));
    const int t = mpfr_sub(r.mid_.get(), a.mid_.get(), b.mid_.get(), MPFR_RNDN);
    mpfr_add(r.rad_.get(), a.rad_.get(), b.rad_.get(), MPFR_RNDU);
    r.add_rounding(t);
    return r;
}

CertReal operator*(const CertReal& a, const CertReal& b) {
    CertReal r;
    r.mid_ = Mpfr(max_prec(a, b));
    const int t = mpfr_mul(r.mid_.get(), a.mid_.get(), b.mid_.get(), MPFR_RNDN);
    const bool ea = a.is_exact(), eb = b.is_exact();
    if (!eb) add_up(r.rad_, mul_up(abs_up(a.mid_), b.rad_));
    if (!ea) add_up(r.rad_, mul_up(abs_up(b.mid_), a.rad_));
    if (!ea && !eb) add_up(r.rad_, mul_up(a.rad_, b.rad_));
    r.add_rounding(t);
    return r;
}

CertReal operator/(const CertReal& a, const CertReal& b) {
    if (b.contains_zero()) throw PrecisionError("division by a ball containing zero");
    CertReal r;
    r.mid_ = Mpfr(max_prec(a, b));
    const int t = mpfr_div(r.mid_.get(), a.mid_.get(), b.mid_.get(), MPFR_RNDN);
    if (!a.is_exact() || !b.is_exact()) {
        // |a/b - am/bm| <= (|am| rb + |bm| ra) / (|bm| (|bm| - rb))
        Mpfr num = mul_up(abs_up(a.mid_), b.rad_);
        add_up(num, mul_up(abs_up(b.mid_), a.rad_));
        const Mpfr bd = abs_down(b.mid_);
        Mpfr gap(R), den(R);
        mpfr_sub(gap.get(), bd.get(), b.rad_.get(), MPFR_RNDD);
        if (mpfr_sgn(gap.get()) <= 0) throw PrecisionError("division by a ball containing zero");
        mpfr_mul(den.get(), bd.get(), gap.get(), MPFR_RNDD);
        Mpfr q(R);
        mpfr_div(q.get(), num.get(), den.get(), MPFR_RNDU);
        add_up(r.rad_, q);
    }
    r.add_rounding(t);
    return r;
}

CertReal mul_2si(const CertReal& a, long k) {
    CertReal r = a;
    mpfr_mul_2si(r.mid_.get(), r.mid_.get(), k, MPFR_RNDN);
    mpfr_mul_2si(r.rad_.get(), r.rad_.get(), k, MPFR_RNDU);
    return r;
}

CertReal sqrt_certified(const CertReal& a) {
    const Mpfr hi = a.hi();
    if (mpfr_sgn(hi.get()) < 0) throw DomainError("sqrt of a negative interval");
    const Mpfr lo = a.lo();
    if (mpfr_sgn(lo.get()) <= 0) {
        // Only the non-negative part [0, hi] has a real root.
        Mpfr top(a.prec());
        mpfr_sqrt(top.get(), hi.get(), MPFR_RNDU);
        Mpfr zero(a.prec());
        return CertReal::hull(zero, top, a.prec());
    }
    CertReal r;
    r.mid_ = Mpfr(a.prec());
    const int t = mpfr_sqrt(r.mid_.get(), a.mid_.get(), MPFR_RNDN);
    if (!a.is_exact()) {
        // |sqrt(x) - sqrt(m)| <= rad / (sqrt(lo) + sqrt(m))
        Mpfr s1(R), s2(R), den(R), q(R);
        mpfr_sqrt(s1.get(), lo.get(), MPFR_RNDD);
        mpfr_sqrt(s2.get(), a.mid_.get(), MPFR_RNDD);
        mpfr_add(den.get(), s1.get(), s2.get(), MPFR_RNDD);
        mpfr_div(q.get(), a.rad_.get(), den.get(), MPFR_RNDU);
        add_up(r.rad_, q);
    }
    r.add_rounding(t);
    return r;
}

CertReal abs(const CertReal& a) {
    const int s = a.sign();
    if (s > 0) return a;
    if (s < 0) return -a;
    Mpfr m(R);
    mpfr_abs(m.get(), a.mid_.get(), MPFR_RNDU);
    add_up(m, a.rad_);
    Mpfr zero(a.prec());
    return CertReal::hull(zero, m, a.prec());
}

CertReal sqr(const CertReal& a) {
    const CertReal b = abs(a);
    return b * b;
}

CertReal sin(const CertReal& a) {
    CertReal r;
    r.mid_ = Mpfr(a.prec());
    const int t = mpfr_sin(r.mid_.get(), a.mid_.get(), MPFR_RNDN);
    r.rad_ = a.rad_;  // Lipschitz constant 1
    r.add_rounding(t);
    return r;
}

CertReal cos(const CertReal& a) {
    CertReal r;
    r.mid_ = Mpfr(a.prec());
    const int t = mpfr_cos(r.mid_.get(), a.mid_.get(), MPFR_RNDN);
    r.rad_ = a.rad_;
    r.add_rounding(t);
    return r;
}

CertReal operator+(const CertReal& a, long b) { return a + CertReal(b, 64); }
CertReal operator-(const CertReal& a, long b) { return a - CertReal(b, 64); }
CertReal operator-(long a, const CertReal& b) { return CertReal(a, 64) - b; }
CertReal operator*(const CertReal& a, long b) { return a * CertReal(b, 64); }
CertReal operator/(const CertReal& a, long b) { return a / CertReal(b, 64); }
CertReal operator/(long a, const CertReal& b) { return CertReal(a, 64) / b; }

Order compare_certified(const CertReal& a, const CertReal& b) {
    // Exact endpoint comparison: a.hi < b.lo  <=>  b.mid - a.mid > a.rad + b.rad.
    const Bits p = std::max(a.prec(), b.prec()) + 2;
    Mpfr ahi(p), blo(p), alo(p), bhi(p);
    mpfr_add(ahi.get(), a.mid().get(), a.rad().get(), MPFR_RNDU);
    mpfr_sub(blo.get(), b.mid().get(), b.rad().get(), MPFR_RNDD);
    if (mpfr_cmp(ahi.get(), blo.get()) < 0) return Order::Less;
    mpfr_sub(alo.get(), a.mid().get(), a.rad().get(), MPFR_RNDD);
    mpfr_add(bhi.get(), b.mid().get(), b.rad().get(), MPFR_RNDU);
    if (mpfr_cmp(alo.get(), bhi.get()) > 0) return Order::Greater;
    return Order::Undecidable;
}

CertReal max(const CertReal& a, const CertReal& b) {
    const Bits p = std::max(a.prec(), b.prec());
    Mpfr lo(p + 2), hi(p + 2);
    mpfr_max(lo.get(), a.lo().get(), b.lo().get(), MPFR_RNDD);
    mpfr_max(hi.get(), a.hi().get(), b.hi().get(), MPFR_RNDU);
    return CertReal::hull(lo, hi, p);
}

CertReal min(const CertReal& a, const CertReal& b) {
    const Bits p = std::max(a.prec(), b.prec());
    Mpfr lo(p + 2), hi(p + 2);
    mpfr_min(lo.get(), a.lo().get(), b.lo().get(), MPFR_RNDD);
    mpfr_min(hi.get(), a.hi().get(), b.hi().get(), MPFR_RNDU);
    return CertReal::hull(lo, hi, p);
}

CertReal join(const CertReal& a, const CertReal& b) {
    const Bits p = std::max(a.prec(), b.prec());
    Mpfr lo(p + 2), hi(p + 2);
    mpfr_min(lo.get(), a.lo().get(), b.lo().get(), MPFR_RNDD);
    mpfr_max(hi.get(), a.hi().get(), b.hi().get(), MPFR_RNDU);
    return CertReal::hull(lo, hi, p);
}

CertReal upper(const CertReal& a) {
    const CertReal b = abs(a);
    return CertReal::from_mpfr(b.hi());
}

CertReal lower(const CertReal& a) {
    const CertReal b = abs(a);
    Mpfr lo = b.lo();
    if (mpfr_sgn(lo.get()) < 0) mpfr_set_zero(lo.get(), 1);
    return CertReal::from_mpfr(lo);
}

// ---------------------------------------------------------------- CertComplex

CertComplex::CertComplex(CertReal re) : re_(std::move(re)), im_(0, re_.prec()) {}

CertComplex CertComplex::i(Bits prec) { return {CertReal(0, prec), CertReal(1, prec)}; }

Bits CertComplex::prec() const { return std::max(re_.prec(), im_.prec()); }

CertReal CertComplex::abs2() const { return sqr(re_) + sqr(im_); }

CertReal CertComplex::abs() const { return sqrt_certified(abs2()); }

CertComplex& CertComplex::operator+=(const CertComplex& o) { return *this = *this + o; }
CertComplex& CertComplex::operator-=(const CertComplex& o) { return *this = *this - o; }
CertComplex& CertComplex::operator*=(const CertComplex& o) { return *this = *this * o; }

CertComplex operator+(const CertComplex& a, const CertComplex& b) {
    return {a.re() + b.re(), a.im() + b.im()};
}

CertComplex operator-(const CertComplex& a, const CertComplex& b) {
    return {a.re() - b.re(), a.im() - b.im()};
}

CertComplex operator*(const CertComplex& a, const CertComplex& b) {
    return {a.re() * b.re() - a.im() * b.im(), a.re() * b.im() + a.im() * b.re()};
}

CertComplex operator/(const CertComplex& a, const CertComplex& b) {
    const CertReal d = b.abs2();
    const CertComplex n = a * b.conj();
    return {n.re() / d, n.im() / d};
}

CertComplex operator*(const CertComplex& a, const CertReal& b) { return {a.re() * b, a.im() * b}; }
CertComplex operator*(const CertReal& a, const CertComplex& b) { return b * a; }
CertComplex operator/(const CertComplex& a, const CertReal& b) { return {a.re() / b, a.im() / b}; }
CertComplex operator+(const CertComplex& a, const CertReal& b) { return {a.re() + b, a.im()}; }
CertComplex operator+(const CertReal& a, const CertComplex& b) { return b + a; }
CertComplex operator-(const CertComplex& a, const CertReal& b) { return {a.re() - b, a.im()}; }
CertComplex operator-(const CertReal& a, const CertComplex& b) { return {a - b.re(), -b.im()}; }

CertComplex mul_i(const CertComplex& a) { return {-a.im(), a.re()}; }

CertComplex mul_2si(const CertComplex& a, long k) { return {mul_2si(a.re(), k), mul_2si(a.im(), k)}; }

}  // namespace hrank

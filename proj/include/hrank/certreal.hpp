#pragma once

#include <mpfr.h>

#include <string>

#include "hrank/errors.hpp"

namespace hrank {

using Bits = mpfr_prec_t;

// Owning wrapper around mpfr_t with value semantics.
class Mpfr {
public:
    explicit Mpfr(Bits prec = 64);
    Mpfr(const Mpfr& other);
    Mpfr(Mpfr&& other) noexcept;
    Mpfr& operator=(const Mpfr& other);
    Mpfr& operator=(Mpfr&& other) noexcept;
    ~Mpfr();

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }
    Bits prec() const { return mpfr_get_prec(v_); }

    // Shortest decimal that reads back to the same value at prec().
    std::string to_decimal() const;
    // Parses a decimal at the given precision; returns the MPFR ternary value.
    int set_decimal(const std::string& s, mpfr_rnd_t rnd = MPFR_RNDN);

private:
    mpfr_t v_;
};

struct PrecisionContext {
    Bits bits = 256;
    Bits max_bits = Bits(1) << 18;
    int escalation_factor = 2;

    // Returns false when the ceiling is already reached.
    bool escalate();
};

enum class Order { Less, Greater, Undecidable };

// Real ball: mid ± rad. The midpoint carries the working precision, the
// radius is a 64-bit upper bound. Every operation adds its rounding error to
// the radius, so the ball always encloses the exact result.
class CertReal {
public:
    static constexpr Bits kRadBits = 64;

    CertReal();
    CertReal(long v, Bits prec);
    static CertReal from_double(double v, Bits prec);
    static CertReal from_decimal(const std::string& s, Bits prec);
    // Exact midpoint (read at prec) plus an explicit radius.
    static CertReal from_ball(const std::string& mid, const std::string& rad, Bits prec);
    static CertReal from_mpfr(const Mpfr& mid);
    static CertReal hull(const Mpfr& lo, const Mpfr& hi, Bits prec);
    static CertReal pi(Bits prec);
    static CertReal pow2(long e, Bits prec);

    Bits prec() const { return mid_.prec(); }
    const Mpfr& mid() const { return mid_; }
    const Mpfr& rad() const { return rad_; }
    Mpfr lo() const;
    Mpfr hi() const;
    bool is_exact() const;

    // Re-rounds the midpoint to p bits, absorbing the error into the radius.
    CertReal at(Bits p) const;
    // Same midpoint, radius dropped. Only for non-certified iterations.
    CertReal point() const;

    double to_double() const;
    // log2 of the midpoint magnitude (works far outside double range).
    double log2_abs() const;
    std::string str(int digits = 20) const;

    // +1 if certainly positive, -1 if certainly negative, 0 otherwise.
    int sign() const;
    bool contains_zero() const { return sign() == 0; }

    CertReal operator-() const;
    CertReal& operator+=(const CertReal& o);
    CertReal& operator-=(const CertReal& o);
    CertReal& operator*=(const CertReal& o);
    CertReal& operator/=(const CertReal& o);

    friend CertReal operator+(const CertReal& a, const CertReal& b);
    friend CertReal operator-(const CertReal& a, const CertReal& b);
    friend CertReal operator*(const CertReal& a, const CertReal& b);
    friend CertReal operator/(const CertReal& a, const CertReal& b);
    friend CertReal mul_2si(const CertReal& a, long k);
    friend CertReal sqrt_certified(const CertReal& a);
    friend CertReal abs(const CertReal& a);
    friend CertReal sqr(const CertReal& a);
    friend CertReal sin(const CertReal& a);
    friend CertReal cos(const CertReal& a);

private:
    Mpfr mid_;
    Mpfr rad_;
    void add_rounding(int ternary);
};

CertReal operator+(const CertReal& a, long b);
CertReal operator-(const CertReal& a, long b);
CertReal operator-(long a, const CertReal& b);
CertReal operator*(const CertReal& a, long b);
CertReal operator/(const CertReal& a, long b);
CertReal operator/(long a, const CertReal& b);

Order compare_certified(const CertReal& a, const CertReal& b);
inline bool certainly_less(const CertReal& a, const CertReal& b) {
    return compare_certified(a, b) == Order::Less;
}
inline bool certainly_greater(const CertReal& a, const CertReal& b) {
    return compare_certified(a, b) == Order::Greater;
}

// Enclosure of max/min over all members of the two balls.
CertReal max(const CertReal& a, const CertReal& b);
CertReal min(const CertReal& a, const CertReal& b);
// Smallest ball enclosing both.
CertReal join(const CertReal& a, const CertReal& b);
// Upper bound of |a| as a point value (for budgets).
CertReal upper(const CertReal& a);
CertReal lower(const CertReal& a);

class CertComplex {
public:
    CertComplex() = default;
    CertComplex(CertReal re, CertReal im) : re_(std::move(re)), im_(std::move(im)) {}
    explicit CertComplex(CertReal re);
    static CertComplex i(Bits prec);

    const CertReal& re() const { return re_; }
    const CertReal& im() const { return im_; }
    CertReal& re() { return re_; }
    CertReal& im() { return im_; }
    Bits prec() const;

    CertComplex conj() const { return {re_, -im_}; }
    CertReal abs2() const;
    CertReal abs() const;
    CertComplex point() const { return {re_.point(), im_.point()}; }
    CertComplex at(Bits p) const { return {re_.at(p), im_.at(p)}; }
    bool contains_zero() const { return re_.contains_zero() && im_.contains_zero(); }

    CertComplex operator-() const { return {-re_, -im_}; }
    CertComplex& operator+=(const CertComplex& o);
    CertComplex& operator-=(const CertComplex& o);
    CertComplex& operator*=(const CertComplex& o);

private:
    CertReal re_;
    CertReal im_;
};

CertComplex operator+(const CertComplex& a, const CertComplex& b);
CertComplex operator-(const CertComplex& a, const CertComplex& b);
CertComplex operator*(const CertComplex& a, const CertComplex& b);
CertComplex operator/(const CertComplex& a, const CertComplex& b);
CertComplex operator*(const CertComplex& a, const CertReal& b);
CertComplex operator*(const CertReal& a, const CertComplex& b);
CertComplex operator/(const CertComplex& a, const CertReal& b);
CertComplex operator+(const CertComplex& a, const CertReal& b);
CertComplex operator+(const CertReal& a, const CertComplex& b);
CertComplex operator-(const CertComplex& a, const CertReal& b);
CertComplex operator-(const CertReal& a, const CertComplex& b);
// Multiplication by i.
CertComplex mul_i(const CertComplex& a);
CertComplex mul_2si(const CertComplex& a, long k);

}  // namespace hrank

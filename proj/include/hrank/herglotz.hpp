#pragma once

#include <cstddef>
#include <vector>

#include "hrank/certreal.hpp"

namespace hrank {

struct Atom {
    CertReal t;
    CertReal mu;
    CertReal c;
};

// Atomic Herglotz data {(t_n, mu_n, c_n)} in creation order. Indices are
// zero-based in the library; serialized files use one-based atom numbers.
class ClarkSystem {
public:
    ClarkSystem() = default;
    // Throws DomainError for coincident atoms and PrecisionError if two
    // atoms cannot be ordered at their precision.
    explicit ClarkSystem(std::vector<Atom> atoms);

    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }
    const Atom& operator[](std::size_t n) const { return atoms_[n]; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    // Atom indices sorted by increasing t.
    const std::vector<std::size_t>& order() const { return order_; }
    Bits prec() const;

    ClarkSystem with_atom(Atom a) const;
    // Copy with every atom re-rounded to p bits (exact atoms stay exact when
    // they fit).
    ClarkSystem at(Bits p) const;
    // The same poles and masses with all c_n replaced by zero.
    ClarkSystem without_c() const;

private:
    std::vector<Atom> atoms_;
    std::vector<std::size_t> order_;
};

enum class Weights { Mu, CTimesMu };

struct Zero {
    CertReal lambda;
    // Certified sign change: f(lo) < 0 < f(hi).
    Mpfr lo;
    Mpfr hi;
    // Zero lies in (p_k, p_{k+1}) for the sorted poles; the last index is the
    // unbounded interval (p_K, inf).
    int interval_index = 0;
};

struct ZeroSet {
    std::vector<Zero> zeros;
};

// Result of aligning zeros across a stage. new_of_old[k] is the index (into
// the new ZeroSet) continuing old zero k; unmatched is the fresh zero, or -1.
struct ZeroMatch {
    std::vector<int> new_of_old;
    int unmatched = -1;
};

CertComplex eval_cauchy_sum(const ClarkSystem& sys, const CertComplex& z, Weights w);
CertReal eval_cauchy_sum(const ClarkSystem& sys, const CertReal& x, Weights w);

// H(x) = 1 + sum c_n mu_n / (t_n - x).
CertReal eval_H(const ClarkSystem& sys, const CertReal& x);

// theta = (S - i)/(S + i). At an atom the limit 1 is returned only when
// allow_limit is set; otherwise PoleError.
CertComplex eval_inner(const ClarkSystem& sys, const CertComplex& z, bool allow_limit = false);

// |theta'(t_n)| = 2/mu_n.
CertReal inner_derivative_at_atom(const ClarkSystem& sys, std::size_t n);

// phi = (1 - theta) * H-bracket, evaluated in a form that stays finite at the
// atoms (where |phi(t_m)| = 2 c_m).
CertComplex eval_phi(const ClarkSystem& sys, const CertComplex& z);

// All zeros of H(x) - level, one per inter-pole interval plus the one right
// of the largest pole. Brackets are certified by sign evaluation.
ZeroSet solve_level_set(const ClarkSystem& sys, const CertReal& level);

ZeroMatch match_zeros(const ClarkSystem& old_sys, const ZeroSet& old_zeros,
                      const ClarkSystem& new_sys, const ZeroSet& new_zeros);

// Index of the atom whose pole is nearest to x (by midpoints).
std::size_t nearest_atom(const ClarkSystem& sys, const CertComplex& z);

}  // namespace hrank

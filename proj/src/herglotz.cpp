#include "hrank/herglotz.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hrank {

// ---------------------------------------------------------------- ClarkSystem

ClarkSystem::ClarkSystem(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    order_.resize(atoms_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    for (std::size_t a = 0; a < atoms_.size(); ++a) {
        for (std::size_t b = a + 1; b < atoms_.size(); ++b) {
            const Order o = compare_certified(atoms_[a].t, atoms_[b].t);
            if (o == Order::Undecidable) {
                if (atoms_[a].t.is_exact() && atoms_[b].t.is_exact() &&
                    mpfr_equal_p(atoms_[a].t.mid().get(), atoms_[b].t.mid().get()))
                    throw DomainError("coincident atoms");
                throw PrecisionError("atoms cannot be ordered at this precision");
            }
        }
    }
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
        return mpfr_cmp(atoms_[a].t.mid().get(), atoms_[b].t.mid().get()) < 0;
    });
}

Bits ClarkSystem::prec() const {
    Bits p = 64;
    for (const auto& a : atoms_) p = std::max({p, a.t.prec(), a.mu.prec(), a.c.prec()});
    return p;
}

ClarkSystem ClarkSystem::with_atom(Atom a) const {
    auto v = atoms_;
    v.push_back(std::move(a));
    return ClarkSystem(std::move(v));
}

ClarkSystem ClarkSystem::at(Bits p) const {
    auto v = atoms_;
    for (auto& a : v) {
        a.t = a.t.at(std::max(p, a.t.prec()));
        a.mu = a.mu.at(std::max(p, a.mu.prec()));
        a.c = a.c.at(std::max(p, a.c.prec()));
        // Raise precision without changing exact values; lower precision
        // only when asked for a smaller working size.
        if (p < a.t.prec()) a.t = a.t.at(p);
        if (p < a.mu.prec()) a.mu = a.mu.at(p);
        if (p < a.c.prec()) a.c = a.c.at(p);
    }
    return ClarkSystem(std::move(v));
}

ClarkSystem ClarkSystem::without_c() const {
    auto v = atoms_;
    for (auto& a : v) a.c = CertReal(0, a.c.prec());
    return ClarkSystem(std::move(v));
}

// ---------------------------------------------------------------- evaluation

namespace {

bool exactly_equal(const CertReal& a, const CertReal& b) {
    return a.is_exact() && b.is_exact() && mpfr_equal_p(a.mid().get(), b.mid().get());
}

bool is_real_point(const CertComplex& z) { return z.im().is_exact() && mpfr_zero_p(z.im().mid().get()); }

int atom_at(const ClarkSystem& sys, const CertComplex& z) {
    if (!is_real_point(z)) return -1;
    for (std::size_t n = 0; n < sys.size(); ++n)
        if (exactly_equal(sys[n].t, z.re())) return static_cast<int>(n);
    return -1;
}

CertReal weight(const Atom& a, Weights w) { return w == Weights::Mu ? a.mu : a.c * a.mu; }

}  // namespace

std::size_t nearest_atom(const ClarkSystem& sys, const CertComplex& z) {
    std::size_t best = 0;
    Mpfr bestd(64), d(64);
    for (std::size_t n = 0; n < sys.size(); ++n) {
        mpfr_sub(d.get(), sys[n].t.mid().get(), z.re().mid().get(), MPFR_RNDN);
        mpfr_abs(d.get(), d.get(), MPFR_RNDN);
        if (n == 0 || mpfr_cmp(d.get(), bestd.get()) < 0) {
            best = n;
            bestd = d;
        }
    }
    return best;
}

CertComplex eval_cauchy_sum(const ClarkSystem& sys, const CertComplex& z, Weights w) {
    if (atom_at(sys, z) >= 0) throw PoleError("evaluation at an atom");
    CertComplex acc(CertReal(0, z.prec()));
    for (const auto& a : sys.atoms()) {
        const CertComplex d = a.t - z;
        acc += CertComplex(weight(a, w)) / d;
    }
    return acc;
}

CertReal eval_cauchy_sum(const ClarkSystem& sys, const CertReal& x, Weights w) {
    CertReal acc(0, x.prec());
    for (const auto& a : sys.atoms()) {
        if (exactly_equal(a.t, x)) throw PoleError("evaluation at an atom");
        acc += weight(a, w) / (a.t - x);
    }
    return acc;
}

CertReal eval_H(const ClarkSystem& sys, const CertReal& x) {
    return eval_cauchy_sum(sys, x, Weights::CTimesMu) + 1;
}

CertComplex eval_inner(const ClarkSystem& sys, const CertComplex& z, bool allow_limit) {
    if (atom_at(sys, z) >= 0) {
        if (!allow_limit) throw PoleError("inner function evaluated at an atom");
        return CertComplex(CertReal(1, z.prec()));
    }
    const CertComplex S = eval_cauchy_sum(sys, z, Weights::Mu);
    const CertComplex i = CertComplex::i(z.prec());
    return (S - i) / (S + i);
}

CertReal inner_derivative_at_atom(const ClarkSystem& sys, std::size_t n) {
    if (n >= sys.size()) throw IndexError("atom index out of range");
    return 2 / sys[n].mu;
}

CertComplex eval_phi(const ClarkSystem& sys, const CertComplex& z) {
    // With u = t_m - z for the nearest atom m, S = mu_m/u + R and
    // H = 1 + c_m mu_m/u + Q, so phi = 2i (u (1 + Q) + c_m mu_m) / (mu_m + u (R + i)).
    const Bits p = std::max(z.prec(), sys.prec());
    if (sys.empty()) return CertComplex(CertReal(0, p));
    const std::size_t m = nearest_atom(sys, z);
    const CertComplex u = sys[m].t - z;
    CertComplex R(CertReal(0, p)), Q(CertReal(0, p));
    for (std::size_t n = 0; n < sys.size(); ++n) {
        if (n == m) continue;
        const CertComplex inv = CertComplex(CertReal(1, p)) / (sys[n].t - z);
        R += sys[n].mu * inv;
        Q += (sys[n].c * sys[n].mu) * inv;
    }
    const CertComplex num = u * (Q + CertReal(1, p)) + sys[m].c * sys[m].mu;
    const CertComplex den = u * (R + CertComplex::i(p)) + sys[m].mu;
    return mul_i(mul_2si(num / den, 1));
}

// ---------------------------------------------------------------- zeros

namespace {

// f(x) = (1 - level) + sum w_n / (t_n - x), increasing between poles.
class LevelFunction {
public:
    LevelFunction(const ClarkSystem& sys, const CertReal& level, Bits p) : sys_(sys), p_(p) {
        base_ = CertReal(1, p) - level;
        for (const auto& a : sys.atoms()) {
            if (a.c.sign() <= 0) throw DomainError("bracket weights must be positive");
            w_.push_back(a.c * a.mu);
        }
    }

    CertReal value(const Mpfr& x) const {
        const CertReal X = CertReal::from_mpfr(x);
        CertReal acc = base_;
        for (std::size_t n = 0; n < w_.size(); ++n) acc += w_[n] / (sys_[n].t - X);
        return acc;
    }

    // Point derivative sum w_n / (t_n - x)^2, used only to propose Newton steps.
    Mpfr derivative(const Mpfr& x) const {
        Mpfr acc(p_), d(p_), q(p_);
        for (std::size_t n = 0; n < w_.size(); ++n) {
            mpfr_sub(d.get(), sys_[n].t.mid().get(), x.get(), MPFR_RNDN);
            mpfr_sqr(d.get(), d.get(), MPFR_RNDN);
            mpfr_div(q.get(), w_[n].mid().get(), d.get(), MPFR_RNDN);
            mpfr_add(acc.get(), acc.get(), q.get(), MPFR_RNDN);
        }
        return acc;
    }

    Bits prec() const { return p_; }
    const std::vector<CertReal>& weights() const { return w_; }
    const CertReal& base() const { return base_; }

private:
    const ClarkSystem& sys_;
    Bits p_;
    CertReal base_;
    std::vector<CertReal> w_;
};

bool strictly_inside(const Mpfr& m, const Mpfr& a, const Mpfr& b) {
    return mpfr_cmp(a.get(), m.get()) < 0 && mpfr_cmp(m.get(), b.get()) < 0;
}

// Tolerance for the final bracket width: a few units in the last place.
Mpfr width_tolerance(const Mpfr& a, const Mpfr& b, Bits p) {
    Mpfr mag(64), tmp(64);
    mpfr_abs(mag.get(), a.get(), MPFR_RNDU);
    mpfr_abs(tmp.get(), b.get(), MPFR_RNDU);
    mpfr_max(mag.get(), mag.get(), tmp.get(), MPFR_RNDU);
    Mpfr tol(64);
    if (mpfr_zero_p(mag.get())) {
        mpfr_set_ui_2exp(tol.get(), 1, -p, MPFR_RNDN);
    } else {
        mpfr_set_ui_2exp(tol.get(), 1, mpfr_get_exp(mag.get()) - p + 4, MPFR_RNDN);
    }
    return tol;
}

// p + s for the pole p and offset s (s may be negative), rounded to prec.
Mpfr offset_point(const Mpfr& pole, const Mpfr& s, Bits prec) {
    Mpfr m(prec);
    mpfr_add(m.get(), pole.get(), s.get(), MPFR_RNDN);
    return m;
}

Zero solve_interval(const LevelFunction& f, const Mpfr& left, const Mpfr* right, int index) {
    const Bits p = f.prec();
    Mpfr a(p), b(p);
    bool have_a = false, have_b = false;

    // Right end first so that the offsets for the left end have a scale.
    Mpfr width(64);
    if (right) {
        mpfr_sub(width.get(), right->get(), left.get(), MPFR_RNDN);
    } else {
        // f(x) >= (1 - level) - sum w / (x - p_max), so this offset gives f > 0.
        CertReal total(0, 64);
        for (const auto& w : f.weights()) total += upper(w);
        const CertReal off = mul_2si(total / lower(f.base()), 1) + CertReal::pow2(-40, 64);
        Mpfr s = off.hi();
        for (int k = 0; k < 64 && !have_b; ++k) {
            b = offset_point(left, s, p);
            if (f.value(b).sign() > 0) have_b = true;
            mpfr_mul_2ui(s.get(), s.get(), 1, MPFR_RNDU);
        }
        if (!have_b) throw PrecisionError("cannot certify a positive value right of the last pole");
        mpfr_sub(width.get(), b.get(), left.get(), MPFR_RNDN);
    }

    // Offsets eta_j = width * 2^(-2^j): reaches any resolvable distance in
    // O(log bits) evaluations. The last opposite-sign point seeds the other end.
    auto seed = [&](const Mpfr& pole, int dir, Mpfr& out, Mpfr& other, bool& have_other) {
        for (int j = 1; (1L << j) < 2 * p + 64; ++j) {
            Mpfr eta(64);
            mpfr_mul_2si(eta.get(), width.get(), -(1L << j), MPFR_RNDN);
            if (dir < 0) mpfr_neg(eta.get(), eta.get(), MPFR_RNDN);
            const Mpfr x = offset_point(pole, eta, p);
            if (mpfr_equal_p(x.get(), pole.get())) break;
            const int s = f.value(x).sign();
            if (s == -dir) {
                out = x;
                return true;
            }
            if (s == dir) {
                other = x;
                have_other = true;
            }
        }
        return false;
    };

    Mpfr extra(p);
    bool have_extra = false;
    if (!seed(left, 1, a, extra, have_extra))
        throw PrecisionError("cannot seed the bracket next to a pole");
    have_a = true;
    if (right) {
        Mpfr extra_a(p);
        bool have_extra_a = false;
        if (!seed(*right, -1, b, extra_a, have_extra_a))
            throw PrecisionError("cannot seed the bracket next to a pole");
        have_b = true;
        if (have_extra_a && mpfr_cmp(extra_a.get(), a.get()) > 0) a = extra_a;
    }
    if (have_extra && mpfr_cmp(extra.get(), b.get()) < 0) b = extra;
    (void)have_a;

    // Refinement. Geometric splits while an end hugs a pole (log-scale
    // bisection), otherwise safeguarded Newton; every accepted point updates
    // the bracket through a certified sign.
    Mpfr tol = width_tolerance(a, b, p);
    Mpfr x(p), fx(p), fx_rad(64);
    bool have_x = false;
    Mpfr prev_step(64);
    mpfr_set_inf(prev_step.get(), 1);
    auto try_tight = [&](const Mpfr& m, Mpfr r) {
        for (int k = 0; k < 12; ++k) {
            Mpfr lo(p), hi(p);
            mpfr_sub(lo.get(), m.get(), r.get(), MPFR_RNDD);
            mpfr_add(hi.get(), m.get(), r.get(), MPFR_RNDU);
            if (mpfr_cmp(lo.get(), a.get()) < 0) lo = a;
            if (mpfr_cmp(hi.get(), b.get()) > 0) hi = b;
            const int sl = mpfr_equal_p(lo.get(), a.get()) ? -1 : f.value(lo).sign();
            const int sh = mpfr_equal_p(hi.get(), b.get()) ? 1 : f.value(hi).sign();
            if (sl < 0) a = lo;
            if (sh > 0) b = hi;
            if (sl < 0 && sh > 0) return true;
            mpfr_mul_2ui(r.get(), r.get(), 2, MPFR_RNDU);
        }
        return false;
    };

    const long cap = 8 * static_cast<long>(p) + 400;
    for (long iter = 0; iter < cap; ++iter) {
        Mpfr w(64);
        mpfr_sub(w.get(), b.get(), a.get(), MPFR_RNDU);
        tol = width_tolerance(a, b, p);
        if (mpfr_cmp(w.get(), tol.get()) <= 0) break;

        Mpfr m(p);
        bool newton = false;
        bool chosen = false;
        {
            Mpfr da(64), db(64);
            mpfr_sub(da.get(), a.get(), left.get(), MPFR_RNDN);
            mpfr_sub(db.get(), b.get(), left.get(), MPFR_RNDN);
            Mpfr q(64);
            mpfr_mul_2ui(q.get(), da.get(), 2, MPFR_RNDN);
            if (mpfr_sgn(da.get()) > 0 && mpfr_cmp(db.get(), q.get()) > 0) {
                mpfr_mul(q.get(), da.get(), db.get(), MPFR_RNDN);
                mpfr_sqrt(q.get(), q.get(), MPFR_RNDN);
                m = offset_point(left, q, p);
                chosen = strictly_inside(m, a, b);
            }
        }
        if (!chosen && right) {
            Mpfr ea(64), eb(64);
            mpfr_sub(ea.get(), right->get(), a.get(), MPFR_RNDN);
            mpfr_sub(eb.get(), right->get(), b.get(), MPFR_RNDN);
            Mpfr q(64);
            mpfr_mul_2ui(q.get(), eb.get(), 2, MPFR_RNDN);
            if (mpfr_sgn(eb.get()) > 0 && mpfr_cmp(ea.get(), q.get()) > 0) {
                mpfr_mul(q.get(), ea.get(), eb.get(), MPFR_RNDN);
                mpfr_sqrt(q.get(), q.get(), MPFR_RNDN);
                mpfr_neg(q.get(), q.get(), MPFR_RNDN);
                m = offset_point(*right, q, p);
                chosen = strictly_inside(m, a, b);
            }
        }
        Mpfr step(p);
        if (!chosen && have_x) {
            const Mpfr d = f.derivative(x);
            if (mpfr_sgn(d.get()) > 0) {
                mpfr_div(step.get(), fx.get(), d.get(), MPFR_RNDN);
                mpfr_sub(m.get(), x.get(), step.get(), MPFR_RNDN);
                // Resolution floor: the step is below the evaluation noise of f.
                Mpfr floor_r(64);
                mpfr_div(floor_r.get(), fx_rad.get(), d.get(), MPFR_RNDU);
                mpfr_mul_2ui(floor_r.get(), floor_r.get(), 2, MPFR_RNDU);
                mpfr_max(floor_r.get(), floor_r.get(), tol.get(), MPFR_RNDU);
                if (mpfr_cmpabs(step.get(), floor_r.get()) <= 0) {
                    Mpfr r(64);
                    mpfr_abs(r.get(), step.get(), MPFR_RNDU);
                    mpfr_max(r.get(), r.get(), floor_r.get(), MPFR_RNDU);
                    if (try_tight(m, r)) break;
                }
                // Safeguard: steps that stop contracting fall back to bisection.
                Mpfr half(64);
                mpfr_div_2ui(half.get(), prev_step.get(), 1, MPFR_RNDN);
                chosen = strictly_inside(m, a, b) && mpfr_cmpabs(step.get(), half.get()) <= 0;
                newton = chosen;
                if (chosen) {
                    mpfr_abs(prev_step.get(), step.get(), MPFR_RNDN);
                } else {
                    mpfr_set_inf(prev_step.get(), 1);
                }
            }
        }
        if (!chosen) {
            mpfr_add(m.get(), a.get(), b.get(), MPFR_RNDN);
            mpfr_div_2ui(m.get(), m.get(), 1, MPFR_RNDN);
            if (!strictly_inside(m, a, b)) break;
        }

        const CertReal fm = f.value(m);
        const int s = fm.sign();
        if (s < 0) a = m;
        if (s > 0) b = m;
        x = m;
        fx = fm.mid();
        fx_rad = fm.rad();
        have_x = true;
        if (s == 0) {
            // m is within evaluation noise of the zero.
            const Mpfr d = f.derivative(m);
            Mpfr r(64);
            if (mpfr_sgn(d.get()) > 0) {
                mpfr_div(r.get(), fx_rad.get(), d.get(), MPFR_RNDU);
                mpfr_mul_2ui(r.get(), r.get(), 1, MPFR_RNDU);
            }
            mpfr_max(r.get(), r.get(), tol.get(), MPFR_RNDU);
            if (try_tight(m, r)) break;
            throw PrecisionError("zero cannot be bracketed at this precision");
        }
        (void)newton;
    }

    Zero z;
    z.lo = a;
    z.hi = b;
    z.lambda = CertReal::hull(a, b, p);
    z.interval_index = index;
    return z;
}

}  // namespace

ZeroSet solve_level_set(const ClarkSystem& sys, const CertReal& level) {
    if (!certainly_less(level, CertReal(1, 64))) throw DomainError("level must be < 1");
    if (level.sign() < 0) throw DomainError("level must be >= 0");
    const Bits p = std::max(sys.prec(), level.prec());
    const LevelFunction f(sys, level, p);
    ZeroSet out;
    const auto& ord = sys.order();
    for (std::size_t k = 0; k < ord.size(); ++k) {
        const Mpfr& left = sys[ord[k]].t.mid();
        if (k + 1 < ord.size()) {
            out.zeros.push_back(solve_interval(f, left, &sys[ord[k + 1]].t.mid(), static_cast<int>(k)));
        } else {
            out.zeros.push_back(solve_interval(f, left, nullptr, static_cast<int>(k)));
        }
    }
    return out;
}

ZeroMatch match_zeros(const ClarkSystem& old_sys, const ZeroSet& old_zeros,
                      const ClarkSystem& new_sys, const ZeroSet& new_zeros) {
    // Every old pole must reappear; at most one pole is new.
    const std::size_t K = old_sys.size();
    if (new_sys.size() != K && new_sys.size() != K + 1)
        throw AmbiguousMatch("pole sets differ by more than one atom");
    for (std::size_t n = 0; n < K; ++n) {
        if (!mpfr_equal_p(old_sys[n].t.mid().get(), new_sys[n].t.mid().get()))
            throw AmbiguousMatch("pole sets are not nested");
    }
    if (old_zeros.zeros.size() != K || new_zeros.zeros.size() != new_sys.size())
        throw AmbiguousMatch("zero count does not match pole count");

    // Position of each new interval in terms of sorted new poles.
    const auto& ord = new_sys.order();
    std::vector<int> rank(new_sys.size());
    for (std::size_t k = 0; k < ord.size(); ++k) rank[ord[k]] = static_cast<int>(k);
    std::vector<int> zero_in_interval(new_sys.size(), -1);
    for (std::size_t z = 0; z < new_zeros.zeros.size(); ++z) {
        const int k = new_zeros.zeros[z].interval_index;
        if (k < 0 || k >= static_cast<int>(new_sys.size()) || zero_in_interval[k] >= 0)
            throw AmbiguousMatch("interval holds an uncertifiable zero count");
        zero_in_interval[k] = static_cast<int>(z);
    }

    ZeroMatch m;
    m.new_of_old.assign(K, -1);
    std::vector<bool> used(new_sys.size(), false);
    for (std::size_t z = 0; z < K; ++z) {
        // Left pole of the old interval, as an index into the shared atoms.
        const int k_old = old_zeros.zeros[z].interval_index;
        const std::size_t pole = old_sys.order()[k_old];
        int k_new = rank[pole];
        if (new_sys.size() == K + 1) {
            // If the new pole sits right after this pole, decide the side.
            const std::size_t next = (k_new + 1 < static_cast<int>(ord.size())) ? ord[k_new + 1] : pole;
            if (next == K) {
                const Order o = compare_certified(old_zeros.zeros[z].lambda, new_sys[K].t);
                if (o == Order::Undecidable) throw AmbiguousMatch("old zero too close to the new pole");
                if (o == Order::Greater) k_new += 1;
            }
        }
        const int nz = zero_in_interval[k_new];
        if (nz < 0 || used[nz]) throw AmbiguousMatch("interval holds an uncertifiable zero count");
        used[nz] = true;
        m.new_of_old[z] = nz;
    }
    for (std::size_t z = 0; z < used.size(); ++z)
        if (!used[z]) m.unmatched = static_cast<int>(z);
    return m;
}

}  // namespace hrank

#include "hrank/construct.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace hrank {

// ------------------------------------------------------------------ Schedule

Schedule Schedule::custom(std::vector<int> targets) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const int N = static_cast<int>(i) + 2;
        if (targets[i] < 1 || targets[i] >= N) throw ConfigError("custom schedule needs 1 <= l(N) < N");
    }
    Schedule s;
    s.rule_ = Rule::Custom;
    s.custom_ = std::move(targets);
    return s;
}

int Schedule::target(int N) const {
    if (N < 2) throw IndexError("schedule starts at N = 2");
    if (rule_ == Rule::Custom) {
        const std::size_t i = static_cast<std::size_t>(N - 2);
        if (i >= custom_.size()) throw IndexError("custom schedule too short");
        return custom_[i];
    }
    // 1, 1,2, 1,2,3, ... indexed from N = 2.
    int pos = N - 2;
    for (int block = 1;; ++block) {
        if (pos < block) return pos + 1;
        pos -= block;
    }
}

std::string Schedule::name() const { return rule_ == Rule::Triangular ? "triangular" : "custom"; }

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        default: return "UNDECIDABLE";
    }
}

// -------------------------------------------------------------- Certificates

Certificate make_certificate(const std::string& name, const CertReal& lhs, const CertReal& rhs, Bits p, int index,
                             const std::string& part) {
    Certificate c;
    c.name = name;
    c.part = part;
    c.index = index;
    c.precision_bits = p;
    const Mpfr lhi = lhs.hi(), llo = lhs.lo(), rlo = rhs.lo(), rhi = rhs.hi();
    c.lhs_upper = CertReal::from_mpfr(lhi);
    c.rhs_lower = CertReal::from_mpfr(rlo);
    c.margin = c.rhs_lower - c.lhs_upper;
    if (mpfr_less_p(lhi.get(), rlo.get())) c.verdict = Verdict::Pass;
    else if (mpfr_greaterequal_p(llo.get(), rhi.get())) c.verdict = Verdict::Fail;
    else c.verdict = Verdict::Undecidable;
    return c;
}

namespace {

Verdict worst(Verdict a, Verdict b) {
    if (a == Verdict::Fail || b == Verdict::Fail) return Verdict::Fail;
    if (a == Verdict::Undecidable || b == Verdict::Undecidable) return Verdict::Undecidable;
    return Verdict::Pass;
}

Verdict overall(const std::vector<Certificate>& cs) {
    Verdict v = Verdict::Pass;
    for (const auto& c : cs) v = worst(v, c.verdict);
    return v;
}

// One certificate standing for several instances sharing a target: the
// first failing one, else the first undecidable one, else the tightest.
Certificate aggregate(const std::vector<Certificate>& cs) {
    const Certificate* pick = &cs.front();
    for (const auto& c : cs) {
        if (pick->verdict == Verdict::Fail) break;
        if (c.verdict == Verdict::Fail || (c.verdict == Verdict::Undecidable && pick->verdict == Verdict::Pass)) {
            pick = &c;
            continue;
        }
        if (c.verdict == pick->verdict && mpfr_less_p(c.margin.mid().get(), pick->margin.mid().get())) pick = &c;
    }
    return *pick;
}

CertReal cube(const CertReal& x) { return sqr(x) * x; }

}  // namespace

Verdict StageRecord::verdict() const { return overall(certificates); }

const Certificate* StageRecord::find(const std::string& name, const std::string& part) const {
    for (const auto& c : certificates)
        if (c.name == name && c.part == part) return &c;
    return nullptr;
}

// ------------------------------------------------------------------ Stage 1

StageRecord certify_stage1(const Atom& atom, Bits bits) {
    const ClarkSystem sys({Atom{atom.t.at(bits), atom.mu.at(bits), atom.c.at(bits)}});
    const Atom& a = sys[0];
    StageRecord r;
    r.N = 1;
    r.precision_bits = bits;
    r.epsilon = sqr(a.mu);
    r.t_new = a.t;
    r.mu_new = a.mu;
    r.c_new = a.c;
    r.schedule_target = 0;
    const CertReal half = CertReal::pow2(-1, bits);
    const CertReal zero(0, bits), one(1, bits);
    r.certificates.push_back(make_certificate("positive", zero, min(min(a.t, a.mu), a.c), bits));
    r.certificates.push_back(make_certificate("cap_mu", a.mu, half, bits));
    r.certificates.push_back(make_certificate("cap_c", a.c, half, bits));
    r.certificates.push_back(make_certificate("base", a.t + a.c * a.mu, one, bits));

    const CertReal lambda = a.t + a.c * a.mu;
    r.lambdas = {lambda};
    r.interval_of = {0};
    r.delta = lower(a.c * a.mu);
    r.basis_const = basis_constant(sys, r.lambdas, one);
    return r;
}

std::pair<ClarkSystem, StageRecord> init_stage1(const BaseParams& base, Bits bits) {
    Atom a;
    try {
        a.t = CertReal::from_decimal(base.t1, bits);
        a.mu = CertReal::from_decimal(base.mu1, bits);
        a.c = CertReal::from_decimal(base.c1, bits);
    } catch (const Error& e) {
        throw ConfigError(std::string("bad base parameter: ") + e.what());
    }
    const CertReal zero(0, bits), one(1, bits), half = CertReal::pow2(-1, bits);
    if (!certainly_greater(a.t, zero) || !certainly_less(a.t, one)) throw ConfigError("t1 must lie in (0, 1)");
    if (!certainly_greater(a.mu, zero) || !certainly_less(a.mu, half)) throw ConfigError("mu1 must lie in (0, 1/2)");
    if (!certainly_greater(a.c, zero) || !certainly_less(a.c, half)) throw ConfigError("c1 must lie in (0, 1/2)");
    if (!certainly_less(a.t + a.c * a.mu, one)) throw ConfigError("t1 + c1*mu1 must be < 1");
    StageRecord r = certify_stage1(a, bits);
    return {ClarkSystem({a}), std::move(r)};
}

StageInputs next_inputs(const ClarkSystem& sys, const StageRecord& rec, const Schedule& schedule) {
    StageInputs in;
    in.sys_prev = sys;
    in.interval_of_prev = rec.interval_of;
    in.A_prev = rec.basis_const;
    in.delta_prev = rec.delta;
    in.N = rec.N + 1;
    in.target = schedule.target(in.N);
    return in;
}

// ---------------------------------------------------------------- Stage N

namespace {

struct Prep {
    Bits p = 0;
    int N = 0;
    int l = 0;  // zero-based l(N) - 1
    ClarkSystem sys;
    ZeroSet zeros;
    std::vector<CertReal> lam;
    CertReal A;
    CertReal delta3;
};

Prep prepare(const StageInputs& in, Bits p) {
    Prep P;
    P.p = p;
    P.N = in.N;
    P.l = in.target - 1;
    P.sys = in.sys_prev.at(p);
    if (static_cast<int>(P.sys.size()) != in.N - 1) throw IndexError("previous system has the wrong size");
    P.zeros = solve_level_set(P.sys, CertReal(0, p));
    for (int k : in.interval_of_prev) P.lam.push_back(P.zeros.zeros.at(static_cast<std::size_t>(k)).lambda);
    P.A = in.A_prev;
    P.delta3 = cube(in.delta_prev);
    return P;
}

std::size_t nearest_index(const ZeroSet& zs, const CertReal& target) {
    std::vector<CertReal> d;
    for (const auto& z : zs.zeros) d.push_back(abs(z.lambda - target));
    std::size_t best = 0;
    for (std::size_t k = 1; k < d.size(); ++k)
        if (mpfr_less_p(d[k].mid().get(), d[best].mid().get())) best = k;
    for (std::size_t k = 0; k < d.size(); ++k)
        if (k != best && !certainly_less(d[best], d[k])) throw TieBreak("nearest level-set zero is not certified");
    return best;
}

struct EpsOutcome {
    CertReal eps;
    CertReal mu;
    CertReal t;
    std::vector<CertReal> pnb;
    std::vector<Certificate> certs;
    Verdict verdict = Verdict::Undecidable;
};

EpsOutcome eps_phase(const Prep& P, const CertReal& eps, const CertReal& mu, const std::optional<CertReal>& t_given) {
    const Bits p = P.p;
    const int N = P.N;
    EpsOutcome E;
    E.eps = eps;
    E.mu = mu;
    const ZeroSet ze = solve_level_set(P.sys, eps);
    const CertReal xstar = ze.zeros[nearest_index(ze, P.lam[P.l])].lambda;
    E.t = t_given ? *t_given : CertReal::from_mpfr(xstar.mid());
    const CertReal& t = E.t;
    const CertReal dist_l = abs(t - P.lam[P.l]);

    auto& cs = E.certs;
    cs.push_back(make_certificate("eps_cap", eps, CertReal::pow2(-2 * N - 4, p) / P.A, p));
    cs.push_back(make_certificate("eps", abs(t - xstar), mul_2si(dist_l, -32), p));
    cs.push_back(make_certificate("bbb", dist_l, mul_2si(P.delta3, -6 * N), p));
    cs.push_back(make_certificate("mu_sqrt", abs(sqr(mu) - eps), mul_2si(eps, -64), p));
    cs.push_back(make_certificate("cap_mu", mu, CertReal::pow2(-N, p), p));

    const ClarkSystem sys_new = P.sys.with_atom(Atom{t, mu, CertReal(0, p)});
    std::vector<Certificate> sm;
    const CertReal sm_target = CertReal::pow2(-2 * N, p) / P.A;
    for (std::size_t n = 0; n < P.sys.size(); ++n) {
        E.pnb.push_back(perturbation_norm_bound(P.sys, sys_new, n));
        sm.push_back(make_certificate("sm", E.pnb.back(), sm_target, p, static_cast<int>(n) + 1));
    }
    cs.push_back(aggregate(sm));

    // The g2 part of every stage difference must leave half the (st) target.
    std::vector<Certificate> bud;
    const CertReal st_half = CertReal::pow2(-N - 3, p) / P.A;
    for (std::size_t j = 0; j < P.lam.size(); ++j)
        bud.push_back(make_certificate("st_budget", g2_bound(P.sys, P.lam[j], E.pnb), st_half, p,
                                       static_cast<int>(j) + 1));
    cs.push_back(aggregate(bud));
    E.verdict = overall(cs);
    return E;
}

struct CPhase {
    ClarkSystem sys;
    std::vector<CertReal> lam;
    std::vector<int> interval_of;
    std::vector<Certificate> certs;
    Verdict verdict = Verdict::Undecidable;
};

CPhase c_phase(const Prep& P, const StageInputs& in, const EpsOutcome& E, const CertReal& c) {
    const Bits p = P.p;
    const int N = P.N;
    CPhase C;
    C.sys = P.sys.with_atom(Atom{E.t, E.mu, c});
    const ZeroSet Z = solve_level_set(C.sys, CertReal(0, p));
    const ZeroMatch m = match_zeros(P.sys, P.zeros, C.sys, Z);
    if (m.unmatched < 0) throw AmbiguousMatch("no fresh zero");
    for (int k : in.interval_of_prev) {
        const int nz = m.new_of_old.at(static_cast<std::size_t>(k));
        C.lam.push_back(Z.zeros[nz].lambda);
        C.interval_of.push_back(Z.zeros[nz].interval_index);
    }
    C.lam.push_back(Z.zeros[m.unmatched].lambda);
    C.interval_of.push_back(Z.zeros[m.unmatched].interval_index);

    const CertReal& t = E.t;
    const CertReal& lamN = C.lam.back();
    const CertReal& laml = C.lam[P.l];
    auto& cs = C.certs;
    cs.push_back(make_certificate("cap_c", c, CertReal::pow2(-N, p), p));

    std::vector<Certificate> d0, drift;
    const CertReal d0_target = mul_2si(P.delta3, -6 * N) / P.A;
    const CertReal drift_target = CertReal::pow2(-N, p);
    for (std::size_t j = 0; j + 1 < C.lam.size(); ++j) {
        const CertReal dl = abs(C.lam[j] - P.lam[j]);
        d0.push_back(make_certificate("dist0", dl, d0_target, p, static_cast<int>(j) + 1));
        drift.push_back(make_certificate("lambda_drift", dl, drift_target, p, static_cast<int>(j) + 1));
    }
    cs.push_back(aggregate(d0));
    cs.push_back(aggregate(drift));

    const CertReal gapN = abs(lamN - t);
    cs.push_back(make_certificate("dist", c / mul_2si(E.mu, 1), gapN, p, 0, "lower"));
    cs.push_back(make_certificate("dist", gapN, abs(laml - t), p, 0, "upper"));
    cs.push_back(make_certificate("dist2", abs(lamN - P.lam[P.l]), mul_2si(P.delta3, -N), p));

    // |t_m - lambda_j^N| > L_N^{1/3} for old atoms m, compared as cubes.
    const CertReal L = abs(laml - lamN);
    CertReal sep;
    bool have = false;
    for (std::size_t m2 = 0; m2 < P.sys.size(); ++m2)
        for (const auto& lj : C.lam) {
            const CertReal d = abs(P.sys[m2].t - lj);
            if (!have || mpfr_less_p(d.lo().get(), sep.lo().get())) {
                sep = d;
                have = true;
            }
        }
    cs.push_back(make_certificate("st1_sep", L, cube(sep), p));

    std::vector<Certificate> st;
    const CertReal st_target = CertReal::pow2(-N - 2, p) / P.A;
    for (std::size_t j = 0; j + 1 < C.lam.size(); ++j) {
        const StageDifference sd = stage_difference_bound(P.sys, C.sys, P.lam[j], C.lam[j], E.pnb);
        st.push_back(make_certificate("st", sd.total, st_target, p, static_cast<int>(j) + 1));
    }
    cs.push_back(aggregate(st));

    const GapReport g = pairwise_gap(C.sys, C.lam, static_cast<std::size_t>(P.l), C.lam.size() - 1);
    cs.push_back(make_certificate("st1", g.gap, CertReal::pow2(-N - 1, p), p));
    C.verdict = overall(cs);
    return C;
}

StageRecord finish(const Prep& P, const StageInputs& in, const EpsOutcome& E, const CPhase& C, const CertReal& c) {
    StageRecord r;
    r.N = P.N;
    r.precision_bits = P.p;
    r.epsilon = E.eps;
    r.t_new = E.t;
    r.mu_new = E.mu;
    r.c_new = c;
    r.schedule_target = in.target;
    r.lambdas = C.lam;
    r.interval_of = C.interval_of;
    r.certificates = E.certs;
    r.certificates.insert(r.certificates.end(), C.certs.begin(), C.certs.end());

    CertReal delta;
    bool have = false;
    for (const auto& lj : C.lam)
        for (const auto& a : C.sys.atoms()) {
            const CertReal d = abs(lj - a.t);
            if (!have || mpfr_less_p(d.lo().get(), delta.lo().get())) {
                delta = d;
                have = true;
            }
        }
    if (delta.sign() <= 0) throw PrecisionError("delta_N is not certified positive");
    r.delta = lower(delta);
    r.basis_const = basis_constant(C.sys, C.lam, P.A);
    return r;
}

Verdict guarded(const std::function<Verdict()>& f) {
    try {
        return f();
    } catch (const PrecisionError&) {
        return Verdict::Undecidable;
    }
}

// Smallest k in [0, cap] whose verdict is not Fail, assuming Fail is
// monotone (all k below the boundary fail).
std::pair<int, Verdict> first_non_fail(const std::function<Verdict(int)>& eval, int cap) {
    std::map<int, Verdict> seen;
    auto at = [&](int k) {
        auto it = seen.find(k);
        if (it != seen.end()) return it->second;
        return seen[k] = eval(k);
    };
    if (at(0) != Verdict::Fail) return {0, seen[0]};
    int lo = 0, hi = 1;
    while (at(hi) == Verdict::Fail) {
        lo = hi;
        if (hi >= cap) throw IterationCap("shrink loop reached the iteration cap");
        hi = std::min(cap, hi * 2);
    }
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (at(mid) == Verdict::Fail) lo = mid;
        else hi = mid;
    }
    return {hi, seen[hi]};
}

long eps_start_exponent(const StageInputs& in, Bits p) {
    const CertReal cap = CertReal::pow2(-2 * in.N - 4, p) / in.A_prev;
    long e = 2L * in.N + 4 + 2L * std::max(0L, static_cast<long>(std::floor(in.A_prev.log2_abs() / 2)) - 1);
    while (!certainly_less(CertReal::pow2(-e, p), cap)) e += 2;
    return e;
}

}  // namespace

CertReal select_t_new(const StageInputs& in, const CertReal& epsilon, Bits bits) {
    const Prep P = prepare(in, bits);
    const ZeroSet ze = solve_level_set(P.sys, epsilon);
    return ze.zeros[nearest_index(ze, P.lam[P.l])].lambda;
}

StageRecord certify_stage(const StageInputs& in, const Atom& atom, Bits bits) {
    const Prep P = prepare(in, bits);
    const CertReal mu = atom.mu.at(bits);
    const EpsOutcome E = eps_phase(P, sqr(mu), mu, atom.t.at(bits));
    const CertReal c = atom.c.at(bits);
    const CPhase C = c_phase(P, in, E, c);
    return finish(P, in, E, C, c);
}

StageRecord construct_stage(const StageInputs& in, PrecisionContext& ctx, int iteration_cap,
                            const std::function<void(const std::string&)>& log) {
    auto say = [&](const std::string& s) {
        if (log) log(s);
    };
    while (true) {
        const Bits p = ctx.bits;
        try {
            const Prep P = prepare(in, p);
            const long e0 = eps_start_exponent(in, p);

            // epsilon = 2^-(e0 + 4k + shift), mu = sqrt(epsilon).
            auto eps_at = [&](long e) {
                return eps_phase(P, CertReal::pow2(-e, p), CertReal::pow2(-e / 2, p), std::nullopt);
            };
            std::map<int, EpsOutcome> ecache;
            auto [ke, ve] = first_non_fail(
                [&](int k) {
                    return guarded([&] {
                        ecache[k] = eps_at(e0 + 4L * k);
                        return ecache[k].verdict;
                    });
                },
                iteration_cap);
            if (ve != Verdict::Pass) throw PrecisionError("epsilon boundary candidate is undecidable");
            EpsOutcome E = ecache.at(ke);
            long e_final = e0 + 4L * ke;
            if (ke > 0) {
                EpsOutcome E4;
                const Verdict v4 = guarded([&] {
                    E4 = eps_at(e_final - 2);
                    return E4.verdict;
                });
                if (v4 == Verdict::Pass) {
                    E = E4;
                    e_final -= 2;
                }
            }
            say("stage " + std::to_string(in.N) + ": epsilon = 2^-" + std::to_string(e_final) + " at " +
                std::to_string(p) + " bits");

            // c = 2^-(N + 1 + 4k), then 2c, 4c, 8c while they pass.
            const long c0 = in.N + 1;
            std::map<int, CPhase> ccache;
            auto [kc, vc] = first_non_fail(
                [&](int k) {
                    return guarded([&] {
                        ccache[k] = c_phase(P, in, E, CertReal::pow2(-(c0 + 4L * k), p));
                        return ccache[k].verdict;
                    });
                },
                iteration_cap);
            if (vc != Verdict::Pass) throw PrecisionError("c boundary candidate is undecidable");
            long c_exp = c0 + 4L * kc;
            if (kc > 0) {
                for (int up = 1; up <= 3; ++up) {
                    const Verdict v = guarded(
                        [&] { return c_phase(P, in, E, CertReal::pow2(-(c_exp - 1), p)).verdict; });
                    if (v != Verdict::Pass) break;
                    --c_exp;
                }
            }
            say("stage " + std::to_string(in.N) + ": c = 2^-" + std::to_string(c_exp));

            const Atom atom{E.t, E.mu, CertReal::pow2(-c_exp, p)};
            StageRecord rec = certify_stage(in, atom, p);
            const Verdict v = rec.verdict();
            if (v == Verdict::Undecidable) throw PrecisionError("final certificate set is undecidable");
            if (v == Verdict::Fail) {
                for (const auto& c : rec.certificates)
                    if (!c.pass()) throw Error("stage " + std::to_string(in.N) + ": certificate " + c.label() + " failed");
            }
            return rec;
        } catch (const PrecisionError& e) {
            say("stage " + std::to_string(in.N) + ": " + e.what() + " at " + std::to_string(p) + " bits");
            if (!ctx.escalate())
                throw PrecisionExhausted("stage " + std::to_string(in.N) + ": precision ceiling reached (" + e.what() + ")");
        }
    }
}

Construction run(const RunConfig& config) {
    if (config.stages < 1) throw ConfigError("stages must be >= 1");
    PrecisionContext ctx = config.precision;
    auto [sys, rec1] = init_stage1(config.base, ctx.bits);
    Construction out{sys, {rec1}};
    if (config.log) config.log("stage 1: committed at " + std::to_string(ctx.bits) + " bits");
    for (int N = 2; N <= config.stages; ++N) {
        const StageInputs in = next_inputs(out.sys, out.records.back(), config.schedule);
        StageRecord rec = construct_stage(in, ctx, config.iteration_cap, config.log);
        out.sys = out.sys.with_atom(Atom{rec.t_new, rec.mu_new, rec.c_new});
        if (config.log) config.log("stage " + std::to_string(N) + ": committed at " + std::to_string(rec.precision_bits) + " bits");
        out.records.push_back(std::move(rec));
    }
    return out;
}

// ------------------------------------------------------------------ Verify

VerifyReport verify_atoms(const std::vector<Atom>& atoms, const Schedule& schedule, const std::vector<Bits>& bits_hint,
                          const PrecisionContext& ctx) {
    VerifyReport rep;
    rep.pass = !atoms.empty();
    if (atoms.empty()) rep.first_failure = "no atoms";
    auto note_failure = [&](const std::string& s) {
        if (rep.pass) rep.first_failure = s;
        rep.pass = false;
    };
    ClarkSystem sys;
    Bits prev_bits = ctx.bits;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const int N = static_cast<int>(i) + 1;
        // Without a hint, start where the previous stage ended or at the
        // precision the atom is written in, whichever is larger.
        Bits bits = std::max({prev_bits, atoms[i].t.prec(), atoms[i].mu.prec(), atoms[i].c.prec()});
        if (i < bits_hint.size() && bits_hint[i] > 0) bits = bits_hint[i];
        StageRecord rec;
        bool done = false;
        std::string err;
        for (int attempt = 0; attempt < 3 && !done; ++attempt, bits *= 2) {
            try {
                if (N == 1) {
                    rec = certify_stage1(atoms[0], bits);
                } else {
                    const StageInputs in = next_inputs(sys, rep.records.back(), schedule);
                    rec = certify_stage(in, atoms[i], bits);
                }
                if (rec.verdict() != Verdict::Undecidable) done = true;
                err.clear();
            } catch (const PrecisionError& e) {
                err = e.what();
            } catch (const Error& e) {
                err = e.what();
                break;
            }
        }
        if (!err.empty()) {
            note_failure("stage " + std::to_string(N) + ": recomputation failed (" + err + ")");
            break;
        }
        prev_bits = rec.precision_bits;
        for (const auto& c : rec.certificates)
            if (!c.pass()) note_failure("stage " + std::to_string(N) + ": " + c.label());
        try {
            sys = N == 1 ? ClarkSystem({atoms[0]}) : sys.with_atom(atoms[i]);
        } catch (const Error& e) {
            note_failure("stage " + std::to_string(N) + ": " + e.what());
            rep.records.push_back(std::move(rec));
            break;
        }
        rep.records.push_back(std::move(rec));
    }
    return rep;
}

}  // namespace hrank

#include <cmath>

#include "doctest.h"
#include "hrank/certify.hpp"
#include "oracles.hpp"

using namespace hrank;
using testutil::near;
using testutil::R;

namespace {

// One shared five-stage construction: l(2..5) = 1, 1, 2, 1.
const Construction& five() {
    static const Construction c = [] {
        RunConfig cfg;
        cfg.stages = 5;
        return run(cfg);
    }();
    return c;
}

std::vector<StageRecord> prefix(int n) {
    const auto& r = five().records;
    return {r.begin(), r.begin() + n};
}

double log2_of(const CertReal& x) { return x.log2_abs(); }

}  // namespace

TEST_CASE("tail bound against a direct recomputation") {
    const auto& recs = five().records;
    const int Nmax = 5;
    const CertReal A = recs.back().basis_const;
    for (int from = 1; from <= Nmax; ++from) {
        // Sum of the per-stage bounds after 'from' plus 2^{-Nmax-1}/A_Nmax.
        Mpfr acc(64), acc_lo(64);
        mpfr_set_ui(acc.get(), 0, MPFR_RNDU);
        mpfr_set_ui(acc_lo.get(), 0, MPFR_RNDD);
        for (int k = from + 1; k <= Nmax; ++k) {
            const Certificate* st = recs[k - 1].find("st");
            REQUIRE(st != nullptr);
            mpfr_add(acc.get(), acc.get(), st->lhs_upper.hi().get(), MPFR_RNDU);
            mpfr_add(acc_lo.get(), acc_lo.get(), st->lhs_upper.hi().get(), MPFR_RNDD);
        }
        const CertReal tail = tail_bound(recs, 1, from);
        const CertReal analytic = CertReal::pow2(-Nmax - 1, 256) / A;
        CHECK(mpfr_cmp(tail.hi().get(), acc_lo.get()) >= 0);
        CHECK(certainly_less(tail, CertReal::from_mpfr(acc) + analytic + CertReal::pow2(-200, 256)));
        CHECK_FALSE(certainly_less(tail, analytic));
        // Each per-stage bound sits below 2^{-k-2}, so the total is below 2^{-from-1}.
        CHECK(certainly_less(tail, CertReal::pow2(-from - 1, 256)));
    }
    // From N_max only the analytic tail remains.
    CHECK(near(tail_bound(recs, 1, Nmax) - CertReal::pow2(-Nmax - 1, 256) / A, 0, 1e-300));
    // Monotone in the starting stage.
    for (int from = 1; from < Nmax; ++from)
        CHECK(certainly_less(tail_bound(recs, 1, from + 1), tail_bound(recs, 1, from)));
    CHECK_THROWS_AS(tail_bound(recs, 0, 3), IndexError);
    CHECK_THROWS_AS(tail_bound(recs, 4, 3), IndexError);
    CHECK_THROWS_AS(tail_bound(recs, 1, 6), IndexError);
}

TEST_CASE("limit gap picks the earliest qualifying stage") {
    const auto& recs = five().records;
    const Schedule sch = Schedule::triangular();
    struct Case {
        int j;
        int eps_exp;
        int k;
    };
    // l(N) = j and 2^{-N} < eps: j = 1 uses N in {2, 3, 5}; j = 2 uses N = 4.
    for (const Case& c : {Case{1, 0, 2}, Case{1, -2, 3}, Case{1, -3, 5}, Case{1, -4, 5}, Case{2, -3, 4}}) {
        const CertReal eps = CertReal::pow2(c.eps_exp, 256);
        const LimitGapCertificate g = limit_gap(recs, sch, c.j, eps);
        CHECK(g.k == c.k);
        CHECK(g.stage == c.k);
        CHECK(g.pass());
        CHECK(certainly_less(g.bound, eps));
        CHECK_FALSE(certainly_less(g.bound, g.st1_gap + g.tail_j + g.tail_k - CertReal::pow2(-300, 256)));
        // The stage gap bound dominates the finite-stage gap recomputed directly.
        const StageRecord& r = recs[c.k - 1];
        const ClarkSystem sys({five().sys.atoms().begin(), five().sys.atoms().begin() + c.k});
        const GapReport direct = pairwise_gap(sys, r.lambdas, c.j - 1, c.k - 1);
        CHECK_FALSE(certainly_less(g.st1_gap, direct.gap));
        MESSAGE("j=" << c.j << " eps=2^" << c.eps_exp << " k=" << g.k << " bound 2^" << log2_of(g.bound));
    }
    try {
        limit_gap(prefix(3), sch, 5, CertReal::pow2(-1, 256));
        CHECK(false);
    } catch (const NeedMoreStages& e) {
        // l(N) = 5 first happens at N = 16.
        CHECK(e.required_stages == 16);
    }
    try {
        limit_gap(recs, sch, 2, CertReal::pow2(-5, 256));
        CHECK(false);
    } catch (const NeedMoreStages& e) {
        // Next N with l(N) = 2 and 2^{-N} < 2^{-5}: l(6) = 2.
        CHECK(e.required_stages == 6);
    }
    CHECK_THROWS_AS(limit_gap(recs, sch, 1, R(0)), DomainError);
    CHECK_THROWS_AS(limit_gap(recs, sch, 0, R(0.5)), IndexError);
}

TEST_CASE("completeness certificates") {
    const auto& recs = five().records;
    const ClarkSystem& sys = five().sys;
    for (int N = 1; N <= 5; ++N) {
        for (int m = 1; m <= N; ++m) {
            const CompletenessCertificate c = completeness_certificate(recs, sys, N, m);
            CHECK(c.pass());
            CHECK(near(c.threshold, std::ldexp(1.0, -N + 1), 0));
            CHECK(certainly_less(c.residual, c.threshold));
            REQUIRE(c.alpha.size() == static_cast<std::size_t>(N));
            // The coefficients solve the frame equations M alpha = e_m.
            const ClarkSystem sN({sys.atoms().begin(), sys.atoms().begin() + N});
            const RMatrix M = frame_matrix(sN, recs[N - 1].lambdas);
            for (int n = 0; n < N; ++n) {
                CertReal row(0, M(0, 0).prec());
                for (int j = 0; j < N; ++j) row += M(n, j) * c.alpha[j];
                CHECK(near(row, n == m - 1 ? 1 : 0, 1e-30));
            }
            if (N == 1) CHECK(certainly_less(c.residual, CertReal::pow2(-2, 256)));
        }
    }
    CHECK_THROWS_AS(completeness_certificate(recs, sys, 3, 4), IndexError);
    CHECK_THROWS_AS(completeness_certificate(recs, sys, 6, 1), IndexError);
}

TEST_CASE("structural checks") {
    const StructuralReport base = structural_checks(five().sys);
    CHECK(base.pass);
    CHECK(base.checks.size() == 5);
    for (const auto& c : base.checks) CHECK_MESSAGE(c.pass(), c.name);

    const ClarkSystem inside({Atom{R(0.4), R(0.1), R(0.1)}, Atom{R(0.7), R(0.2), R(0.1)}});
    CHECK(structural_checks(inside).pass);

    auto verdict_of = [](const StructuralReport& r, const std::string& name) {
        for (const auto& c : r.checks)
            if (c.name == name) return c.verdict;
        return Verdict::Undecidable;
    };
    const StructuralReport heavy = structural_checks(ClarkSystem({Atom{R(0.3), R(0.6), R(0.1)}, Atom{R(0.6), R(0.6), R(0.1)}}));
    CHECK_FALSE(heavy.pass);
    CHECK(verdict_of(heavy, "mass_sum") == Verdict::Fail);
    CHECK(verdict_of(heavy, "clark_vector") == Verdict::Pass);
    const StructuralReport outside = structural_checks(ClarkSystem({Atom{R(1.2), R(0.1), R(0.1)}}));
    CHECK(verdict_of(outside, "t_max") == Verdict::Fail);
    CHECK(verdict_of(outside, "t_min") == Verdict::Pass);
    const StructuralReport negative = structural_checks(ClarkSystem({Atom{R(-0.2), R(0.1), R(0.1)}}));
    CHECK(verdict_of(negative, "t_min") == Verdict::Fail);
}

TEST_CASE("passing certificates survive doubled precision") {
    const auto recs = prefix(4);
    std::vector<Bits> hints;
    for (const auto& r : recs) hints.push_back(2 * r.precision_bits);
    const VerifyReport v = verify_atoms({five().sys.atoms().begin(), five().sys.atoms().begin() + 4},
                                        Schedule::triangular(), hints, PrecisionContext{});
    REQUIRE(v.pass);
    for (std::size_t n = 0; n < recs.size(); ++n) {
        CHECK(v.records[n].precision_bits == hints[n]);
        for (const auto& c : recs[n].certificates) {
            const Certificate* again = v.records[n].find(c.name, c.part);
            REQUIRE(again != nullptr);
            CHECK(again->pass());
            CHECK(again->margin.sign() > 0);
        }
    }
}

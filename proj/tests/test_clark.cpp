#include <cmath>
#include <random>

#include "doctest.h"
#include "hrank/clark.hpp"
#include "oracles.hpp"

using namespace hrank;
using oracle::cd;
using testutil::near;
using testutil::R;

namespace {

CertComplex cz(double re, double im = 0, Bits p = 256) { return CertComplex(R(re, p), R(im, p)); }

std::vector<oracle::DAtom> to_double(const ClarkSystem& s) {
    std::vector<oracle::DAtom> out;
    for (const auto& a : s.atoms()) out.push_back({a.t.to_double(), a.mu.to_double(), a.c.to_double()});
    return out;
}

ClarkSystem two_atoms() {
    const CertReal tenth = CertReal::from_decimal("0.1", 256);
    return ClarkSystem({Atom{R(0), tenth, tenth}, Atom{R(1), tenth, tenth}});
}

std::vector<CertReal> zeros_of(const ClarkSystem& s) {
    std::vector<CertReal> out;
    for (const auto& z : solve_level_set(s, R(0)).zeros) out.push_back(z.lambda);
    return out;
}

}  // namespace

TEST_CASE("synthesize closed form for a single unit atom") {
    const ClarkSystem s({Atom{R(0), R(1), R(0)}});
    const ModelVector v{s, {cz(1)}};
    for (double x : {-3.0, -0.4, 0.0, 0.7, 12.0}) {
        const cd expect = cd(0, -2) / cd(1, -x);
        const CertComplex got = synthesize(v, cz(x));
        CHECK(near(got.re(), expect.real(), 1e-14));
        CHECK(near(got.im(), expect.imag(), 1e-14));
    }
    CHECK(near(synthesize(v, cz(0)).abs(), 2, 1e-60));
    const ModelVector zero{s, {cz(0)}};
    CHECK(near(synthesize(zero, cz(0.3, 0.2)).abs(), 0, 0));
}

TEST_CASE("synthesize is linear and has boundary trace 2|a_m|") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1), w(0.05, 0.45), g(-2, 2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Atom> atoms;
        for (int k = 0; k <= trial % 4; ++k) atoms.push_back(Atom{R(u(rng)), R(w(rng)), R(w(rng))});
        const ClarkSystem s(atoms);
        ModelVector a{s, {}}, b{s, {}}, ab{s, {}};
        for (std::size_t n = 0; n < s.size(); ++n) {
            a.a.push_back(cz(g(rng), g(rng)));
            b.a.push_back(cz(g(rng), g(rng)));
            ab.a.push_back(a.a.back() + b.a.back());
        }
        const CertComplex z = cz(g(rng), u(rng));
        const CertComplex lhs = synthesize(ab, z), rhs = synthesize(a, z) + synthesize(b, z);
        CHECK(near(lhs.re() - rhs.re(), 0, 1e-50));
        CHECK(near(lhs.im() - rhs.im(), 0, 1e-50));
        for (std::size_t m = 0; m < s.size(); ++m) {
            const double trace = synthesize(a, CertComplex(s[m].t)).abs().to_double();
            CHECK(std::abs(trace - 2 * a.a[m].abs().to_double()) <= 1e-8 * trace);
        }
    }
}

TEST_CASE("norm examples") {
    const ClarkSystem s({Atom{R(0), R(1), R(0)}});
    const CertReal n1 = norm(ModelVector{s, {cz(1)}});
    CHECK(near(n1, std::sqrt(4 * oracle::kPi), 1e-15));
    // Quadrature cross-check: integral of 4/(1 + x^2) is 4 pi.
    const double q = oracle::integrate_line([](double x) { return 4 / (1 + x * x); }, {});
    CHECK(std::abs(q - 4 * oracle::kPi) < 1e-10);
    CHECK(near(norm(ModelVector{s, {cz(0)}}), 0, 0));

    const ClarkSystem t = two_atoms();
    const ModelVector v{t, {cz(1), cz(1)}};
    CHECK(near(norm(v), std::sqrt(0.8 * oracle::kPi), 1e-14));
    const double quad = oracle::model_norm2(to_double(t), {1, 1});
    CHECK(std::abs(std::sqrt(quad) - 1.5853) < 1e-4);
    CHECK(std::abs(std::sqrt(quad) / norm(v).to_double() - 1) < 1e-8);
}

TEST_CASE("Parseval identity against quadrature on random systems") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.05, 0.95), w(0.01, 0.5), g(-1, 1);
    for (int trial = 0; trial < 15; ++trial) {
        std::vector<Atom> atoms;
        std::vector<cd> coef;
        ModelVector v;
        for (int k = 0; k <= trial % 4; ++k) {
            atoms.push_back(Atom{R(u(rng)), R(w(rng)), R(w(rng))});
            coef.emplace_back(g(rng), g(rng));
            v.a.push_back(cz(coef.back().real(), coef.back().imag()));
        }
        v.sys = ClarkSystem(atoms);
        const double quad = oracle::model_norm2(to_double(v.sys), coef);
        const double n = norm(v).to_double();
        CHECK(std::abs(std::sqrt(quad) / n - 1) < 1e-8);
    }
}

TEST_CASE("eigenvector coefficients") {
    const ClarkSystem s({Atom{R(0), R(1), CertReal::from_decimal("0.2", 256)}});
    const ModelVector v = eigvec_coeffs(s, CertReal::from_decimal("0.2", 256));
    CHECK(near(v.a[0].re(), 1, 1e-60));
    CHECK(near(norm(v), std::sqrt(4 * oracle::kPi), 1e-14));

    const ClarkSystem t({Atom{R(0), CertReal::from_decimal("0.1", 256), R(1)},
                         Atom{R(1), CertReal::from_decimal("0.1", 256), R(1)}});
    const std::vector<CertReal> lam = zeros_of(t);
    const ModelVector e = eigvec_coeffs(t, lam[0]);
    CHECK(near(e.a[0].re(), 11.0990195135927848, 1e-12));
    CHECK(near(e.a[1].re(), -1.09901951359278483, 1e-12));
    CHECK_THROWS_AS(eigvec_coeffs(t, R(0.5)), NotAZero);

    // synthesize(eigvec) = phi / (z - lambda) at random points.
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> g(-2, 2), h(0.01, 2);
    for (int k = 0; k < 20; ++k) {
        const CertComplex z = cz(g(rng), h(rng));
        const CertComplex lhs = synthesize(e, z);
        const CertComplex rhs = eval_phi(t, z) / (z - lam[0]);
        CHECK(near(lhs.re() - rhs.re(), 0, 1e-40));
        CHECK(near(lhs.im() - rhs.im(), 0, 1e-40));
    }
}

TEST_CASE("pairwise gap") {
    const ClarkSystem s = two_atoms();
    const std::vector<CertReal> lam = zeros_of(s);
    CHECK(near(lam[0], 0.0099000099980005, 1e-15));
    CHECK(near(lam[1], 1.0100999900019995, 1e-15));
    const GapReport g = pairwise_gap(s, lam, 0, 1);
    // 4 pi * 2 * 0.001 * (1/lam_1 + 1/(1 - lam_1))^2 with lam_1 as above.
    CHECK(std::abs(g.gap.to_double() - 15.856479535) < 1e-3);
    const GapReport r = pairwise_gap(s, lam, 1, 0);
    CHECK(near(g.gap - r.gap, 0, 1e-60));
    CertReal sum(0, 256);
    for (const auto& c : g.contributions) sum += c;
    CHECK(near(sqr(g.gap) - CertReal::pi(256) * sum, 0, 1e-60));

    // Quadrature oracle for || f_1 - f_2 ||.
    const auto da = to_double(s);
    std::vector<cd> diff;
    for (int m = 0; m < 2; ++m)
        diff.emplace_back(da[m].c / (lam[0].to_double() - da[m].t) - da[m].c / (lam[1].to_double() - da[m].t));
    const double quad = std::sqrt(oracle::model_norm2(da, diff));
    CHECK(std::abs(quad / g.gap.to_double() - 1) < 1e-8);

    const std::vector<CertReal> same{lam[0], lam[0]};
    CHECK(near(pairwise_gap(s, same, 0, 1).gap, 0, 0));
    CHECK_THROWS_AS(pairwise_gap(s, lam, 0, 2), IndexError);
}

TEST_CASE("basis constant") {
    const ClarkSystem s({Atom{R(0), R(1), CertReal::from_decimal("0.2", 256)}});
    const std::vector<CertReal> lam{CertReal::from_decimal("0.2", 256)};
    const RMatrix M = frame_matrix(s, lam);
    CHECK(near(abs(M(0, 0)), 2 * std::sqrt(oracle::kPi), 1e-14));
    CHECK(near(basis_constant(s, lam, R(1)), 1, 0));
    CHECK(near(basis_constant(s, lam, CertReal::from_decimal("7.3", 256)), 7.3, 1e-15));

    // Validity on random coefficient vectors for a 4-atom system.
    const ClarkSystem t({Atom{R(0.2), R(0.1), R(0.05)}, Atom{R(0.4), R(0.02), R(0.1)},
                         Atom{R(0.45), R(0.05), R(0.01)}, Atom{R(0.8), R(0.2), R(0.2)}});
    const std::vector<CertReal> lt = zeros_of(t);
    const CertReal A = basis_constant(t, lt, R(1));
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> alpha(4);
        for (auto& x : alpha) x = g(rng);
        ModelVector v{t, std::vector<CertComplex>(4, cz(0))};
        CertReal l1(0, 256);
        for (int j = 0; j < 4; ++j) {
            const ModelVector e = eigvec_coeffs(t, lt[j]);
            for (int n = 0; n < 4; ++n) v.a[n] += e.a[n] * R(alpha[j]);
            l1 += abs(R(alpha[j]));
        }
        CHECK(certainly_less(l1, A * norm(v)));
    }
}

TEST_CASE("perturbation norm bound") {
    const ClarkSystem prev({Atom{R(0.5), R(0.25), R(0.125)}});
    const ClarkSystem zero = prev.with_atom(Atom{R(0.9), R(0), R(0)});
    CHECK(near(perturbation_norm_bound(prev, zero, 0), 0, 0));

    const double muN = 1e-6;
    const ClarkSystem next = prev.with_atom(Atom{R(0.9), R(muN), R(0)});
    const CertReal bound = perturbation_norm_bound(prev, next, 0);
    // Oracle: quadrature of |theta_N - theta_{N-1}|^2/(x - t_1)^2.
    const std::vector<oracle::DAtom> a{{0.5, 0.25, 0}}, b{{0.5, 0.25, 0}, {0.9, muN, 0}};
    auto integrand = [&](double x) {
        const double dx = x - 0.5;
        if (std::abs(dx) < 1e-12) return 0.0;
        return std::norm(oracle::theta(b, {x, 0}) - oracle::theta(a, {x, 0})) / (dx * dx);
    };
    std::vector<double> br{0.5, 0.9};
    for (int k = 3; k <= 9; ++k) {
        br.push_back(0.9 - std::pow(10.0, -k));
        br.push_back(0.9 + std::pow(10.0, -k));
    }
    const double quad = std::sqrt(oracle::integrate_line(integrand, br, 1e-12));
    MESSAGE("perturbation bound " << bound.to_double() << " vs quadrature " << quad);
    CHECK(bound.to_double() >= quad);
    CHECK(bound.to_double() <= 10 * quad);

    // Halving mu_N never increases the bound.
    double last = bound.to_double();
    for (int k = 1; k <= 6; ++k) {
        const ClarkSystem s = prev.with_atom(Atom{R(0.9), R(muN * std::ldexp(1.0, -k)), R(0)});
        const double b2 = perturbation_norm_bound(prev, s, 0).to_double();
        CHECK(b2 <= last);
        last = b2;
    }
}

TEST_CASE("stage difference bound") {
    // Degenerate new atom: nothing changes.
    const ClarkSystem prev({Atom{R(0.5), R(0.25), R(0.125)}});
    const ClarkSystem same = prev.with_atom(Atom{R(0.9), R(0), R(0)});
    const CertReal lam = CertReal::from_decimal("0.53125", 256);
    CHECK(near(stage_difference_bound(prev, same, lam, lam).total, 0, 0));

    // The h term alone: c = 1e-6, mu = 1e-4, |t_N - lambda_N| = 1e-5 gives
    // sqrt(4 pi) * 1e-3 under the Clark normalization of the norm.
    const ClarkSystem far({Atom{R(0.2), R(0.1), R(0.1)}});
    const ClarkSystem with_h = far.with_atom(Atom{R(0.5), CertReal::from_decimal("1e-4", 256),
                                                  CertReal::from_decimal("1e-6", 256)});
    const CertReal lamN = R(0.5) + CertReal::from_decimal("1e-5", 256);
    const StageDifference d = stage_difference_bound(far, with_h, lamN, lamN, {R(0)});
    CHECK(near(d.h, std::sqrt(4 * oracle::kPi) * 1e-3, 1e-15));

    // Full bound dominates the quadrature value on a 2-atom to 3-atom step.
    const ClarkSystem s2({Atom{R(0.3), R(0.2), R(0.1)}, Atom{R(0.6), R(0.1), R(0.2)}});
    const ClarkSystem s3 = s2.with_atom(Atom{R(0.45), R(1e-3), R(1e-3)});
    const ZeroSet z2 = solve_level_set(s2, R(0)), z3 = solve_level_set(s3, R(0));
    const ZeroMatch m = match_zeros(s2, z2, s3, z3);
    const auto d2 = to_double(s2), d3 = to_double(s3);
    for (std::size_t j = 0; j < 2; ++j) {
        const CertReal& lp = z2.zeros[j].lambda;
        const CertReal& ln = z3.zeros[m.new_of_old[j]].lambda;
        const CertReal bound = stage_difference_bound(s2, s3, lp, ln).total;
        auto integrand = [&](double x) {
            std::vector<cd> cp, cn;
            for (const auto& a : d2) cp.emplace_back(a.c / (lp.to_double() - a.t));
            for (const auto& a : d3) cn.emplace_back(a.c / (ln.to_double() - a.t));
            return std::norm(oracle::model(d2, cp, {x, 0}) - oracle::model(d3, cn, {x, 0}));
        };
        const double quad = std::sqrt(oracle::integrate_line(integrand, {0.3, 0.45, 0.449, 0.451, 0.6}, 1e-12));
        CHECK(bound.to_double() >= quad);
    }
}

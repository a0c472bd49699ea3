#include <cmath>
#include <random>

#include "doctest.h"
#include "hrank/construct.hpp"
#include "hrank/diskop.hpp"
#include "oracles.hpp"

using namespace hrank;
using oracle::cd;
using testutil::near;
using testutil::R;

namespace {

cd to_cd(const CertComplex& z) { return {z.re().to_double(), z.im().to_double()}; }

CertComplex cz(cd z, Bits p = 256) { return CertComplex(R(z.real(), p), R(z.imag(), p)); }

// Integral over the unit circle with normalized arc length, split at the
// given angles.
double circle_mean(const std::function<double(double)>& g, std::vector<double> cuts = {}) {
    std::vector<double> s{0};
    for (double c : cuts) s.push_back(std::fmod(c + 2 * oracle::kPi, 2 * oracle::kPi));
    s.push_back(2 * oracle::kPi);
    std::sort(s.begin(), s.end());
    double total = 0;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        if (s[k + 1] <= s[k]) continue;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, s[k], s[k + 1], 15, 1e-13);
    }
    return total / (2 * oracle::kPi);
}

// z = i(1 + w)/(1 - w).
cd to_half_plane(cd w) { return cd(0, 1) * (1.0 + w) / (1.0 - w); }

std::vector<oracle::DAtom> to_double(const ClarkSystem& s) {
    std::vector<oracle::DAtom> out;
    for (const auto& a : s.atoms()) out.push_back({a.t.to_double(), a.mu.to_double(), a.c.to_double()});
    return out;
}

ClarkSystem random_system(std::mt19937_64& rng, int N, Bits p = 256) {
    std::uniform_real_distribution<double> u(0.05, 0.95), w(0.02, 0.15);
    std::vector<Atom> atoms;
    std::vector<double> t;
    while (static_cast<int>(t.size()) < N) {
        const double x = u(rng);
        bool ok = true;
        for (double y : t) ok = ok && std::abs(x - y) > 0.05;
        if (!ok) continue;
        t.push_back(x);
        atoms.push_back(Atom{R(x, p), R(w(rng), p), R(w(rng), p)});
    }
    return ClarkSystem(atoms);
}

std::vector<CertReal> zeros_of(const ClarkSystem& s) {
    std::vector<CertReal> out;
    for (const auto& z : solve_level_set(s, CertReal(0, s.prec())).zeros) out.push_back(z.lambda);
    return out;
}

}  // namespace

TEST_CASE("cayley points") {
    const CertComplex a = cayley_point(R(0));
    CHECK(near(a.re(), -1, 0));
    CHECK(near(a.im(), 0, 0));
    const CertComplex b = cayley_point(R(1));
    CHECK(near(b.re(), 0, 0));
    CHECK(near(b.im(), -1, 0));
    const CertComplex c = cayley_point(R(0.5));
    CHECK(near(c.re(), -0.6, 1e-70));
    CHECK(near(c.im(), -0.8, 1e-70));
    // The real-line and complex forms agree and land on the circle.
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int k = 0; k < 50; ++k) {
        const CertReal t = R(u(rng));
        const CertComplex p = cayley_point(t), q = cayley_point(CertComplex(t));
        CHECK(near(p.re() - q.re(), 0, 1e-70));
        CHECK(near(p.im() - q.im(), 0, 1e-70));
        CHECK(near(p.abs2(), 1, 1e-70));
    }
}

TEST_CASE("disk Clark mass and the kernel norm") {
    CHECK(near(disk_clark_mass(R(0), R(1)), 2, 0));
    CHECK(near(disk_clark_mass(R(1), R(0.5)), 0.5, 0));
    CHECK(near(disk_clark_mass(R(0.3), R(0.2)) - mul_2si(disk_clark_mass(R(0.3), R(0.1)), 1), 0, 1e-70));

    // ||k_tau||^2 = (1/2pi) int |(1 - theta(w))/(1 - conj(tau) w)|^2 since theta(tau) = 1.
    const std::vector<std::vector<oracle::DAtom>> systems{
        {{0, 1, 0}}, {{1, 0.5, 0}}, {{0.2, 0.3, 0}, {0.7, 0.1, 0}}, {{-1.5, 0.05, 0}, {0.4, 0.2, 0}, {2, 0.3, 0}}};
    for (const auto& a : systems) {
        for (const auto& x : a) {
            const cd tau = (x.t - cd(0, 1)) / (x.t + cd(0, 1));
            auto g = [&](double al) {
                const cd w = std::polar(1.0, al);
                return std::norm((1.0 - oracle::theta(a, to_half_plane(w))) / (1.0 - std::conj(tau) * w));
            };
            const double quad = circle_mean(g, {std::arg(tau)});
            const double sigma = disk_clark_mass(R(x.t), R(x.mu)).to_double();
            CHECK(std::abs(quad * sigma / 2 - 1) < 1e-9);
        }
    }
}

TEST_CASE("kernel basis is orthonormal") {
    std::mt19937_64 rng(2);
    const ClarkSystem s = random_system(rng, 3, 128);
    const int M = 4000;
    std::vector<std::vector<cd>> e(3, std::vector<cd>(M));
    for (int k = 0; k < M; ++k) {
        const double al = 2 * oracle::kPi * (k + 0.5) / M;
        const CertReal z = R(-1 / std::tan(al / 2), 128);
        for (std::size_t n = 0; n < 3; ++n) e[n][k] = to_cd(basis_eval(s, n, CertComplex(z)));
    }
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
            cd g = 0;
            for (int k = 0; k < M; ++k) g += e[m][k] * std::conj(e[n][k]);
            g /= M;
            CHECK(std::abs(g - (m == n ? 1.0 : 0.0)) < 1e-8);
        }
    CHECK_THROWS_AS(basis_eval(s, 3, CertComplex(R(0))), IndexError);
}

TEST_CASE("one-atom operators") {
    const auto [sys, rec] = init_stage1(BaseParams{}, 256);
    const CMatrix U = build_operator(sys, VectorChoice::OneMinusTheta);
    CHECK(near(U(0, 0).re(), -0.6, 1e-70));
    CHECK(near(U(0, 0).im(), -0.8, 1e-70));
    const CMatrix T = build_operator(sys, VectorChoice::Phi);
    const CertComplex L = cayley_point(CertReal::from_decimal("0.53125", 256));
    CHECK(near(T(0, 0).re() - L.re(), 0, 1e-70));
    CHECK(near(T(0, 0).im() - L.im(), 0, 1e-70));
}

TEST_CASE("Clark unitary, rank one difference, quadrature assembly") {
    std::mt19937_64 rng(4);
    for (int N = 1; N <= 6; ++N) {
        const ClarkSystem s = random_system(rng, N, 512);
        const CMatrix U = build_operator(s, VectorChoice::OneMinusTheta);
        const CMatrix T = build_operator(s, VectorChoice::Phi);
        const CMatrix E = adjoint(U) * U - identity_complex(N, 512);
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) CHECK(near(E(j, k).abs2(), 0, 1e-100));
        const std::vector<CertReal> sv = singular_values(T - U);
        CHECK(sv[0].to_double() > 0);
        if (N >= 2) CHECK(sv[1].to_double() <= 1e-10 * sv[0].to_double());
        // U is diagonal with the Cayley points of the atoms.
        const std::vector<CertComplex> ev = eigenvalues(U);
        for (int n = 0; n < N; ++n) {
            const CertComplex tau = cayley_point(s[n].t);
            double best = 1;
            for (const auto& e : ev) best = std::min(best, std::abs(to_cd(e) - to_cd(tau)));
            CHECK(best < 1e-30);
        }
    }
    // Circle quadrature reproduces the closed-form matrix.
    for (int N = 1; N <= 3; ++N) {
        const ClarkSystem s = random_system(rng, N, 128);
        QuadratureOptions opts;
        opts.tolerance = 1e-25;
        for (VectorChoice ch : {VectorChoice::Phi, VectorChoice::OneMinusTheta}) {
            const CMatrix A = build_operator(s, ch);
            const CMatrix Q = build_operator(s, ch, Assembly::Quadrature, opts);
            CHECK(max_abs(A - Q).to_double() < 1e-20);
        }
    }
}

TEST_CASE("transport is unitary and matches the kernel expansion") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> rad(0, 0.95), ang(0, 2 * oracle::kPi);
    for (int trial = 0; trial < 12; ++trial) {
        const int N = 1 + trial % 4;
        const ClarkSystem s = random_system(rng, N);
        ModelVector v{s, {}};
        std::vector<cd> coef;
        for (int n = 0; n < N; ++n) {
            coef.emplace_back(g(rng), g(rng));
            v.a.push_back(cz(coef.back()));
        }
        const auto da = to_double(s);
        // Boundary values F = sqrt(pi) (z + i) f(z), z = -cot(alpha/2).
        std::vector<double> cuts;
        for (const auto& x : da) cuts.push_back(std::arg((x.t - cd(0, 1)) / (x.t + cd(0, 1))));
        auto F2 = [&](double al) {
            const double z = -1 / std::tan(al / 2);
            if (!std::isfinite(z)) return 0.0;
            return oracle::kPi * std::norm((z + cd(0, 1)) * oracle::model(da, coef, cd(z, 0)));
        };
        const double disk = circle_mean(F2, cuts);
        const double line = oracle::model_norm2(da, coef);
        CHECK(std::abs(disk / line - 1) < 1e-8);

        const std::vector<CertComplex> c = transport_coordinates(v);
        double coords = 0;
        for (const auto& x : c) coords += std::norm(to_cd(x));
        CHECK(std::abs(coords / disk - 1) < 1e-8);

        // Interior values agree with the expansion in the kernel basis.
        for (int k = 0; k < 5; ++k) {
            const cd w = std::polar(rad(rng), ang(rng));
            const CertComplex W = cz(w);
            const CertComplex Z = CertComplex::i(256) * (CertComplex(R(1)) + W) / (CertComplex(R(1)) - W);
            cd sum = 0;
            for (int n = 0; n < N; ++n) sum += to_cd(c[n]) * to_cd(basis_eval(s, n, Z));
            const cd direct = to_cd(transport_eval(v, W));
            CHECK(std::abs(sum - direct) <= 1e-12 * (1 + std::abs(direct)));
        }
    }
}

TEST_CASE("spectral check on constructed stages") {
    SUBCASE("one atom") {
        const auto [sys, rec] = init_stage1(BaseParams{}, 256);
        const DiskOperatorBundle b = build_bundle(sys, rec.lambdas, 256);
        const SpectralReport r = spectral_check(b);
        REQUIRE(r.eig_T.size() == 1);
        CHECK(r.max_match_error < 1e-60);
        CHECK(r.max_residual.to_double() < 1e-60);
        CHECK(r.distinct);
        const ChecklistReport c = grivaux_checklist(b, r);
        CHECK(c.gaps_vacuous);
        CHECK(c.partners.empty());
        CHECK(c.frame_full_rank);
    }
    SUBCASE("three stages") {
        RunConfig cfg;
        cfg.stages = 3;
        const Construction run3 = run(cfg);
        const StageRecord& last = run3.records.back();
        const Bits bits = std::max<Bits>(512, last.precision_bits);
        const DiskOperatorBundle b = build_bundle(run3.sys, last.lambdas, bits);
        const SpectralReport r = spectral_check(b);
        CHECK(r.max_residual.to_double() <= 1e-8);
        CHECK(r.max_match_error <= 1e-8);
        CHECK(r.max_unimodular_error <= 1e-8);
        CHECK(r.distinct);
        CHECK(r.unitarity.to_double() < 1e-100);
        CHECK(r.sigma2.to_double() <= 1e-10 * r.sigma1.to_double());
        for (const auto& L : b.Lambda) CHECK(near(L.abs2(), 1, 1e-100));
        const ChecklistReport c = grivaux_checklist(b, r);
        CHECK(c.unimodular_distinct);
        CHECK(c.frame_full_rank);
        CHECK_FALSE(c.gaps_vacuous);
        REQUIRE(c.partners.size() == 3);

        // After the stage 2 step toward zero 1, f_1 and f_2 are within 2^-3.
        const StageRecord& r2 = run3.records[1];
        const DiskOperatorBundle b2 = build_bundle(ClarkSystem({run3.sys[0], run3.sys[1]}), r2.lambdas, 512);
        const ChecklistReport c2 = grivaux_checklist(b2, spectral_check(b2));
        REQUIRE(c2.partners.size() == 2);
        CHECK(c2.partners[0].k == 2);
        CHECK(certainly_less(c2.partners[0].gap, CertReal::pow2(-3, 512)));
    }
}

TEST_CASE("transported eigenvectors are proportional to phi/(w - Lambda)") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> rad(0.05, 0.9), ang(0, 2 * oracle::kPi);
    for (int N = 1; N <= 4; ++N) {
        const ClarkSystem s = random_system(rng, N);
        const std::vector<CertReal> lam = zeros_of(s);
        for (int j = 0; j < N; ++j) {
            const ModelVector v = eigvec_coeffs(s, lam[j]);
            const cd Lj = to_cd(cayley_point(lam[j]));
            std::vector<cd> ratios;
            for (int k = 0; k < 10; ++k) {
                const cd w = std::polar(rad(rng), ang(rng));
                const CertComplex W = cz(w);
                const CertComplex Z = CertComplex::i(256) * (CertComplex(R(1)) + W) / (CertComplex(R(1)) - W);
                const cd phi = to_cd(eval_phi(s, Z));
                ratios.push_back(to_cd(transport_eval(v, W)) / (phi / (w - Lj)));
            }
            double spread = 0;
            for (const auto& r : ratios) spread = std::max(spread, std::abs(r / ratios[0] - 1.0));
            CHECK(spread <= 1e-8);
        }
    }
}

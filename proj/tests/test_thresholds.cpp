#include <epct/thresholds.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace epct;

namespace {

PeriodicProfile cf(const ClosedForm& f, std::size_t n = 64) { return PeriodicProfile::from_closed_form(f, n); }

// Positive root of z^2 - beta z + k gamma by bisection (z = lambda).
double lambda_by_bisection(double gamma, double beta, double k) {
    double lo = 0.0, hi = 1.0;
    auto f = [&](double z) { return z * z - beta * z + k * gamma; };
    while (f(hi) < 0.0)
        hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Scenario constant_c(double c, double nu, double k, const ClosedForm& rho, double u0x_value,
                    std::optional<Kernel> kernel = std::nullopt) {
    return Scenario(k, nu, cf(ClosedForm::constant(c)), cf(rho), cf(ClosedForm::constant(0.0)),
                    cf(ClosedForm::constant(u0x_value)), std::move(kernel));
}

} // namespace

TEST(Roots, PositiveRootForBetaThree) {
    EXPECT_NEAR(omega(1.0, 3.0, -1.0), (3.0 + std::sqrt(13.0)) / 2.0, 1e-14);
    EXPECT_NEAR(omega(1.0, 3.0, -1.0), lambda_by_bisection(1.0, 3.0, -1.0), 1e-13);
    const auto rp = RootPair::make(1.0, 3.0, -1.0);
    EXPECT_LT(rp.residual(), 1e-13);
}

TEST(Roots, SymmetricAndDegenerateCases) {
    for (double g : {0.25, 1.0, 4.0, 9.0}) {
        EXPECT_NEAR(omega(g, 0.0, -1.0), std::sqrt(g), 1e-15);
        EXPECT_NEAR(theta(g, 0.0, -1.0), std::sqrt(g), 1e-15);
    }
    for (double b : {0.0, 0.5, 3.0}) {
        EXPECT_DOUBLE_EQ(omega(0.0, b, -2.0), b);
        EXPECT_DOUBLE_EQ(theta(0.0, b, -2.0), 0.0);
    }
}

TEST(Roots, RejectOutsideDomain) {
    EXPECT_THROW(omega(1.0, 1.0, 0.0), PreconditionError);
    EXPECT_THROW(theta(1.0, 1.0, 2.0), PreconditionError);
    EXPECT_THROW(omega(-1.0, 1.0, -1.0), PreconditionError);
    EXPECT_THROW(omega(1.0, -0.1, -1.0), PreconditionError);
}

TEST(Roots, VietaOnRandomSamples) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> g(0.0, 10.0), b(0.0, 10.0), k(-10.0, -0.1);
    for (int i = 0; i < 10000; ++i) {
        const auto rp = RootPair::make(g(rng), b(rng), k(rng));
        ASSERT_NEAR(rp.lambda * rp.mu, -rp.k * rp.gamma, 1e-12);
        ASSERT_NEAR(rp.lambda - rp.mu, rp.beta, 1e-12);
        ASSERT_LT(rp.residual(), 1e-12);
        ASSERT_GE(rp.lambda, rp.mu);
        ASSERT_GE(rp.mu, 0.0);
    }
}

TEST(Roots, Monotonicity) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> g(0.0, 5.0), b(0.0, 5.0), k(-5.0, -0.1);
    const double h = 1e-4;
    for (int i = 0; i < 1000; ++i) {
        const double gg = g(rng), bb = b(rng), kk = k(rng);
        EXPECT_GE(omega(gg + h, bb, kk), omega(gg, bb, kk));
        EXPECT_GE(omega(gg, bb + h, kk), omega(gg, bb, kk));
        EXPECT_GE(theta(gg + h, bb, kk), theta(gg, bb, kk));
        EXPECT_LE(theta(gg, bb + h, kk), theta(gg, bb, kk));
    }
}

TEST(ClassifyNoAlignment, EquilibriumWithPositiveSlopeIsSubcritical) {
    const auto v = classify_no_alignment(constant_c(1.0, 0.0, -1.0, ClosedForm::constant(1.0), 0.5));
    EXPECT_EQ(v.verdict, Verdict::Subcritical);
    EXPECT_NEAR(v.margin, 0.5, 1e-15);
    EXPECT_NEAR(v.constants.at("lambda_1"), 1.0, 1e-15);
}

TEST(ClassifyNoAlignment, DensityPeakGivesWitness) {
    // rho0 = 1 + sin(2 pi x) peaks at x0 = 1/4 with value 2; 0.5 < 1 * (2 - 1).
    const auto v = classify_no_alignment(constant_c(1.0, 0.0, -1.0, ClosedForm::affine_sine(1.0, 1.0), 0.5));
    EXPECT_EQ(v.verdict, Verdict::Supercritical);
    ASSERT_TRUE(v.witness.has_value());
    EXPECT_NEAR(*v.witness, 0.25, 1e-15);
    EXPECT_NEAR(v.breakdown_excess, 0.5, 1e-12);
}

TEST(ClassifyNoAlignment, GapDataIsIndeterminate) {
    const std::size_t n = 64;
    const auto c = cf(ClosedForm::affine_sine(1.0, 0.3), n);
    const auto rho = cf(ClosedForm::raised_cosine(1.0, 0.2), n);
    const double k = -1.0, nu = 0.0;
    const double l1 = omega(0.7, nu, k), l2 = omega(1.3, nu, k);
    // halfway between the two lines at every grid point
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = rho.sample(i);
        d[i] = 0.5 * (l1 / 0.7 * (r - 0.7) + l2 / 1.3 * (r - 1.3));
    }
    const Scenario scn(k, nu, c, rho, cf(ClosedForm::constant(0.0), n), PeriodicProfile::from_samples(d));
    const auto v = classify_no_alignment(scn);
    EXPECT_EQ(v.verdict, Verdict::Indeterminate);
    EXPECT_LT(v.margin, 0.0);
    EXPECT_LT(v.breakdown_excess, 0.0);
    EXPECT_GT(v.gap, 0.0);
    EXPECT_FALSE(v.witness.has_value());
    EXPECT_EQ(classify(scn).verdict, Verdict::Indeterminate);
}

TEST(ClassifyNoAlignment, EqualityOnTheGlobalLineIsNotSubcritical) {
    // c = const makes the lines coincide; the strict rule leaves equality out.
    const double lam = omega(1.0, 1.0, -1.0);
    const auto v = classify_no_alignment(constant_c(1.0, 1.0, -1.0, ClosedForm::constant(1.0), 0.0));
    EXPECT_NE(v.verdict, Verdict::Subcritical);
    EXPECT_DOUBLE_EQ(v.margin, 0.0);
    EXPECT_GT(lam, 0.0);
}

TEST(ClassifyConstantBackground, GoldenRatioLine) {
    // rho0 = 1 + sin peaks at 2 at x = 1/4; line at the peak is Omega(1,1) * (2 - 1).
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    EXPECT_NEAR(omega(1.0, 1.0, -1.0), golden, 1e-15);
    const auto rho = ClosedForm::affine_sine(1.0, 1.0);
    EXPECT_EQ(classify_constant_background(constant_c(1.0, 1.0, -1.0, rho, 1.7)).verdict, Verdict::Subcritical);
    EXPECT_EQ(classify_constant_background(constant_c(1.0, 1.0, -1.0, rho, 1.5)).verdict, Verdict::Supercritical);
    const auto boundary = classify_constant_background(constant_c(1.0, 1.0, -1.0, rho, omega(1.0, 1.0, -1.0)));
    EXPECT_EQ(boundary.verdict, Verdict::Subcritical);
    EXPECT_GE(boundary.margin, 0.0);
}

TEST(ClassifyConstantBackground, RejectsVariableBackground) {
    const Scenario scn(-1.0, 0.0, cf(ClosedForm::affine_sine(1.0, 0.3)), cf(ClosedForm::constant(1.0)),
                       cf(ClosedForm::constant(0.0)));
    EXPECT_THROW(classify_constant_background(scn), PreconditionError);
}

TEST(ClassifyConstantBackground, StrictSubcriticalImpliesNonStrict) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> amp(0.0, 0.9), slope(-2.0, 2.0), nu(0.0, 2.0), k(-3.0, -0.2);
    for (int i = 0; i < 200; ++i) {
        const auto scn = constant_c(1.0, nu(rng), k(rng), ClosedForm::raised_cosine(1.0, amp(rng)), slope(rng));
        if (classify_no_alignment(scn).verdict == Verdict::Subcritical) {
            EXPECT_EQ(classify_constant_background(scn).verdict, Verdict::Subcritical);
        }
        EXPECT_NE(classify_constant_background(scn).verdict, Verdict::Indeterminate);
    }
}

TEST(ClassifyAlignment, RaisedCosineKernelOnUniformDensity) {
    Kernel psi(cf(ClosedForm::raised_cosine(1.0, 1.0)));
    const auto above = classify_alignment(constant_c(1.0, 0.0, -1.0, ClosedForm::constant(1.0), 1.01, psi));
    EXPECT_EQ(above.verdict, Verdict::Subcritical);
    EXPECT_NEAR(above.constants.at("lambda_M"), 1.0 + std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(above.constants.at("mu_M"), std::sqrt(2.0) - 1.0, 1e-14);
    EXPECT_NEAR(above.margin, 0.01, 1e-12);
    const auto below = classify_alignment(constant_c(1.0, 0.0, -1.0, ClosedForm::constant(1.0), 0.99, psi));
    EXPECT_NE(below.verdict, Verdict::Subcritical);
    EXPECT_NEAR(below.margin, -0.01, 1e-12);
}

TEST(ClassifyAlignment, ZeroKernelReproducesNoAlignment) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> a(0.0, 0.5), b(0.0, 0.6), off(-3.0, 3.0), nu(0.0, 2.0), k(-3.0, -0.2),
        ph(0.0, 6.0);
    Kernel zero(cf(ClosedForm::constant(0.0)));
    for (int i = 0; i < 100; ++i) {
        const auto bg = cf(ClosedForm::affine_sine(1.0, a(rng), ph(rng)));
        const auto rho = cf(ClosedForm::raised_cosine(1.0, b(rng)));
        const auto u0x = cf(ClosedForm::affine_sine(off(rng), 0.3, ph(rng)));
        const double kk = k(rng), nn = nu(rng);
        const Scenario plain(kk, nn, bg, rho, cf(ClosedForm::constant(0.0)), u0x);
        const Scenario aligned(kk, nn, bg, rho, cf(ClosedForm::constant(0.0)), u0x, zero);
        const auto v1 = classify_no_alignment(plain);
        const auto v2 = classify_alignment(aligned);
        EXPECT_EQ(v1.verdict, v2.verdict);
        EXPECT_NEAR(v1.margin, v2.margin, 1e-12);
    }
}

TEST(ClassifyAlignment, ConstantKernelMatchesGeneralRule) {
    Kernel psi(cf(ClosedForm::constant(0.7)));
    for (double slope : {-1.0, 0.0, 0.4, 2.0}) {
        const Scenario scn(-1.5, 0.3, cf(ClosedForm::affine_sine(1.0, 0.2)), cf(ClosedForm::raised_cosine(1.0, 0.5)),
                           cf(ClosedForm::constant(0.0)), cf(ClosedForm::constant(slope)), psi);
        const auto g = classify_alignment(scn);
        const auto c = classify_constant_kernel(scn);
        EXPECT_EQ(g.verdict, c.verdict);
        EXPECT_NEAR(g.margin, c.margin, 1e-12);
        EXPECT_NEAR(g.breakdown_excess, c.breakdown_excess, 1e-12);
        EXPECT_EQ(g.witness, c.witness);
    }
    Kernel varying(cf(ClosedForm::raised_cosine(1.0, 0.5)));
    const Scenario scn(-1.0, 0.0, cf(ClosedForm::constant(1.0)), cf(ClosedForm::constant(1.0)),
                       cf(ClosedForm::constant(0.0)), std::nullopt, varying);
    EXPECT_THROW(classify_constant_kernel(scn), PreconditionError);
}

TEST(Classify, DispatchAndVerdictInvariants) {
    Kernel psi(cf(ClosedForm::raised_cosine(0.5, 0.2)));
    const auto with_kernel = constant_c(1.0, 0.0, -1.0, ClosedForm::constant(1.0), 5.0, psi);
    EXPECT_EQ(classify(with_kernel).rule, "alignment");
    EXPECT_EQ(classify(constant_c(1.0, 0.0, -1.0, ClosedForm::constant(1.0), 0.0)).rule, "constant_background");
    const Scenario variable(-1.0, 0.0, cf(ClosedForm::affine_sine(1.0, 0.3)), cf(ClosedForm::constant(1.0)),
                            cf(ClosedForm::constant(0.0)), cf(ClosedForm::constant(-5.0)));
    const auto v = classify(variable);
    EXPECT_EQ(v.rule, "no_alignment");
    EXPECT_EQ(v.verdict, Verdict::Supercritical);
    EXPECT_TRUE(v.witness.has_value());
    EXPECT_EQ(v.grid_size, 64u);
}

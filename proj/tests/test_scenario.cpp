#include <epct/scenario.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace epct;

namespace {

PeriodicProfile cf(const ClosedForm& f, std::size_t n = 64) { return PeriodicProfile::from_closed_form(f, n); }

// Composite Simpson rule, independent of the profile's own antiderivatives.
template <class F>
double simpson(F f, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

Scenario flat(std::size_t n = 64) {
    return Scenario(-1.0, 0.0, cf(ClosedForm::constant(1.0), n), cf(ClosedForm::constant(1.0), n),
                    cf(ClosedForm::constant(0.0), n));
}

} // namespace

TEST(TorusQuadrature, ConstantIntegrandIsOne) {
    EXPECT_DOUBLE_EQ(torus_quadrature(cf(ClosedForm::constant(1.0))), 1.0);
}

TEST(TorusQuadrature, OddFunctionVanishes) {
    EXPECT_NEAR(torus_quadrature(cf(ClosedForm::affine_sine(0.0, 1.0), 64)), 0.0, 1e-14);
}

TEST(TorusQuadrature, AffineSineMatchesExactIntegral) {
    const double oracle = simpson([](double x) { return 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * x); }, -0.5, 0.5);
    EXPECT_NEAR(torus_quadrature(cf(ClosedForm::affine_sine(1.0, 0.3), 128)), oracle, 1e-12);
}

TEST(TorusQuadrature, SpectralAccuracyOnNamedFamilies) {
    for (std::size_t n : {128u, 256u}) {
        EXPECT_NEAR(torus_quadrature(cf(ClosedForm::raised_cosine(0.7, 0.6), n)), 0.7, 1e-10);
        EXPECT_NEAR(torus_quadrature(cf(ClosedForm::affine_sine(2.0, 0.9, 1.1), n)), 2.0, 1e-10);
    }
}

TEST(PeriodicProfile, EvaluationIsPeriodic) {
    const auto closed = cf(ClosedForm::affine_sine(1.0, 0.4, 0.3));
    const auto sampled = PeriodicProfile::from_samples(std::vector<double>(closed.samples().begin(), closed.samples().end()));
    for (double x : {-0.5, -0.3125, 0.0, 0.125, 0.4375}) {
        EXPECT_EQ(closed(x + 1.0), closed(x));
        EXPECT_EQ(closed(x - 3.0), closed(x));
        EXPECT_EQ(sampled(x + 1.0), sampled(x));
    }
}

TEST(PeriodicProfile, ExtremaBracketOffGridValues) {
    const auto p = PeriodicProfile::from_samples({0.0, 1.0, 3.0, 2.0, -1.0, 0.5});
    const double tol = p.interpolation_error_bound();
    for (int i = 0; i <= 1000; ++i) {
        const double v = p(-0.5 + i / 1000.0);
        EXPECT_GE(v, p.min() - tol);
        EXPECT_LE(v, p.max() + tol);
    }
    const auto c = cf(ClosedForm::affine_sine(1.0, 0.3), 16);
    EXPECT_EQ(c.interpolation_error_bound(), 0.0);
    EXPECT_NEAR(c.min(), 0.7, 1e-12);
    EXPECT_NEAR(c.max(), 1.3, 1e-12);
}

TEST(PeriodicProfile, RejectsTinyGrids) {
    EXPECT_THROW(PeriodicProfile::from_samples({1.0, 2.0, 3.0}), InvalidScenario);
    EXPECT_THROW(cf(ClosedForm::constant(1.0), 2), InvalidScenario);
}

TEST(PeriodicProfile, DerivativeOfClosedFormIsExact) {
    const auto p = cf(ClosedForm::affine_sine(0.0, 0.2, 0.4));
    const auto d = p.derivative();
    for (double x : {-0.41, 0.0, 0.33}) {
        const double exact = 2.0 * std::numbers::pi * 0.2 * std::cos(2.0 * std::numbers::pi * x + 0.4);
        EXPECT_NEAR(d(x), exact, 1e-13);
    }
}

TEST(PeriodicProfile, FiniteDifferenceDerivativeIsSecondOrder) {
    auto err = [](std::size_t n) {
        const auto exact = cf(ClosedForm::affine_sine(0.0, 1.0), n);
        const auto sampled = PeriodicProfile::from_samples(std::vector<double>(exact.samples().begin(), exact.samples().end()));
        const auto d = sampled.derivative();
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            e = std::max(e, std::abs(d.sample(i) - 2.0 * std::numbers::pi * std::cos(2.0 * std::numbers::pi * d.grid_point(i))));
        return e;
    };
    EXPECT_NEAR(err(64) / err(128), 4.0, 0.05);
}

TEST(PeriodicProfile, FromPointsResamplesPeriodically) {
    const std::vector<double> xs{0.25, -0.25};
    const std::vector<double> vs{2.0, 0.0};
    const auto p = PeriodicProfile::from_points(xs, vs, 4);
    // grid -0.5, -0.25, 0, 0.25
    EXPECT_NEAR(p.sample(0), 1.0, 1e-15);
    EXPECT_NEAR(p.sample(1), 0.0, 1e-15);
    EXPECT_NEAR(p.sample(2), 1.0, 1e-15);
    EXPECT_NEAR(p.sample(3), 2.0, 1e-15);
    const std::vector<double> dup{0.1, 1.1};
    EXPECT_THROW(PeriodicProfile::from_points(dup, vs, 8), ConfigError);
}

TEST(Convolve, ConstantKernelGivesUnitMass) {
    Kernel one(cf(ClosedForm::constant(1.0)));
    const std::vector<WeightedPoint> w{{-0.3, 0.2}, {0.1, 0.5}, {0.45, 0.3}};
    EXPECT_NEAR(convolve(one, w, 0.27), 1.0, 1e-15);
}

TEST(Convolve, RaisedCosineAgainstUniformDensity) {
    Kernel psi(cf(ClosedForm::raised_cosine(1.0, 1.0)));
    EXPECT_DOUBLE_EQ(psi.psi_min(), 0.0);
    EXPECT_DOUBLE_EQ(psi.psi_max(), 2.0);
    const Scenario scn(-1.0, 0.0, cf(ClosedForm::constant(1.0)), cf(ClosedForm::constant(1.0)),
                       cf(ClosedForm::constant(0.0)), std::nullopt, psi);
    const auto w = scn.initial_weights();
    for (double x : {-0.5, -0.1, 0.2, 0.37})
        EXPECT_NEAR(convolve(psi, w, x), 1.0, 1e-12);
}

TEST(Convolve, PointMassSeesKernelMaximum) {
    Kernel psi(cf(ClosedForm::raised_cosine(1.0, 1.0)));
    const std::vector<WeightedPoint> w{{0.3, 1.0}};
    EXPECT_DOUBLE_EQ(convolve(psi, w, 0.3), 2.0);
}

TEST(Convolve, RejectsNegativeMassAndStaysInRange) {
    Kernel psi(cf(ClosedForm::raised_cosine(0.6, 0.4)));
    const std::vector<WeightedPoint> bad{{0.0, 1.5}, {0.2, -0.5}};
    EXPECT_THROW(convolve(psi, bad, 0.0), PreconditionError);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5), m(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<WeightedPoint> w(10);
        double total = 0.0;
        for (auto& p : w) {
            p = {u(rng), m(rng)};
            total += p.mass;
        }
        for (auto& p : w)
            p.mass /= total;
        const double v = convolve(psi, w, u(rng));
        EXPECT_GE(v, psi.psi_min() - 1e-14);
        EXPECT_LE(v, psi.psi_max() + 1e-14);
    }
}

TEST(Kernel, ValidatesSymmetrySignAndLipschitz) {
    EXPECT_THROW(Kernel(cf(ClosedForm::affine_sine(1.0, 0.5))), InvalidScenario);
    EXPECT_THROW(Kernel(cf(ClosedForm::raised_cosine(0.2, 0.5))), InvalidScenario);
    EXPECT_THROW(Kernel(cf(ClosedForm::raised_cosine(1.0, 1.0)), 0.5), InvalidScenario);
    const Kernel ok(cf(ClosedForm::raised_cosine(1.0, 1.0)), 2.0 * std::numbers::pi);
    EXPECT_DOUBLE_EQ(ok.lipschitz(), 2.0 * std::numbers::pi);
    const Kernel inferred(cf(ClosedForm::raised_cosine(1.0, 1.0), 256));
    EXPECT_LE(inferred.lipschitz(), 2.0 * std::numbers::pi);
    EXPECT_GT(inferred.lipschitz(), 6.0);
}

TEST(InitialField, VanishesForEquilibrium) {
    const auto scn = flat();
    for (double a : {-0.5, -0.2, 0.0, 0.3, 0.5})
        EXPECT_NEAR(initial_electric_field(scn, a), 0.0, 1e-15);
}

TEST(InitialField, SineDensityAgainstQuadrature) {
    const Scenario scn(-1.0, 0.0, cf(ClosedForm::constant(1.0)), cf(ClosedForm::affine_sine(1.0, 0.3)),
                       cf(ClosedForm::constant(0.0)));
    const double oracle = simpson([](double y) { return 0.3 * std::sin(2.0 * std::numbers::pi * y); }, -0.5, 0.0);
    EXPECT_NEAR(oracle, -0.09549296585513720, 1e-12);
    EXPECT_NEAR(initial_electric_field(scn, 0.0), oracle, 1e-12);
    EXPECT_NEAR(initial_electric_field(scn, 0.5), 0.0, 1e-10);
    EXPECT_NEAR(initial_electric_field(scn, -0.5), 0.0, 1e-15);
}

TEST(InitialField, TabulatedProfilesUseInterpolantIntegral) {
    std::vector<double> rho(32), c(32, 1.0);
    for (std::size_t i = 0; i < 32; ++i)
        rho[i] = 1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * PeriodicProfile::grid_point(i, 32));
    const Scenario scn(-1.0, 0.0, PeriodicProfile::from_samples(c), PeriodicProfile::from_samples(rho),
                       PeriodicProfile::from_samples(std::vector<double>(32, 0.0)));
    double prev = initial_electric_field(scn, -0.5);
    EXPECT_NEAR(prev, 0.0, 1e-15);
    for (int i = 1; i <= 100; ++i) {
        const double v = initial_electric_field(scn, -0.5 + i / 100.0);
        EXPECT_LT(std::abs(v - prev), 0.02);
        prev = v;
    }
    EXPECT_NEAR(prev, 0.0, 1e-12);
}

TEST(Scenario, RejectsRepulsiveForcing) {
    try {
        Scenario(1.0, 0.0, cf(ClosedForm::constant(1.0)), cf(ClosedForm::constant(1.0)), cf(ClosedForm::constant(0.0)));
        FAIL();
    } catch (const InvalidScenario& e) {
        EXPECT_NE(std::string(e.what()).find("attractive forcing required (k<0)"), std::string::npos);
    }
}

TEST(Scenario, RejectsNeutralityViolation) {
    try {
        Scenario(-1.0, 0.0, cf(ClosedForm::constant(1.0)), cf(ClosedForm::constant(1.0003)), cf(ClosedForm::constant(0.0)));
        FAIL();
    } catch (const InvalidScenario& e) {
        EXPECT_NE(std::string(e.what()).find("neutrality violated"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("0.0003"), std::string::npos);
    }
}

TEST(Scenario, RejectsBadProfiles) {
    const auto zero = cf(ClosedForm::constant(0.0));
    EXPECT_THROW(Scenario(-1.0, -0.1, cf(ClosedForm::constant(1.0)), cf(ClosedForm::constant(1.0)), zero), InvalidScenario);
    EXPECT_THROW(Scenario(-1.0, 0.0, cf(ClosedForm::affine_sine(1.0, 1.2)), cf(ClosedForm::constant(1.0)), zero), InvalidScenario);
    EXPECT_THROW(Scenario(-1.0, 0.0, cf(ClosedForm::constant(1.0)), cf(ClosedForm::affine_sine(1.0, 1.1)), zero), InvalidScenario);
    EXPECT_THROW(Scenario(-1.0, 0.0, cf(ClosedForm::constant(2.0)), cf(ClosedForm::constant(2.0)), zero), InvalidScenario);
    EXPECT_THROW(Scenario(-1.0, 0.0, cf(ClosedForm::constant(1.0)), cf(ClosedForm::constant(1.0), 32), zero), InvalidScenario);
}

TEST(Scenario, OptionalRescaleOfDensity) {
    const auto zero = cf(ClosedForm::constant(0.0));
    EXPECT_THROW(Scenario(-1.0, 0.0, cf(ClosedForm::constant(1.0)), cf(ClosedForm::raised_cosine(2.0, 0.5)), zero), InvalidScenario);
    const Scenario scn(-1.0, 0.0, cf(ClosedForm::constant(1.0)), cf(ClosedForm::raised_cosine(2.0, 0.5)), zero,
                       std::nullopt, std::nullopt, {true});
    EXPECT_NEAR(torus_quadrature(scn.rho0()), 1.0, 1e-14);
    EXPECT_NEAR(scn.rho0().max(), 1.25, 1e-14);
}

TEST(Scenario, DerivedExtremaAndSlope) {
    const Scenario scn(-1.0, 0.5, cf(ClosedForm::affine_sine(1.0, 0.3)), cf(ClosedForm::raised_cosine(1.0, 0.2)),
                       cf(ClosedForm::affine_sine(0.0, 0.1)));
    EXPECT_NEAR(scn.c1(), 0.7, 1e-12);
    EXPECT_NEAR(scn.c2(), 1.3, 1e-12);
    EXPECT_FALSE(scn.constant_background());
    EXPECT_NEAR(scn.u0x()(0.0), 0.2 * std::numbers::pi, 1e-13);
    EXPECT_TRUE(flat().constant_background());
}

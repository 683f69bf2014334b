#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qti/basis.hpp"
#include "qti/errors.hpp"

using namespace qti;

namespace {

// Values of phi_n(x) from 50-digit evaluation of the Rodrigues form.
struct Reference {
    int n;
    double x;
    double value;
};

const Reference kReference[] = {
    {0, 0.0, 0.75112554446494248286},   {1, 1.0, 0.64428836511347518151},
    {5, -0.7, -0.32729676349851072921}, {10, 2.5, 0.050963812362210439538},
    {20, -4.25, 0.36350767123524583007}, {33, 6.0, 0.096920120974291320572},
    {47, -8.5, 0.36359638587337769048},  {64, 3.3, 0.17677180029684496807},
    {64, 10.0, -0.18682479185964770627}, {50, 9.75, 0.45155377481736661823},
};

double phi_closed(int n, double x) {
    const double g = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
    switch (n) {
        case 0: return g;
        case 1: return std::sqrt(2.0) * x * g;
        case 2: return (2.0 * x * x - 1.0) / std::sqrt(2.0) * g;
        case 3: return (2.0 * x * x * x - 3.0 * x) / std::sqrt(3.0) * g;
        default: return NAN;
    }
}

}  // namespace

TEST(Hermite, MatchesHighPrecisionReference) {
    for (const auto& r : kReference) {
        EXPECT_NEAR(hermite_eval(r.n, r.x), r.value, 1e-10 * std::abs(r.value)) << "n=" << r.n << " x=" << r.x;
    }
}

TEST(Hermite, LowOrdersMatchClosedForms) {
    for (int n = 0; n <= 3; ++n)
        for (double x = -5.0; x <= 5.0; x += 0.37) EXPECT_NEAR(hermite_eval(n, x), phi_closed(n, x), 1e-14);
    EXPECT_EQ(hermite_eval(1, 0.0), 0.0);
    EXPECT_NEAR(hermite_eval(1, 1.0), std::sqrt(2.0) * kHermiteBound * std::exp(-0.5), 1e-15);
}

TEST(Hermite, OrderOverflowThrows) {
    HermiteEvaluator h(8);
    EXPECT_THROW(h(9, 0.0), OrderOverflowError);
    EXPECT_THROW(h(-1, 0.0), OrderOverflowError);
    EXPECT_NO_THROW(h(8, 30.0));
}

TEST(Hermite, FillAgreesWithPointwise) {
    HermiteEvaluator h(40);
    std::vector<double> out(41);
    h.fill(1.7, out);
    for (int n = 0; n <= 40; ++n) EXPECT_DOUBLE_EQ(out[n], h(n, 1.7));
}

TEST(Hermite, FiniteOnWideRange) {
    for (int n = 0; n <= 64; ++n)
        for (double x = -30.0; x <= 30.0; x += 0.5) ASSERT_TRUE(std::isfinite(hermite_eval(n, x)));
}

TEST(Potential, HarmonicPart) {
    EXPECT_DOUBLE_EQ(potential_eval(PotentialCoeffs::harmonic(4), 2.0), 2.0);
    PotentialCoeffs V{{1.0}};
    EXPECT_NEAR(potential_eval(V, 0.0), kHermiteBound, 1e-15);
    PotentialCoeffs odd{{0.0, 1.3, 0.0, -0.4, 0.0, 2.0}};
    EXPECT_EQ(potential_eval(odd, 0.0), 0.0);
}

TEST(Potential, DerivativeMatchesFiniteDifference) {
    PotentialCoeffs V{{0.3, -1.2, 0.8, 0.1, -0.5, 0.25, 0.0, 0.7}};
    const double h = 1e-6;
    for (double x = -4.0; x <= 4.0; x += 0.31) {
        const double fd = (potential_eval(V, x + h) - potential_eval(V, x - h)) / (2 * h);
        EXPECT_NEAR(potential_derivative(V, x), fd, 1e-7);
    }
    Potential bump = SinusoidalBump{};
    for (double x = -4.0; x <= 4.0; x += 0.31) {
        const double fd = (bump.value(x + h) - bump.value(x - h)) / (2 * h);
        EXPECT_NEAR(bump.derivative(x), fd, 1e-7);
        double v = 0, s = 0;
        bump.evaluate(x, v, s);
        EXPECT_DOUBLE_EQ(v, bump.value(x));
        EXPECT_DOUBLE_EQ(s, bump.derivative(x));
    }
}

TEST(Potential, ShowcaseClosedForm) {
    Potential truth = SinusoidalBump{};
    const double x = 0.9;
    EXPECT_NEAR(truth.value(x), 0.5 * x * x + 5.0 * std::sin(5.0 * x / std::numbers::pi) * std::exp(-0.5 * x * x),
                1e-14);
}

TEST(Prior, PowerLawShiftedIndex) {
    auto p = PriorSpec::power_law(12);
    ASSERT_EQ(p.gamma.size(), 13u);
    EXPECT_DOUBLE_EQ(p.gamma[0], 4.0);
    EXPECT_NEAR(p.gamma[12], 4.0 * std::pow(13.0, -1.2), 1e-15);
}

TEST(Prior, SampleMeanAndDeterminism) {
    auto spec = PriorSpec::power_law(12);
    RandomStream rng(7);
    const int n = 100000;
    std::vector<double> sum(13, 0.0);
    for (int i = 0; i < n; ++i) {
        auto v = sample_prior(spec, rng);
        for (int j = 0; j <= 12; ++j) sum[j] += v.v[j];
    }
    for (int j = 0; j <= 12; ++j) EXPECT_LT(std::abs(sum[j] / n), 3.0 * spec.gamma[j] / std::sqrt(double(n)));

    RandomStream a(99), b(99);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_prior(spec, a).v, sample_prior(spec, b).v);
}

TEST(Prior, TinyScalesConcentrateAtHarmonic) {
    PriorSpec spec{std::vector<double>(5, 1e-12)};
    RandomStream rng(1);
    for (double v : sample_prior(spec, rng).v) EXPECT_LT(std::abs(v), 1e-10);
}

TEST(Prior, RejectsNonPositiveScales) {
    PriorSpec spec{{1.0, 0.0}};
    EXPECT_THROW(spec.validate(), InvalidArgumentError);
}

TEST(Prior, DrawsAreUniformlyBounded) {
    auto spec = PriorSpec::power_law(12);
    double gsum = 0.0;
    for (double g : spec.gamma) gsum += g;
    RandomStream rng(3);
    for (int d = 0; d < 1000; ++d) {
        auto v = sample_prior(spec, rng);
        double sup = 0.0;
        for (double x = -12.0; x <= 12.0; x += 0.05) sup = std::max(sup, std::abs(potential_eval(v, x) - 0.5 * x * x));
        ASSERT_LT(sup, 10.0 * gsum);
    }
}

TEST(W1, IdentitySymmetryAndPhi0) {
    PotentialCoeffs a{{0.4, -0.3, 0.2}};
    PotentialCoeffs b{{-0.1, 0.5}};
    EXPECT_EQ(w1_distance(a, a), 0.0);
    EXPECT_DOUBLE_EQ(w1_distance(a, b), w1_distance(b, a));
    EXPECT_NEAR(w1_distance(PotentialCoeffs{{1.0}}, PotentialCoeffs::harmonic(0)), 1.0 + kHermiteBound, 1e-9);
    EXPECT_THROW(w1_distance(a, b, GridSpec{0.0, 1.0, 1}), InvalidGridError);
}

TEST(Serialization, CoefficientsRoundTrip) {
    PotentialCoeffs a{{0.1, 0.2, -0.3}};
    nlohmann::json j = a;
    EXPECT_EQ(j["L"], 2);
    EXPECT_EQ(j.get<PotentialCoeffs>().v, a.v);
}

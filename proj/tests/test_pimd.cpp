#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qti/errors.hpp"
#include "qti/pimd.hpp"
#include "qti/spectral.hpp"

using namespace qti;

TEST(Spectral, BandEigenpairsOfSmallMatrix) {
    // Tridiagonal (2, -1) matrix: eigenvalues 2 - 2 cos(k pi/(n+1)).
    const std::size_t n = 12;
    SymmetricBand H(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        H.set(i, i, 2.0);
        if (i + 1 < n) H.set(i + 1, i, -1.0);
    }
    auto w = band_eigenvalues(H);
    for (std::size_t k = 0; k < n; ++k)
        EXPECT_NEAR(w[k], 2.0 - 2.0 * std::cos((k + 1) * std::numbers::pi / (n + 1)), 1e-13);
    auto vecs = band_eigenvectors(H, w);
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) {
        H.multiply(vecs[k], y);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], w[k] * vecs[k][i], 1e-12);
    }
}

TEST(Spectral, DegenerateEigenvectorsAreOrthogonal) {
    // Two decoupled identical blocks interleaved: every eigenvalue is doubled.
    const std::size_t m = 10, n = 2 * m;
    SymmetricBand H(n, 4);
    add_kinetic(H, m, 0, 2, 0.3, 1.0);
    add_kinetic(H, m, 1, 2, 0.3, 1.0);
    auto w = band_eigenvalues(H);
    auto vecs = band_eigenvectors(H, w);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            double d = 0.0;
            for (std::size_t i = 0; i < n; ++i) d += vecs[a][i] * vecs[b][i];
            EXPECT_NEAR(d, a == b ? 1.0 : 0.0, 1e-10);
        }
}

TEST(Oracle, HarmonicSecondMoment) {
    const double exact = 0.5 / std::tanh(0.5);
    EXPECT_NEAR(harmonic_quantum_variance(1.0, 1.0), exact, 1e-15);
    EXPECT_NEAR(exact_thermal_average(PotentialCoeffs::harmonic(0), [](double x) { return x * x; }, 1.0, 1.0),
                exact, 1e-4);
    EXPECT_NEAR(exact_thermal_average(PotentialCoeffs::harmonic(0), [](double x) { return x * x; }, 2.0, 10.0),
                harmonic_quantum_variance(10.0, 2.0), 1e-4);
}

TEST(Oracle, ConstantObservableIsNormalized) {
    EXPECT_NEAR(exact_thermal_average(SinusoidalBump{}, Observable::gaussian(0.0, 0.0), 1.0, 10.0), 1.0, 1e-12);
}

TEST(Oracle, GridRefinementSelfConvergence) {
    const Potential truth = SinusoidalBump{};
    GridSpec g;
    for (const auto& A : {Observable::gaussian(-1.25, 1.0), Observable::hermite(1, 2.0)}) {
        const double coarse = exact_thermal_average(truth, A, 1.0, 10.0, g);
        const double fine = exact_thermal_average(truth, A, 1.0, 10.0, g.refined());
        EXPECT_LT(std::abs(coarse - fine), 1e-6);
    }
}

TEST(RingHarmonic, ClosedFormLimits) {
    EXPECT_NEAR(rp_harmonic_variance(1, 1.0, 2.5), 1.0 / 2.5, 1e-15);
    for (int n : {2, 5, 16}) EXPECT_GT(rp_harmonic_variance(n, 1.0, 1.0), 0.0);
    const double oracle = exact_thermal_average(PotentialCoeffs::harmonic(0), [](double x) { return x * x; }, 1.0, 1.0);
    EXPECT_NEAR(rp_harmonic_variance(1024, 1.0, 1.0), oracle, 1e-4);
}

TEST(BatchMeansTest, ConstantSeriesHasZeroError) {
    BatchMeans b(100, 32);
    for (int i = 0; i < 100; ++i) b.add(1.0);
    EXPECT_EQ(b.mean(), 1.0);
    EXPECT_EQ(b.std_err(), 0.0);
    EXPECT_THROW(b.add(1.0), InvalidArgumentError);
}

TEST(BatchMeansTest, IidStandardError) {
    RandomStream rng(4);
    const long n = 64000;
    BatchMeans b(n, 32);
    for (long i = 0; i < n; ++i) b.add(rng.normal());
    EXPECT_NEAR(b.std_err(), 1.0 / std::sqrt(double(n)), 0.35 / std::sqrt(double(n)));
}

TEST(Baoab, OStageLimits) {
    RingParams params(4, 2.0, 1.0);
    const PotentialCoeffs Vo = PotentialCoeffs::harmonic(0);
    RingState s{std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)};
    const double sd = std::sqrt(params.mass() / params.beta_n());

    // Huge friction: the O stage forgets the incoming momentum entirely.
    RandomStream rng(8), copy(8);
    BaoabIntegrator heavy(Vo, params, 1.0, 60.0, s);
    heavy.step(rng);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(heavy.midpoint_momentum()[i], sd * copy.normal(), 1e-12);

    // Zero friction: the O stage is the identity, leaving velocity Verlet.
    BaoabIntegrator free(Vo, params, 0.1, 0.0, s);
    free.step(rng);
    const double dt = 0.1;
    for (int i = 0; i < 4; ++i) {
        EXPECT_DOUBLE_EQ(free.midpoint_momentum()[i], 1.0);
        const double q = dt * 1.0 / params.mass();
        EXPECT_NEAR(free.state().q[i], q, 1e-15);
        EXPECT_NEAR(free.state().p[i], 1.0 - 0.5 * dt * q, 1e-15);
    }
}

TEST(Baoab, ZeroFrictionHasNoEnergyDrift) {
    // Verlet conserves a shadow Hamiltonian, so H oscillates at O(dt^2) but
    // its windowed average must not trend.
    RingParams params(8, 1.0, 1.0);
    const PotentialCoeffs Vo = PotentialCoeffs::harmonic(0);
    RandomStream rng(21);
    RingState s = thermal_start(Vo, params, rng);
    for (double& q : s.q) q = rng.normal() * 0.5;
    const double h0 = hamiltonian(s, Vo, params);
    BaoabIntegrator integ(Vo, params, 1e-3, 0.0, s);
    const int steps = 10000, window = 1000;
    double first = 0.0, last = 0.0;
    for (int t = 0; t < steps; ++t) {
        integ.step(rng);
        const double h = hamiltonian(integ.state(), Vo, params);
        if (t < window) first += h;
        if (t >= steps - window) last += h;
    }
    EXPECT_LT(std::abs(last - first) / window / std::abs(h0), 1e-6);
}

TEST(Baoab, DivergenceIsReported) {
    RingParams params(4, 1.0, 1.0);
    RandomStream rng(1);
    RingState s = thermal_start(PotentialCoeffs::harmonic(0), params, rng);
    BaoabIntegrator integ(PotentialCoeffs::harmonic(0), params, 5.0, 0.1, s);
    EXPECT_THROW(
        {
            for (int t = 0; t < 2000; ++t) integ.step(rng);
        },
        DivergenceError);
}

TEST(Forward, ConstantObservableIsExact) {
    RingParams params(8, 1.0, 1.0);
    LangevinConfig cfg;
    cfg.n_steps = 4000;
    cfg.n_burnin = 1000;
    std::vector<Observable> obs{Observable::gaussian(0.0, 0.0)};
    auto est = forward_estimate(PotentialCoeffs::harmonic(0), obs, params, cfg);
    EXPECT_EQ(est[0].mean, 1.0);
    EXPECT_EQ(est[0].std_err, 0.0);
    EXPECT_EQ(est[0].n_samples, 3000);
}

TEST(Forward, DeterministicForFixedSeed) {
    RingParams params(6, 1.0, 1.0);
    LangevinConfig cfg;
    cfg.n_steps = 3000;
    cfg.n_burnin = 500;
    cfg.thin = 2;
    cfg.seed = 77;
    std::vector<Observable> obs{Observable::gaussian(0.5, 1.0), Observable::hermite(1, 2.0)};
    auto a = forward_estimate(SinusoidalBump{}, obs, params, cfg);
    auto b = forward_estimate(SinusoidalBump{}, obs, params, cfg);
    for (std::size_t k = 0; k < obs.size(); ++k) {
        EXPECT_EQ(a[k].mean, b[k].mean);
        EXPECT_EQ(a[k].std_err, b[k].std_err);
        EXPECT_EQ(a[k].n_samples, 1250);
    }
}

TEST(Forward, HarmonicSurrogateMatchesRingOracle) {
    // For V = x^2/2 each bead is N(0, s2); the surrogate (1 - e^(-a x^2))/a then
    // has mean (1 - 1/sqrt(1 + 2 a s2))/a.
    RingParams params(64, 1.0, 1.0);
    const double a = 0.05;
    const double s2 = rp_harmonic_variance(params);
    const double oracle = (1.0 - 1.0 / std::sqrt(1.0 + 2.0 * a * s2)) / a;
    LangevinConfig cfg;
    cfg.n_steps = 60000;
    cfg.n_burnin = 5000;
    cfg.seed = 3;
    std::vector<Observable> obs{Observable::quadratic_surrogate(a)};
    auto est = forward_estimate(PotentialCoeffs::harmonic(0), obs, params, cfg);
    EXPECT_LT(std::abs(est[0].mean - oracle), 3.0 * est[0].std_err);
}

TEST(Langevin, Validation) {
    LangevinConfig cfg;
    cfg.dt = 0.5;
    cfg.gamma_f = 5.0;
    EXPECT_THROW(cfg.validate(), InvalidArgumentError);
    cfg.gamma_f = 1.0;
    cfg.n_burnin = cfg.n_steps;
    EXPECT_THROW(cfg.validate(), InvalidArgumentError);
    RingParams params(16, 10.0, 1.0);
    EXPECT_NEAR(LangevinConfig{}.resolved(params).dt, 0.05 * std::sqrt(10.0) / 16.0, 1e-15);
}

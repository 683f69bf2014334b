#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "qti/basis.hpp"
#include "qti/grid.hpp"
#include "qti/random.hpp"
#include "qti/ringpoly.hpp"

namespace qti {

// BAOAB settings. n_steps counts every step including burn-in; a sample is
// taken every `thin` steps after burn-in. dt <= 0 means "use default_dt".
struct LangevinConfig {
    double dt = 0.0;
    double gamma_f = 1.0;
    long n_steps = 110000;
    long n_burnin = 10000;
    long thin = 1;
    int n_batches = 32;
    std::uint64_t seed = 0;

    // 0.05 * sqrt(M) * beta_N
    static double default_dt(const RingParams& params);

    LangevinConfig resolved(const RingParams& params) const;
    long n_samples() const noexcept { return (n_steps - n_burnin) / thin; }
    void validate() const;
};

void to_json(nlohmann::json& j, const LangevinConfig& cfg);

struct ForwardEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    long n_samples = 0;
};

void to_json(nlohmann::json& j, const ForwardEstimate& e);

// Streaming batch-means accumulator over a series of known length. Samples
// are split into n_batches contiguous batches of (almost) equal size.
class BatchMeans {
public:
    BatchMeans(long n_total, int n_batches);

    void add(double x);
    double mean() const;
    double std_err() const;
    long count() const noexcept { return count_; }
    ForwardEstimate estimate() const { return {mean(), std_err(), count_}; }

private:
    long n_total_;
    int n_batches_;
    long count_ = 0;
    int batch_ = 0;
    long batch_end_;
    double total_ = 0.0;
    std::vector<double> sums_;
    std::vector<long> sizes_;
};

// BAOAB splitting for the 1-level ring polymer with the force cached between
// steps. midpoint_momentum() exposes p right after the O stage, which is the
// momentum whose marginal BAOAB preserves exactly for quadratic potentials.
class BaoabIntegrator {
public:
    BaoabIntegrator(Potential V, const RingParams& params, double dt, double gamma_f, RingState initial);

    void step(RandomStream& rng);

    const RingState& state() const noexcept { return state_; }
    std::span<const double> midpoint_momentum() const noexcept { return p_mid_; }

private:
    Potential V_;
    RingParams params_;
    double dt_;
    double friction_;
    double noise_;
    RingState state_;
    std::vector<double> force_;
    std::vector<double> p_mid_;
};

// One B(dt/2) A(dt/2) O(dt) A(dt/2) B(dt/2) step from `state`. Throws
// DivergenceError if the result is not finite.
RingState baoab_step(const RingState& state, const Potential& V, const RingParams& params,
                     const LangevinConfig& cfg, RandomStream& rng);

// Minimiser of V over the coarse grid {-5, -4.95, ..., 5}, used as the
// starting position of every bead.
double coarse_minimizer(const Potential& V);

// All beads at coarse_minimizer(V), momenta drawn from N(0, M/beta_N).
RingState thermal_start(const Potential& V, const RingParams& params, RandomStream& rng);

// Time averages of ring_average for each observable along one BAOAB
// trajectory seeded by cfg.seed, with batch-means standard errors.
std::vector<ForwardEstimate> forward_estimate(const Potential& V, std::span<const Observable> observables,
                                              const RingParams& params, const LangevinConfig& cfg);

// Tr[e^(-beta H) A] / Tr[e^(-beta H)] for H = -(1/2M) d^2/dx^2 + V on the grid
// interior with zero boundary values and a fourth-order difference Laplacian.
double exact_thermal_average(const Potential& V, const std::function<double(double)>& A, double beta, double mass,
                             const GridSpec& grid = {});
double exact_thermal_average(const Potential& V, const Observable& A, double beta, double mass,
                             const GridSpec& grid = {});

// Oracle for several observables from one diagonalisation.
std::vector<double> exact_thermal_averages(const Potential& V, std::span<const Observable> observables, double beta,
                                           double mass, const GridSpec& grid = {});

// Per-bead position variance of the harmonic (V = x^2/2) ring polymer,
// (1/N) sum_k 1/lambda_k, lambda_k = beta_N [ (2M/beta_N^2)(1 - cos(2 pi k/N)) + 1 ].
double rp_harmonic_variance(int beads, double mass, double beta);
double rp_harmonic_variance(const RingParams& params);

// coth(beta w / 2) / (2 M w) with w = 1/sqrt(M): the exact quantum <x^2> for V = x^2/2.
double harmonic_quantum_variance(double mass, double beta);

}  // namespace qti

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qti/basis.hpp"
#include "qti/pimd.hpp"
#include "qti/random.hpp"
#include "qti/ringpoly.hpp"
#include "qti/twolevel.hpp"

namespace qti {

// Gaussian observation noise N(0, Gamma). The inverse and a Cholesky factor
// are computed once at construction.
class NoiseModel {
public:
    enum class Form { Scalar, Diagonal, Full };

    static NoiseModel scalar(double scale, std::size_t size);
    static NoiseModel diagonal(std::vector<double> variances);
    static NoiseModel full(const Eigen::MatrixXd& covariance);

    Form form() const noexcept { return form_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(covariance_.rows()); }
    const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }

    // Gamma^-1 y
    Eigen::VectorXd solve(std::span<const double> y) const;

    // One draw from N(0, Gamma).
    std::vector<double> sample(RandomStream& rng) const;

    // (1/N_T) Tr Gamma
    double mean_variance() const;

private:
    NoiseModel(Form form, Eigen::MatrixXd covariance);

    Form form_;
    Eigen::MatrixXd covariance_;
    Eigen::MatrixXd inverse_;
    Eigen::MatrixXd cholesky_;
};

void to_json(nlohmann::json& j, const NoiseModel& noise);

// Phi = <y_hat, Gamma^-1 (y_hat/2 - y_star)>.
double neg_log_likelihood(std::span<const double> y_hat, std::span<const double> y_star, const NoiseModel& noise);

// Accept with probability exp(min{0, phi_old - phi_new}); consumes exactly one uniform.
bool mh_decide(double phi_old, double phi_new, RandomStream& rng);

// rho xi + sqrt(1 - rho^2) g
double pcn_gaussian(double xi, double rho, RandomStream& rng);

// (sqrt(rho r) + rb g1)^2 + (rb g2)^2 with rb = sqrt((1 - rho)/2). Keeps Exp(1)
// invariant and has lag-1 correlation rho.
double pcn_exponential(double r, double rho, RandomStream& rng);

// pCN on the whitened coordinates xi_i = v_i / gamma_i.
PotentialCoeffs propose_potential(const PotentialCoeffs& V, const PriorSpec& prior, double rho, RandomStream& rng);

// Whitened chain state: standard-normal coordinates for Hermite coefficients
// and unit-exponential coordinates for coupling amplitudes.
struct PriorCoordinates {
    std::vector<double> xi;
    std::vector<double> r;

    bool operator==(const PriorCoordinates&) const = default;
};

void to_json(nlohmann::json& j, const PriorCoordinates& c);

PriorCoordinates propose_coordinates(const PriorCoordinates& c, double rho, RandomStream& rng);

struct ForwardResult {
    std::vector<double> train;
    std::vector<double> test;
    std::vector<double> test_se;
};

// Maps whitened coordinates to predicted training and test observations.
// Implementations must be deterministic in (coords, seed) and safe to call
// concurrently.
class ForwardModel {
public:
    virtual ~ForwardModel() = default;

    virtual std::size_t n_train() const = 0;
    virtual std::size_t n_test() const = 0;
    virtual std::size_t n_gaussian() const = 0;
    virtual std::size_t n_exponential() const { return 0; }

    virtual ForwardResult evaluate(const PriorCoordinates& c, std::uint64_t seed) const = 0;

    // Physical parameters of the state, e.g. {"L", "v"} for a 1-level potential.
    virtual nlohmann::json describe(const PriorCoordinates& c) const = 0;

    // Named potential curves on the points xs (one row per surface).
    virtual std::vector<std::string> surface_names() const = 0;
    virtual std::vector<std::vector<double>> surfaces(const PriorCoordinates& c, std::span<const double> xs) const = 0;

    // Starting coordinates: all xi = 0 and all r = 1.
    PriorCoordinates origin() const;
};

// 1-level: V = V_o + sum gamma_i xi_i phi_i, observables estimated by BAOAB.
class OneLevelForward : public ForwardModel {
public:
    OneLevelForward(PriorSpec prior, std::vector<Observable> train, std::vector<Observable> test, RingParams params,
                    LangevinConfig sampler);

    std::size_t n_train() const override { return train_.size(); }
    std::size_t n_test() const override { return test_.size(); }
    std::size_t n_gaussian() const override { return prior_.gamma.size(); }

    ForwardResult evaluate(const PriorCoordinates& c, std::uint64_t seed) const override;
    nlohmann::json describe(const PriorCoordinates& c) const override;
    std::vector<std::string> surface_names() const override { return {"V"}; }
    std::vector<std::vector<double>> surfaces(const PriorCoordinates& c, std::span<const double> xs) const override;

    PotentialCoeffs potential(const PriorCoordinates& c) const;
    const PriorSpec& prior() const noexcept { return prior_; }

private:
    PriorSpec prior_;
    std::vector<Observable> train_;
    std::vector<Observable> test_;
    RingParams params_;
    LangevinConfig sampler_;
};

// 2-level: V00, V11 with Gaussian priors, V01 amplitudes A_i = scale * r_i
// with r_i ~ Exp(1); centres and widths are fixed.
class TwoLevelForward : public ForwardModel {
public:
    TwoLevelForward(PriorSpec prior00, PriorSpec prior11, std::vector<GaussianComponent> coupling_shape,
                    double amplitude_scale, std::vector<TwoLevelObservable> train,
                    std::vector<TwoLevelObservable> test, RingParams params, LangevinConfig sampler, double eta);

    std::size_t n_train() const override { return train_.size(); }
    std::size_t n_test() const override { return test_.size(); }
    std::size_t n_gaussian() const override { return prior00_.gamma.size() + prior11_.gamma.size(); }
    std::size_t n_exponential() const override { return shape_.size(); }

    ForwardResult evaluate(const PriorCoordinates& c, std::uint64_t seed) const override;
    nlohmann::json describe(const PriorCoordinates& c) const override;
    std::vector<std::string> surface_names() const override { return {"V00", "V11", "V01"}; }
    std::vector<std::vector<double>> surfaces(const PriorCoordinates& c, std::span<const double> xs) const override;

    TwoLevelPotential potential(const PriorCoordinates& c) const;

private:
    PriorSpec prior00_;
    PriorSpec prior11_;
    std::vector<GaussianComponent> shape_;
    double amplitude_scale_;
    std::vector<TwoLevelObservable> train_;
    std::vector<TwoLevelObservable> test_;
    RingParams params_;
    LangevinConfig sampler_;
    double eta_;
};

// Deterministic linear map y = G v with v_i = gamma_i xi_i; test values are v.
class LinearForward : public ForwardModel {
public:
    LinearForward(PriorSpec prior, Eigen::MatrixXd G);

    std::size_t n_train() const override { return static_cast<std::size_t>(G_.rows()); }
    std::size_t n_test() const override { return prior_.gamma.size(); }
    std::size_t n_gaussian() const override { return prior_.gamma.size(); }

    ForwardResult evaluate(const PriorCoordinates& c, std::uint64_t seed) const override;
    nlohmann::json describe(const PriorCoordinates& c) const override;
    std::vector<std::string> surface_names() const override { return {"V"}; }
    std::vector<std::vector<double>> surfaces(const PriorCoordinates& c, std::span<const double> xs) const override;

private:
    PriorSpec prior_;
    Eigen::MatrixXd G_;
};

struct InversionConfig {
    double rho = 0.95;
    long n_proposals = 400;
    int n_runs = 4;
    long t_ac = 50;
    long burn_in = 0;
    long snapshot_every = 50;
    int workers = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

void to_json(nlohmann::json& j, const InversionConfig& cfg);

// Iteration 0 is the initial state; iteration k >= 1 is the state after the
// k-th proposal was decided.
struct ChainRecord {
    long iteration = 0;
    PriorCoordinates coords;
    std::vector<double> y_hat;
    std::vector<double> test;
    double phi = 0.0;
    bool accepted = true;
};

struct RunResult {
    std::uint64_t seed = 0;
    std::vector<ChainRecord> chain;
    long accepted = 0;
    std::string failure;

    double acceptance_rate() const;
};

struct Prediction {
    double mean = 0.0;
    double se_across_runs = 0.0;
    double se_pooled = 0.0;
    long n_samples = 0;
};

struct InversionResult {
    std::vector<RunResult> runs;
    std::vector<Prediction> predictions;
};

// Seed of run `run` and of the forward evaluation at `iteration` within it.
std::uint64_t run_seed(std::uint64_t master, int run);
std::uint64_t forward_seed(std::uint64_t run_seed, long iteration);

// One chain of the proposal / forward / decide loop.
RunResult run_chain(const ForwardModel& model, std::span<const double> y_star, const NoiseModel& noise,
                    const InversionConfig& cfg, int run);

// cfg.n_runs independent chains (up to cfg.workers at a time) and the test
// predictions from the samples at iterations burn_in, burn_in + t_ac, ...
InversionResult run_inversion(const ForwardModel& model, std::span<const double> y_star, const NoiseModel& noise,
                              const InversionConfig& cfg);

// Iterations used for prediction in a chain of length n_records.
std::vector<long> thinned_iterations(long n_records, long burn_in, long t_ac);

// Averages over the thinned samples of every completed run, using only
// iterations <= last_iteration.
std::vector<Prediction> summarize_predictions(std::span<const RunResult> runs, std::size_t n_test, long burn_in,
                                              long t_ac, long last_iteration = std::numeric_limits<long>::max());

struct Autocorrelation {
    std::vector<double> acf;
    bool degenerate = false;
};

// Normalised empirical autocorrelation for lags 0..max_lag. A constant series
// yields ACF = 1 at every lag with degenerate = true.
Autocorrelation autocorrelation(std::span<const double> series, long max_lag);

// Runs `count` jobs on up to `workers` threads; job i writes only its own slot.
// The first exception thrown by any job is rethrown after all threads finish.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& job);

}  // namespace qti

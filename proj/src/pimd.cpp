#include "qti/pimd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qti/errors.hpp"
#include "qti/spectral.hpp"

namespace qti {

double LangevinConfig::default_dt(const RingParams& params) {
    return 0.05 * std::sqrt(params.mass()) * params.beta_n();
}

LangevinConfig LangevinConfig::resolved(const RingParams& params) const {
    LangevinConfig out = *this;
    if (!(out.dt > 0.0)) out.dt = default_dt(params);
    return out;
}

void LangevinConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgumentError("dt must be positive");
    if (!(gamma_f >= 0.0) || !std::isfinite(gamma_f)) throw InvalidArgumentError("gamma_f must be non-negative");
    if (!(dt * gamma_f < 2.0)) throw InvalidArgumentError("dt * gamma_f must be below 2");
    if (n_burnin < 0 || n_burnin >= n_steps) throw InvalidArgumentError("need 0 <= n_burnin < n_steps");
    if (thin < 1) throw InvalidArgumentError("thin must be at least 1");
    if (n_batches < 2) throw InvalidArgumentError("n_batches must be at least 2");
    if (n_samples() < n_batches) throw InvalidArgumentError("fewer samples than batches");
}

void to_json(nlohmann::json& j, const LangevinConfig& cfg) {
    j = {{"dt", cfg.dt},           {"gamma_f", cfg.gamma_f}, {"n_steps", cfg.n_steps},
         {"n_burnin", cfg.n_burnin}, {"thin", cfg.thin},       {"n_batches", cfg.n_batches},
         {"seed", cfg.seed}};
}

void to_json(nlohmann::json& j, const ForwardEstimate& e) {
    j = {{"mean", e.mean}, {"std_err", e.std_err}, {"n_samples", e.n_samples}};
}

BatchMeans::BatchMeans(long n_total, int n_batches)
    : n_total_(n_total), n_batches_(n_batches), sums_(static_cast<std::size_t>(n_batches), 0.0),
      sizes_(static_cast<std::size_t>(n_batches), 0) {
    if (n_batches < 2 || n_total < n_batches) throw InvalidArgumentError("batch means needs n_total >= n_batches >= 2");
    batch_end_ = n_total_ / n_batches_;
}

void BatchMeans::add(double x) {
    if (count_ >= n_total_) throw InvalidArgumentError("batch means received more samples than declared");
    while (count_ >= batch_end_) {
        ++batch_;
        batch_end_ = n_total_ * (batch_ + 1) / n_batches_;
    }
    sums_[static_cast<std::size_t>(batch_)] += x;
    ++sizes_[static_cast<std::size_t>(batch_)];
    total_ += x;
    ++count_;
}

double BatchMeans::mean() const {
    if (count_ == 0) throw InvalidArgumentError("no samples");
    return total_ / static_cast<double>(count_);
}

double BatchMeans::std_err() const {
    if (count_ != n_total_) throw InvalidArgumentError("batch means is incomplete");
    double mean_of_means = 0.0;
    std::vector<double> means(sums_.size());
    for (std::size_t b = 0; b < sums_.size(); ++b) {
        means[b] = sums_[b] / static_cast<double>(sizes_[b]);
        mean_of_means += means[b];
    }
    mean_of_means /= static_cast<double>(n_batches_);
    double ss = 0.0;
    for (double m : means) ss += (m - mean_of_means) * (m - mean_of_means);
    const double b = static_cast<double>(n_batches_);
    return std::sqrt(ss / (b - 1.0) / b);
}

BaoabIntegrator::BaoabIntegrator(Potential V, const RingParams& params, double dt, double gamma_f, RingState initial)
    : V_(std::move(V)), params_(params), dt_(dt), friction_(std::exp(-gamma_f * dt)),
      noise_(std::sqrt(-std::expm1(-2.0 * gamma_f * dt) * params.mass() / params.beta_n())),
      state_(std::move(initial)) {
    state_.validate(params.beads());
    const auto n = static_cast<std::size_t>(params.beads());
    force_.assign(n, 0.0);
    p_mid_.assign(n, 0.0);
    force_into(state_.q, V_, params_, force_);
}

void BaoabIntegrator::step(RandomStream& rng) {
    auto& q = state_.q;
    auto& p = state_.p;
    const std::size_t n = q.size();
    const double half = 0.5 * dt_;
    const double drift = half / params_.mass();
    for (std::size_t i = 0; i < n; ++i) {
        p[i] += half * force_[i];
        q[i] += drift * p[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = friction_ * p[i] + noise_ * rng.normal();
        p_mid_[i] = p[i];
        q[i] += drift * p[i];
    }
    force_into(q, V_, params_, force_);
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] += half * force_[i];
        finite = finite && std::isfinite(q[i]) && std::isfinite(p[i]);
    }
    if (!finite) throw DivergenceError("BAOAB trajectory diverged; reduce dt (currently " + std::to_string(dt_) + ")");
}

RingState baoab_step(const RingState& state, const Potential& V, const RingParams& params,
                     const LangevinConfig& cfg, RandomStream& rng) {
    const LangevinConfig c = cfg.resolved(params);
    BaoabIntegrator integrator(V, params, c.dt, c.gamma_f, state);
    integrator.step(rng);
    return integrator.state();
}

double coarse_minimizer(const Potential& V) {
    double best_x = 0.0;
    double best_v = V.value(0.0);
    for (int i = -100; i <= 100; ++i) {
        const double x = 0.05 * i;
        const double v = V.value(x);
        if (v < best_v || (v == best_v && std::abs(x) < std::abs(best_x))) {
            best_v = v;
            best_x = x;
        }
    }
    return best_x;
}

RingState thermal_start(const Potential& V, const RingParams& params, RandomStream& rng) {
    const auto n = static_cast<std::size_t>(params.beads());
    RingState s{std::vector<double>(n, coarse_minimizer(V)), std::vector<double>(n)};
    const double sd = std::sqrt(params.mass() / params.beta_n());
    for (double& p : s.p) p = sd * rng.normal();
    return s;
}

std::vector<ForwardEstimate> forward_estimate(const Potential& V, std::span<const Observable> observables,
                                              const RingParams& params, const LangevinConfig& cfg) {
    if (observables.empty()) throw InvalidArgumentError("forward_estimate needs at least one observable");
    const LangevinConfig c = cfg.resolved(params);
    c.validate();
    RandomStream rng(c.seed);
    BaoabIntegrator integrator(V, params, c.dt, c.gamma_f, thermal_start(V, params, rng));
    std::vector<BatchMeans> acc;
    acc.reserve(observables.size());
    for (std::size_t k = 0; k < observables.size(); ++k) acc.emplace_back(c.n_samples(), c.n_batches);

    for (long s = 0; s < c.n_burnin; ++s) integrator.step(rng);
    const long n_samples = c.n_samples();
    for (long s = 0; s < n_samples; ++s) {
        for (long t = 0; t < c.thin; ++t) integrator.step(rng);
        const auto& q = integrator.state().q;
        for (std::size_t k = 0; k < observables.size(); ++k) acc[k].add(ring_average(observables[k], q));
    }
    std::vector<ForwardEstimate> out;
    out.reserve(acc.size());
    for (const auto& a : acc) out.push_back(a.estimate());
    return out;
}

namespace {

SymmetricBand one_level_hamiltonian(const Potential& V, double mass, const GridSpec& grid) {
    grid.validate(16);
    if (!(mass > 0.0)) throw InvalidArgumentError("mass must be positive");
    const std::size_t n = grid.n_points - 2;
    SymmetricBand H(n, 2);
    add_kinetic(H, n, 0, 1, grid.spacing(), mass);
    for (std::size_t i = 0; i < n; ++i) H.set(i, i, H.get(i, i) + V.value(grid.point(i + 1)));
    return H;
}

}  // namespace

double exact_thermal_average(const Potential& V, const std::function<double(double)>& A, double beta, double mass,
                             const GridSpec& grid) {
    if (!(beta > 0.0)) throw InvalidArgumentError("beta must be positive");
    const SymmetricBand H = one_level_hamiltonian(V, mass, grid);
    const std::size_t n = H.size();
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = A(grid.point(i + 1));
    return boltzmann_average(H, beta, [&](std::span<const double> psi) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * psi[i] * psi[i];
        return s;
    });
}

double exact_thermal_average(const Potential& V, const Observable& A, double beta, double mass,
                             const GridSpec& grid) {
    return exact_thermal_average(V, [&A](double x) { return A(x); }, beta, mass, grid);
}

std::vector<double> exact_thermal_averages(const Potential& V, std::span<const Observable> observables, double beta,
                                           double mass, const GridSpec& grid) {
    if (!(beta > 0.0)) throw InvalidArgumentError("beta must be positive");
    const SymmetricBand H = one_level_hamiltonian(V, mass, grid);
    const std::size_t n = H.size();
    std::vector<double> density(n, 0.0);
    const auto states = thermal_states(H, beta);
    for (std::size_t k = 0; k < states.weights.size(); ++k)
        for (std::size_t i = 0; i < n; ++i) density[i] += states.weights[k] * states.vectors[k][i] * states.vectors[k][i];
    std::vector<double> out;
    out.reserve(observables.size());
    for (const auto& A : observables) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += A(grid.point(i + 1)) * density[i];
        out.push_back(s);
    }
    return out;
}

double rp_harmonic_variance(int beads, double mass, double beta) {
    if (beads < 1 || !(mass > 0.0) || !(beta > 0.0)) throw InvalidArgumentError("invalid ring parameters");
    const double bn = beta / beads;
    double s = 0.0;
    for (int k = 0; k < beads; ++k) {
        const double lambda =
            bn * ((2.0 * mass / (bn * bn)) * (1.0 - std::cos(2.0 * std::numbers::pi * k / beads)) + 1.0);
        s += 1.0 / lambda;
    }
    return s / beads;
}

double rp_harmonic_variance(const RingParams& params) {
    return rp_harmonic_variance(params.beads(), params.mass(), params.beta());
}

double harmonic_quantum_variance(double mass, double beta) {
    const double w = 1.0 / std::sqrt(mass);
    return 1.0 / (std::tanh(0.5 * beta * w) * 2.0 * mass * w);
}

}  // namespace qti

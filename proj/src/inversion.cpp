#include "qti/inversion.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "qti/errors.hpp"

namespace qti {

NoiseModel::NoiseModel(Form form, Eigen::MatrixXd covariance) : form_(form), covariance_(std::move(covariance)) {
    if (covariance_.rows() == 0 || covariance_.rows() != covariance_.cols())
        throw InvalidArgumentError("noise covariance must be a non-empty square matrix");
    if (!covariance_.allFinite()) throw InvalidArgumentError("noise covariance is not finite");
    if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * covariance_.cwiseAbs().maxCoeff())
        throw InvalidArgumentError("noise covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
    if (llt.info() != Eigen::Success) throw InvalidArgumentError("noise covariance must be positive definite");
    cholesky_ = llt.matrixL();
    inverse_ = llt.solve(Eigen::MatrixXd::Identity(covariance_.rows(), covariance_.cols()));
}

NoiseModel NoiseModel::scalar(double scale, std::size_t size) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgumentError("noise scale must be positive");
    const auto n = static_cast<Eigen::Index>(size);
    return NoiseModel(Form::Scalar, scale * Eigen::MatrixXd::Identity(n, n));
}

NoiseModel NoiseModel::diagonal(std::vector<double> variances) {
    for (double v : variances)
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgumentError("noise variances must be positive");
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(variances.data(), static_cast<Eigen::Index>(variances.size()));
    return NoiseModel(Form::Diagonal, d.asDiagonal());
}

NoiseModel NoiseModel::full(const Eigen::MatrixXd& covariance) { return NoiseModel(Form::Full, covariance); }

Eigen::VectorXd NoiseModel::solve(std::span<const double> y) const {
    if (y.size() != size()) throw DimensionError("observation length does not match the noise model");
    return inverse_ * Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
}

std::vector<double> NoiseModel::sample(RandomStream& rng) const {
    Eigen::VectorXd g(static_cast<Eigen::Index>(size()));
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.normal();
    const Eigen::VectorXd x = cholesky_ * g;
    return {x.data(), x.data() + x.size()};
}

double NoiseModel::mean_variance() const { return covariance_.trace() / static_cast<double>(size()); }

void to_json(nlohmann::json& j, const NoiseModel& noise) {
    switch (noise.form()) {
        case NoiseModel::Form::Scalar:
            j = {{"form", "scalar"}, {"scale", noise.covariance()(0, 0)}, {"size", noise.size()}};
            break;
        case NoiseModel::Form::Diagonal: {
            std::vector<double> d(noise.size());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = noise.covariance()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
            j = {{"form", "diagonal"}, {"variances", d}};
            break;
        }
        case NoiseModel::Form::Full: {
            nlohmann::json rows = nlohmann::json::array();
            for (Eigen::Index r = 0; r < noise.covariance().rows(); ++r) {
                nlohmann::json jr = nlohmann::json::array();
                for (Eigen::Index c = 0; c < noise.covariance().cols(); ++c) jr.push_back(noise.covariance()(r, c));
                rows.push_back(jr);
            }
            j = {{"form", "full"}, {"covariance", rows}};
            break;
        }
    }
}

double neg_log_likelihood(std::span<const double> y_hat, std::span<const double> y_star, const NoiseModel& noise) {
    if (y_hat.size() != y_star.size() || y_hat.size() != noise.size())
        throw DimensionError("neg_log_likelihood: lengths of y_hat, y_star and the noise model differ");
    std::vector<double> r(y_hat.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = 0.5 * y_hat[i] - y_star[i];
    const Eigen::VectorXd w = noise.solve(r);
    double phi = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) phi += y_hat[i] * w(static_cast<Eigen::Index>(i));
    return phi;
}

bool mh_decide(double phi_old, double phi_new, RandomStream& rng) {
    const double u = rng.uniform();
    return u < std::exp(std::min(0.0, phi_old - phi_new));
}

double pcn_gaussian(double xi, double rho, RandomStream& rng) {
    if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgumentError("rho must lie in (0, 1]");
    return rho * xi + std::sqrt(1.0 - rho * rho) * rng.normal();
}

double pcn_exponential(double r, double rho, RandomStream& rng) {
    if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgumentError("rho must lie in (0, 1]");
    if (!(r > 0.0)) throw InvalidArgumentError("exponential coordinate must be positive");
    if (rho == 1.0) return r;
    // The coefficient sqrt(rho) makes corr(r, r*) = rho; with rho itself it would be rho^2.
    const double rb = std::sqrt(0.5 * (1.0 - rho));
    const double a = std::sqrt(rho * r) + rb * rng.normal();
    const double b = rb * rng.normal();
    return a * a + b * b;
}

PotentialCoeffs propose_potential(const PotentialCoeffs& V, const PriorSpec& prior, double rho, RandomStream& rng) {
    prior.validate();
    if (V.v.size() != prior.gamma.size()) throw DimensionError("potential and prior have different truncation");
    PotentialCoeffs out = V;
    for (std::size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = prior.gamma[i] * pcn_gaussian(V.v[i] / prior.gamma[i], rho, rng);
    return out;
}

void to_json(nlohmann::json& j, const PriorCoordinates& c) { j = {{"xi", c.xi}, {"r", c.r}}; }

PriorCoordinates propose_coordinates(const PriorCoordinates& c, double rho, RandomStream& rng) {
    PriorCoordinates out = c;
    for (double& x : out.xi) x = pcn_gaussian(x, rho, rng);
    for (double& r : out.r) r = pcn_exponential(r, rho, rng);
    return out;
}

PriorCoordinates ForwardModel::origin() const {
    return {std::vector<double>(n_gaussian(), 0.0), std::vector<double>(n_exponential(), 1.0)};
}

namespace {

void check_coords(const ForwardModel& m, const PriorCoordinates& c) {
    if (c.xi.size() != m.n_gaussian() || c.r.size() != m.n_exponential())
        throw DimensionError("coordinates do not match the forward model");
}

PotentialCoeffs scaled(const PriorSpec& prior, std::span<const double> xi) {
    PotentialCoeffs V = PotentialCoeffs::harmonic(prior.truncation());
    for (std::size_t i = 0; i < V.v.size(); ++i) V.v[i] = prior.gamma[i] * xi[i];
    return V;
}

}  // namespace

OneLevelForward::OneLevelForward(PriorSpec prior, std::vector<Observable> train, std::vector<Observable> test,
                                 RingParams params, LangevinConfig sampler)
    : prior_(std::move(prior)), train_(std::move(train)), test_(std::move(test)), params_(params),
      sampler_(sampler.resolved(params)) {
    prior_.validate();
    sampler_.validate();
    if (train_.empty()) throw InvalidArgumentError("at least one training observable is required");
}

PotentialCoeffs OneLevelForward::potential(const PriorCoordinates& c) const {
    check_coords(*this, c);
    return scaled(prior_, c.xi);
}

ForwardResult OneLevelForward::evaluate(const PriorCoordinates& c, std::uint64_t seed) const {
    std::vector<Observable> all = train_;
    all.insert(all.end(), test_.begin(), test_.end());
    LangevinConfig cfg = sampler_;
    cfg.seed = seed;
    const auto est = forward_estimate(potential(c), all, params_, cfg);
    ForwardResult out;
    for (std::size_t k = 0; k < est.size(); ++k) {
        if (k < train_.size()) {
            out.train.push_back(est[k].mean);
        } else {
            out.test.push_back(est[k].mean);
            out.test_se.push_back(est[k].std_err);
        }
    }
    return out;
}

nlohmann::json OneLevelForward::describe(const PriorCoordinates& c) const { return potential(c); }

std::vector<std::vector<double>> OneLevelForward::surfaces(const PriorCoordinates& c, std::span<const double> xs) const {
    const auto V = potential(c);
    std::vector<double> row;
    row.reserve(xs.size());
    for (double x : xs) row.push_back(potential_eval(V, x));
    return {row};
}

TwoLevelForward::TwoLevelForward(PriorSpec prior00, PriorSpec prior11, std::vector<GaussianComponent> coupling_shape,
                                 double amplitude_scale, std::vector<TwoLevelObservable> train,
                                 std::vector<TwoLevelObservable> test, RingParams params, LangevinConfig sampler,
                                 double eta)
    : prior00_(std::move(prior00)), prior11_(std::move(prior11)), shape_(std::move(coupling_shape)),
      amplitude_scale_(amplitude_scale), train_(std::move(train)), test_(std::move(test)), params_(params),
      sampler_(sampler.resolved(params)), eta_(eta > 0.0 ? eta : default_eta(params)) {
    prior00_.validate();
    prior11_.validate();
    sampler_.validate();
    if (!(amplitude_scale_ > 0.0)) throw InvalidArgumentError("amplitude scale must be positive");
    if (train_.empty()) throw InvalidArgumentError("at least one training observable is required");
}

TwoLevelPotential TwoLevelForward::potential(const PriorCoordinates& c) const {
    check_coords(*this, c);
    const std::size_t n0 = prior00_.gamma.size();
    TwoLevelPotential V;
    V.v00 = scaled(prior00_, std::span<const double>(c.xi.data(), n0));
    V.v11 = scaled(prior11_, std::span<const double>(c.xi.data() + n0, prior11_.gamma.size()));
    V.v01 = shape_;
    for (std::size_t i = 0; i < shape_.size(); ++i) V.v01[i].amplitude = amplitude_scale_ * c.r[i];
    return V;
}

ForwardResult TwoLevelForward::evaluate(const PriorCoordinates& c, std::uint64_t seed) const {
    std::vector<TwoLevelObservable> all = train_;
    all.insert(all.end(), test_.begin(), test_.end());
    LangevinConfig cfg = sampler_;
    cfg.seed = seed;
    const auto est = pimd_sh_estimate(potential(c), all, params_, cfg, eta_);
    ForwardResult out;
    for (std::size_t k = 0; k < est.size(); ++k) {
        if (k < train_.size()) {
            out.train.push_back(est[k].mean);
        } else {
            out.test.push_back(est[k].mean);
            out.test_se.push_back(est[k].std_err);
        }
    }
    return out;
}

nlohmann::json TwoLevelForward::describe(const PriorCoordinates& c) const { return potential(c); }

std::vector<std::vector<double>> TwoLevelForward::surfaces(const PriorCoordinates& c, std::span<const double> xs) const {
    const auto V = potential(c);
    std::vector<std::vector<double>> rows(3);
    for (double x : xs) {
        rows[0].push_back(potential_eval(V.v00, x));
        rows[1].push_back(potential_eval(V.v11, x));
        rows[2].push_back(V.coupling(x));
    }
    return rows;
}

LinearForward::LinearForward(PriorSpec prior, Eigen::MatrixXd G) : prior_(std::move(prior)), G_(std::move(G)) {
    prior_.validate();
    if (G_.cols() != static_cast<Eigen::Index>(prior_.gamma.size()))
        throw DimensionError("linear forward map has the wrong number of columns");
}

ForwardResult LinearForward::evaluate(const PriorCoordinates& c, std::uint64_t) const {
    check_coords(*this, c);
    Eigen::VectorXd v(static_cast<Eigen::Index>(c.xi.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = prior_.gamma[static_cast<std::size_t>(i)] * c.xi[static_cast<std::size_t>(i)];
    const Eigen::VectorXd y = G_ * v;
    ForwardResult out;
    out.train.assign(y.data(), y.data() + y.size());
    out.test.assign(v.data(), v.data() + v.size());
    out.test_se.assign(out.test.size(), 0.0);
    return out;
}

nlohmann::json LinearForward::describe(const PriorCoordinates& c) const { return scaled(prior_, c.xi); }

std::vector<std::vector<double>> LinearForward::surfaces(const PriorCoordinates& c, std::span<const double> xs) const {
    const auto V = scaled(prior_, c.xi);
    std::vector<double> row;
    for (double x : xs) row.push_back(potential_eval(V, x));
    return {row};
}

void InversionConfig::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgumentError("rho must lie in (0, 1)");
    if (n_proposals < 1) throw InvalidArgumentError("n_proposals must be positive");
    if (n_runs < 1) throw InvalidArgumentError("n_runs must be positive");
    if (t_ac < 1) throw InvalidArgumentError("t_ac must be positive");
    if (burn_in < 0 || burn_in > n_proposals) throw InvalidArgumentError("burn_in must lie in [0, n_proposals]");
    if (snapshot_every < 1) throw InvalidArgumentError("snapshot_every must be positive");
    if (workers < 1) throw InvalidArgumentError("workers must be positive");
}

void to_json(nlohmann::json& j, const InversionConfig& cfg) {
    j = {{"rho", cfg.rho},         {"n_proposals", cfg.n_proposals}, {"n_runs", cfg.n_runs},
         {"t_ac", cfg.t_ac},       {"burn_in", cfg.burn_in},         {"snapshot_every", cfg.snapshot_every},
         {"seed", cfg.seed}};
}

double RunResult::acceptance_rate() const {
    const auto proposals = static_cast<double>(chain.empty() ? 0 : chain.size() - 1);
    return proposals > 0 ? static_cast<double>(accepted) / proposals : 0.0;
}

std::uint64_t run_seed(std::uint64_t master, int run) { return derive_seed(master, static_cast<std::uint64_t>(run) + 1); }

std::uint64_t forward_seed(std::uint64_t seed, long iteration) {
    return derive_seed(seed, 0x10000, static_cast<std::uint64_t>(iteration));
}

RunResult run_chain(const ForwardModel& model, std::span<const double> y_star, const NoiseModel& noise,
                    const InversionConfig& cfg, int run) {
    cfg.validate();
    if (y_star.size() != model.n_train()) throw DimensionError("y_star length does not match the training set");
    RunResult out;
    out.seed = run_seed(cfg.seed, run);
    RandomStream rng(out.seed);
    out.chain.reserve(static_cast<std::size_t>(cfg.n_proposals) + 1);
    try {
        PriorCoordinates current = model.origin();
        ForwardResult cached = model.evaluate(current, forward_seed(out.seed, 0));
        double phi = neg_log_likelihood(cached.train, y_star, noise);
        out.chain.push_back({0, current, cached.train, cached.test, phi, true});
        for (long k = 1; k <= cfg.n_proposals; ++k) {
            PriorCoordinates proposal = propose_coordinates(current, cfg.rho, rng);
            ForwardResult result = model.evaluate(proposal, forward_seed(out.seed, k));
            const double phi_new = neg_log_likelihood(result.train, y_star, noise);
            const bool accept = mh_decide(phi, phi_new, rng);
            if (accept) {
                current = std::move(proposal);
                cached = std::move(result);
                phi = phi_new;
                ++out.accepted;
            }
            out.chain.push_back({k, current, cached.train, cached.test, phi, accept});
        }
    } catch (const Error& e) {
        out.failure = e.what();
    }
    return out;
}

std::vector<long> thinned_iterations(long n_records, long burn_in, long t_ac) {
    std::vector<long> out;
    for (long k = burn_in; k < n_records; k += t_ac) out.push_back(k);
    return out;
}

std::vector<Prediction> summarize_predictions(std::span<const RunResult> runs, std::size_t n_test, long burn_in,
                                              long t_ac, long last_iteration) {
    std::vector<Prediction> out(n_test);
    for (std::size_t j = 0; j < n_test; ++j) {
        std::vector<double> run_means;
        std::vector<double> pooled;
        for (const auto& run : runs) {
            if (!run.failure.empty() || run.chain.empty()) continue;
            double s = 0.0;
            long n = 0;
            const long n_records = std::min(static_cast<long>(run.chain.size()),
                                            last_iteration == std::numeric_limits<long>::max() ? last_iteration
                                                                                                : last_iteration + 1);
            for (long k : thinned_iterations(n_records, burn_in, t_ac)) {
                const double v = run.chain[static_cast<std::size_t>(k)].test[j];
                s += v;
                pooled.push_back(v);
                ++n;
            }
            if (n > 0) run_means.push_back(s / static_cast<double>(n));
        }
        if (pooled.empty()) throw DegeneratePosteriorError("no completed chain samples to summarise");
        auto mean_sd = [](const std::vector<double>& xs, double& mean, double& sd) {
            mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double ss = 0.0;
            for (double x : xs) ss += (x - mean) * (x - mean);
            sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
        };
        double pm = 0.0, psd = 0.0, rm = 0.0, rsd = 0.0;
        mean_sd(pooled, pm, psd);
        mean_sd(run_means, rm, rsd);
        out[j].mean = pm;
        out[j].se_pooled = psd / std::sqrt(static_cast<double>(pooled.size()));
        out[j].se_across_runs = run_means.size() > 1 ? rsd / std::sqrt(static_cast<double>(run_means.size())) : out[j].se_pooled;
        out[j].n_samples = static_cast<long>(pooled.size());
    }
    return out;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& job) {
    const auto n_threads = static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(count))));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex lock;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard<std::mutex> g(lock);
                    if (!first) first = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first) std::rethrow_exception(first);
}

InversionResult run_inversion(const ForwardModel& model, std::span<const double> y_star, const NoiseModel& noise,
                              const InversionConfig& cfg) {
    cfg.validate();
    InversionResult out;
    out.runs.resize(static_cast<std::size_t>(cfg.n_runs));
    parallel_for(out.runs.size(), cfg.workers,
                 [&](std::size_t r) { out.runs[r] = run_chain(model, y_star, noise, cfg, static_cast<int>(r)); });
    bool any = false;
    for (const auto& r : out.runs) any = any || r.failure.empty();
    if (any) out.predictions = summarize_predictions(out.runs, model.n_test(), cfg.burn_in, cfg.t_ac);
    return out;
}

Autocorrelation autocorrelation(std::span<const double> series, long max_lag) {
    if (max_lag < 0 || static_cast<long>(series.size()) <= max_lag)
        throw InvalidArgumentError("series must be longer than max_lag");
    const std::size_t n = series.size();
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double x : series) c0 += (x - mean) * (x - mean);
    Autocorrelation out;
    out.acf.assign(static_cast<std::size_t>(max_lag) + 1, 1.0);
    if (!(c0 > 0.0)) {
        out.degenerate = true;
        return out;
    }
    for (long lag = 1; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (std::size_t t = 0; t + static_cast<std::size_t>(lag) < n; ++t)
            c += (series[t] - mean) * (series[t + static_cast<std::size_t>(lag)] - mean);
        out.acf[static_cast<std::size_t>(lag)] = c / c0;
    }
    return out;
}

}  // namespace qti

#include "qti/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "qti/errors.hpp"

namespace qti {

DiscreteDist::DiscreteDist(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw InvalidDistributionError("distribution has empty support");
    double total = 0.0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0) throw InvalidDistributionError("weights must be finite and non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidDistributionError("weights do not sum to 1");
}

DiscreteDist DiscreteDist::normalized(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw InvalidDistributionError("weights must be finite and non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw InvalidDistributionError("weights sum to zero");
    for (double& w : weights) w /= total;
    // Division can leave the sum a few ulps away from 1; fold the residue into the largest entry.
    double sum = 0.0;
    for (double w : weights) sum += w;
    auto big = std::max_element(weights.begin(), weights.end());
    *big = std::max(0.0, *big + (1.0 - sum));
    return DiscreteDist(std::move(weights));
}

namespace {

void check_pair(const DiscreteDist& p, const DiscreteDist& q) {
    if (p.size() != q.size()) throw DimensionError("distributions have different support sizes");
}

}  // namespace

double tv_distance(const DiscreteDist& p, const DiscreteDist& q) {
    check_pair(p, q);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return std::min(1.0, 0.5 * s);
}

double hellinger_distance(const DiscreteDist& p, const DiscreteDist& q) {
    check_pair(p, q);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
        s += d * d;
    }
    return std::min(1.0, std::sqrt(0.5 * s));
}

long Grid2D::locate(double x, double y) const {
    if (!(x >= lo[0] && x < hi[0] && y >= lo[1] && y < hi[1])) return -1;
    const int i = std::min(cells[0] - 1, static_cast<int>((x - lo[0]) / width(0)));
    const int j = std::min(cells[1] - 1, static_cast<int>((y - lo[1]) / width(1)));
    return static_cast<long>(i) * cells[1] + j;
}

void Grid2D::validate() const {
    for (int a = 0; a < 2; ++a) {
        if (!(hi[a] > lo[a]) || !std::isfinite(lo[a]) || !std::isfinite(hi[a]))
            throw InvalidGridError("grid bounds must be finite with hi > lo");
        if (cells[a] < 1) throw InvalidGridError("grid needs at least one cell per axis");
    }
}

DiscreteDist brute_force_posterior(const std::function<std::vector<double>(double, double)>& forward,
                                   std::span<const double> y_star, const NoiseModel& noise,
                                   const std::array<double, 2>& gamma, const Grid2D& grid, int subdivisions) {
    grid.validate();
    if (subdivisions < 1) throw InvalidArgumentError("subdivisions must be positive");
    for (int a = 0; a < 2; ++a) {
        if (!(gamma[a] > 0.0)) throw InvalidArgumentError("prior standard deviations must be positive");
        if (grid.lo[a] > -6.0 * gamma[a] || grid.hi[a] < 6.0 * gamma[a])
            throw InvalidGridError("grid must cover +-6 prior standard deviations");
    }
    std::vector<double> logw(grid.size(), -std::numeric_limits<double>::infinity());
    const double hx = grid.width(0) / subdivisions;
    const double hy = grid.width(1) / subdivisions;
    for (int i = 0; i < grid.cells[0]; ++i) {
        for (int j = 0; j < grid.cells[1]; ++j) {
            // log-sum-exp over the sub-points of the cell
            std::vector<double> terms;
            terms.reserve(static_cast<std::size_t>(subdivisions * subdivisions));
            for (int a = 0; a < subdivisions; ++a) {
                const double v0 = grid.lo[0] + i * grid.width(0) + (a + 0.5) * hx;
                for (int b = 0; b < subdivisions; ++b) {
                    const double v1 = grid.lo[1] + j * grid.width(1) + (b + 0.5) * hy;
                    const double prior = -0.5 * (v0 * v0 / (gamma[0] * gamma[0]) + v1 * v1 / (gamma[1] * gamma[1]));
                    const double phi = neg_log_likelihood(forward(v0, v1), y_star, noise);
                    if (std::isfinite(prior - phi)) terms.push_back(prior - phi);
                }
            }
            if (terms.empty()) continue;
            const double m = *std::max_element(terms.begin(), terms.end());
            double s = 0.0;
            for (double t : terms) s += std::exp(t - m);
            logw[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.cells[1]) + static_cast<std::size_t>(j)] =
                m + std::log(s);
        }
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    if (!std::isfinite(top)) throw DegeneratePosteriorError("posterior weights vanish on the whole grid");
    std::vector<double> w(logw.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(logw[k] - top);
    return DiscreteDist::normalized(std::move(w));
}

Histogram2D histogram2d(std::span<const double> xs, std::span<const double> ys, const Grid2D& grid) {
    grid.validate();
    if (xs.size() != ys.size()) throw DimensionError("histogram coordinates have different lengths");
    std::vector<double> counts(grid.size(), 0.0);
    long outside = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const long c = grid.locate(xs[k], ys[k]);
        if (c < 0) ++outside;
        else counts[static_cast<std::size_t>(c)] += 1.0;
    }
    return {DiscreteDist::normalized(std::move(counts)), outside};
}

LogLogFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw DimensionError("fit needs at least two (x, y) pairs");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw InvalidArgumentError("log-log fit needs positive data");
        mx += std::log(xs[i]);
        my += std::log(ys[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = std::log(xs[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(ys[i]) - my);
    }
    LogLogFit fit;
    if (sxx <= 1e-24 * n) {
        fit.degenerate = true;
        fit.slope = fit.intercept = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

void StabilityConfig::validate() const {
    if (gamma_scales.size() < 3) throw InvalidArgumentError("stability sweep needs at least 3 noise scales");
    for (double s : gamma_scales)
        if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgumentError("noise scales must be positive");
    if (draws < 1) throw InvalidArgumentError("draws must be positive");
    if (workers < 1) throw InvalidArgumentError("workers must be positive");
    inversion.validate();
}

StabilityReport stability_sweep(const ForwardModel& model, std::span<const double> y_star,
                                std::span<const double> truth_test, const StabilityConfig& cfg) {
    cfg.validate();
    if (y_star.size() != model.n_train()) throw DimensionError("y_star length does not match the training set");
    if (truth_test.size() != model.n_test()) throw DimensionError("truth length does not match the test set");
    const std::size_t n_scales = cfg.gamma_scales.size();
    const auto n_draws = static_cast<std::size_t>(cfg.draws);
    StabilityReport report;
    report.gamma_scales = cfg.gamma_scales;
    report.draws.resize(n_scales * n_draws);
    parallel_for(report.draws.size(), cfg.workers, [&](std::size_t job) {
        StabilityDraw& d = report.draws[job];
        d.scale_index = job / n_draws;
        d.draw = static_cast<int>(job % n_draws);
        const std::uint64_t seed = derive_seed(cfg.seed, d.scale_index, static_cast<std::uint64_t>(d.draw));
        const auto noise = NoiseModel::scalar(cfg.gamma_scales[d.scale_index], y_star.size());
        RandomStream rng(seed);
        const auto eta = noise.sample(rng);
        d.y_noisy.resize(y_star.size());
        for (std::size_t i = 0; i < y_star.size(); ++i) d.y_noisy[i] = y_star[i] + eta[i];
        InversionConfig inv = cfg.inversion;
        inv.seed = derive_seed(seed, 1);
        inv.workers = 1;
        const auto result = run_inversion(model, d.y_noisy, noise, inv);
        for (const auto& r : result.runs) {
            d.acceptance.push_back(r.acceptance_rate());
            if (!r.failure.empty() && d.failure.empty()) d.failure = r.failure;
        }
        if (result.predictions.empty()) return;
        for (std::size_t j = 0; j < truth_test.size(); ++j) {
            d.predictions.push_back(result.predictions[j].mean);
            d.abs_errors.push_back(std::abs(result.predictions[j].mean - truth_test[j]));
        }
    });
    for (const auto& d : report.draws)
        if (d.abs_errors.empty()) throw DivergenceError("stability draw failed: " + d.failure);
    const std::size_t n_obs = truth_test.size();
    report.mean_abs_errors.assign(n_scales, std::vector<double>(n_obs, 0.0));
    for (const auto& d : report.draws)
        for (std::size_t j = 0; j < n_obs; ++j)
            report.mean_abs_errors[d.scale_index][j] += d.abs_errors[j] / static_cast<double>(n_draws);
    for (std::size_t j = 0; j < n_obs; ++j) {
        std::vector<double> ys(n_scales);
        for (std::size_t s = 0; s < n_scales; ++s) ys[s] = report.mean_abs_errors[s][j];
        report.fits.push_back(fit_loglog_slope(cfg.gamma_scales, ys));
    }
    return report;
}

void to_json(nlohmann::json& j, const LogLogFit& fit) {
    j = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"degenerate", fit.degenerate}};
}

void to_json(nlohmann::json& j, const StabilityReport& report) {
    j = {{"gamma_scales", report.gamma_scales}, {"mean_abs_errors", report.mean_abs_errors}, {"fits", report.fits}};
}

std::string stability_csv(const StabilityReport& report) {
    std::string out = "scale,observable_id,mean_abs_error\n";
    char buf[128];
    for (std::size_t s = 0; s < report.gamma_scales.size(); ++s)
        for (std::size_t j = 0; j < report.mean_abs_errors[s].size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g\n", report.gamma_scales[s], j, report.mean_abs_errors[s][j]);
            out += buf;
        }
    return out;
}

}  // namespace qti

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qti/basis.hpp"
#include "qti/inversion.hpp"

namespace qti {

// Probability vector on a finite support.
class DiscreteDist {
public:
    // Throws InvalidDistributionError unless the weights are finite,
    // non-negative and sum to 1 within 1e-12.
    explicit DiscreteDist(std::vector<double> weights);

    // Divides by the total; throws InvalidDistributionError when it is not positive.
    static DiscreteDist normalized(std::vector<double> weights);

    std::size_t size() const noexcept { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }
    const std::vector<double>& weights() const noexcept { return weights_; }

private:
    std::vector<double> weights_;
};

// 1/2 sum |p_i - q_i|
double tv_distance(const DiscreteDist& p, const DiscreteDist& q);

// sqrt(1/2 sum (sqrt p_i - sqrt q_i)^2)
double hellinger_distance(const DiscreteDist& p, const DiscreteDist& q);

// Tensor grid of nx * ny equal cells on [lo[0], hi[0]] x [lo[1], hi[1]].
// Cell (i, j) has flat index i * ny + j.
struct Grid2D {
    std::array<double, 2> lo{};
    std::array<double, 2> hi{};
    std::array<int, 2> cells{};

    double width(int axis) const { return (hi[axis] - lo[axis]) / cells[axis]; }
    double center(int axis, int i) const { return lo[axis] + (i + 0.5) * width(axis); }
    std::size_t size() const { return static_cast<std::size_t>(cells[0]) * static_cast<std::size_t>(cells[1]); }

    // Flat cell index of (x, y), or -1 outside the grid.
    long locate(double x, double y) const;

    void validate() const;
};

// Cell masses of prior(v0, v1) * exp(-Phi(G(v0, v1); y_star)) under the
// Gaussian prior v_i ~ N(0, gamma_i^2). Each cell is integrated with a
// subdivisions x subdivisions midpoint rule. The grid must cover +-6 prior
// standard deviations per mode.
DiscreteDist brute_force_posterior(const std::function<std::vector<double>(double, double)>& forward,
                                   std::span<const double> y_star, const NoiseModel& noise,
                                   const std::array<double, 2>& gamma, const Grid2D& grid, int subdivisions = 1);

struct Histogram2D {
    DiscreteDist dist;
    long outside = 0;
};

// Normalised counts of the points (xs[k], ys[k]) that fall in the grid.
Histogram2D histogram2d(std::span<const double> xs, std::span<const double> ys, const Grid2D& grid);

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    bool degenerate = false;
};

// Least squares of log y on log x. All x equal gives degenerate = true and NaN
// coefficients.
LogLogFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys);

struct StabilityConfig {
    std::vector<double> gamma_scales{0.01, 0.03, 0.1, 0.3};
    int draws = 4;
    InversionConfig inversion;
    int workers = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct StabilityDraw {
    std::size_t scale_index = 0;
    int draw = 0;
    std::vector<double> y_noisy;
    std::vector<double> predictions;
    std::vector<double> abs_errors;
    std::vector<double> acceptance;
    std::string failure;
};

struct StabilityReport {
    std::vector<double> gamma_scales;
    std::vector<std::vector<double>> mean_abs_errors;  // [scale][observable]
    std::vector<LogLogFit> fits;                      // per observable
    std::vector<StabilityDraw> draws;
};

// For each scale and draw: y = y_star + N(0, scale I), an inversion with
// Gamma = scale I, and |prediction - truth| per test observable. Errors are
// averaged over draws and fitted against the scale on log-log axes.
StabilityReport stability_sweep(const ForwardModel& model, std::span<const double> y_star,
                                std::span<const double> truth_test, const StabilityConfig& cfg);

void to_json(nlohmann::json& j, const LogLogFit& fit);
void to_json(nlohmann::json& j, const StabilityReport& report);

// Rows "scale,observable_id,mean_abs_error" with a header.
std::string stability_csv(const StabilityReport& report);

}  // namespace qti

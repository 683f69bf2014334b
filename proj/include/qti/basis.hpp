#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qti/grid.hpp"
#include "qti/random.hpp"

namespace qti {

// pi^(-1/4): value of phi_0(0) and the uniform bound on every Hermite function.
inline const double kHermiteBound = std::pow(std::numbers::pi, -0.25);

// Normalized Hermite functions phi_n(x) = (2^n n! sqrt(pi))^(-1/2) H_n(x) e^(-x^2/2),
// evaluated with the three-term recurrence
//   phi_{n+1} = x sqrt(2/(n+1)) phi_n - sqrt(n/(n+1)) phi_{n-1}.
class HermiteEvaluator {
public:
    explicit HermiteEvaluator(int max_order);

    int max_order() const noexcept { return max_order_; }

    // phi_n(x). Throws OrderOverflowError when n is outside [0, max_order].
    double operator()(int n, double x) const;

    // Writes phi_0(x) .. phi_{out.size()-1}(x). out.size() may be at most max_order + 1.
    void fill(double x, std::span<double> out) const;

    double up(int n) const noexcept { return up_[n]; }
    double down(int n) const noexcept { return down_[n]; }

private:
    int max_order_;
    std::vector<double> up_;    // sqrt(2/(n+1))
    std::vector<double> down_;  // sqrt(n/(n+1))
};

// Shared evaluator for orders up to 1024, used by the hot paths.
const HermiteEvaluator& hermite_table();

double hermite_eval(int n, double x);

// V(x) = x^2/2 + sum_{i=0..L} v_i phi_i(x). The harmonic part is implicit.
struct PotentialCoeffs {
    std::vector<double> v;

    int truncation() const noexcept { return static_cast<int>(v.size()) - 1; }

    static PotentialCoeffs harmonic(int truncation) {
        return {std::vector<double>(static_cast<std::size_t>(truncation) + 1, 0.0)};
    }

    void validate() const;
};

double potential_eval(const PotentialCoeffs& V, double x);

// dV/dx using phi_n' = x phi_n - sqrt(2(n+1)) phi_{n+1}.
double potential_derivative(const PotentialCoeffs& V, double x);

// V(x) and V'(x) from one recurrence pass.
void potential_evaluate(const PotentialCoeffs& V, double x, double& value, double& slope);

// x^2/2 + amplitude * sin(wavenumber * x) * exp(-x^2/2). With the defaults this
// is the single-well-plus-bump landscape used as ground truth in the showcase.
struct SinusoidalBump {
    double amplitude = 5.0;
    double wavenumber = 5.0 / std::numbers::pi;
};

// A 1-level potential: either a truncated Hermite expansion or a closed form.
class Potential {
public:
    Potential(PotentialCoeffs coeffs) : repr_(std::move(coeffs)) {}  // NOLINT(implicit)
    Potential(SinusoidalBump bump) : repr_(bump) {}                 // NOLINT(implicit)

    double value(double x) const;
    double derivative(double x) const;

    // Value and slope from one recurrence pass.
    void evaluate(double x, double& value, double& slope) const;

    const PotentialCoeffs* coeffs() const noexcept { return std::get_if<PotentialCoeffs>(&repr_); }

private:
    std::variant<PotentialCoeffs, SinusoidalBump> repr_;
};

// Per-mode prior standard deviations gamma_i: v_i = gamma_i * xi_i, xi_i ~ N(0,1).
struct PriorSpec {
    std::vector<double> gamma;

    int truncation() const noexcept { return static_cast<int>(gamma.size()) - 1; }

    // gamma_j = scale * (j+1)^(-exponent), j = 0..L.
    static PriorSpec power_law(int truncation, double scale = 4.0, double exponent = 1.2);

    void validate() const;
};

PotentialCoeffs sample_prior(const PriorSpec& spec, RandomStream& rng);

// ||V1 - V2||_{L2} + ||V1 - V2||_{Linf}, both on the grid (trapezoid rule for L2).
// The default grid is [-12, 12] with 4801 points.
double w1_distance(const Potential& V1, const Potential& V2, const GridSpec& grid = {-12.0, 12.0, 4801});

void to_json(nlohmann::json& j, const PotentialCoeffs& V);
void from_json(const nlohmann::json& j, PotentialCoeffs& V);

}  // namespace qti

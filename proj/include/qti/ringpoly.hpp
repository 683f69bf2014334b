#pragma once

#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qti/basis.hpp"

namespace qti {

// Bead count N, particle mass M and inverse temperature beta. beta_n() = beta/N.
class RingParams {
public:
    RingParams(int beads, double mass, double beta);

    int beads() const noexcept { return beads_; }
    double mass() const noexcept { return mass_; }
    double beta() const noexcept { return beta_; }
    double beta_n() const noexcept { return beta_n_; }

    // M / beta_N^2, the stiffness of each spring between neighbouring beads.
    double spring() const noexcept { return mass_ / (beta_n_ * beta_n_); }

private:
    int beads_;
    double mass_;
    double beta_;
    double beta_n_;
};

// Bead positions and auxiliary momenta. Bead i's neighbour is (i+1) mod N.
struct RingState {
    std::vector<double> q;
    std::vector<double> p;

    void validate(int beads) const;
};

// e^(-a (x-c)^2); bounded by 1.
struct GaussianBump {
    double center = 0.0;
    double exponent = 1.0;
};

// phi_n(s x); bounded by pi^(-1/4).
struct ScaledHermite {
    int order = 0;
    double scale = 1.0;
};

// (1 - e^(-a x^2)) / a: behaves like x^2 near the origin, bounded by 1/a.
struct QuadraticSurrogate {
    double exponent = 0.05;
};

// Bounded position observable with a declared sup-norm.
class Observable {
public:
    using Shape = std::variant<GaussianBump, ScaledHermite, QuadraticSurrogate>;

    static Observable gaussian(double center, double exponent);
    static Observable hermite(int order, double scale);
    static Observable quadratic_surrogate(double exponent);

    Observable(Shape shape, double bound);

    double operator()(double x) const;
    double bound() const noexcept { return bound_; }
    const Shape& shape() const noexcept { return shape_; }

private:
    Shape shape_;
    double bound_;
};

void to_json(nlohmann::json& j, const Observable& A);
Observable observable_from_json(const nlohmann::json& j);

// S_N(q) = beta_N * sum_i [ M (q_i - q_{i+1})^2 / (2 beta_N^2) + V(q_i) ].
double action(std::span<const double> q, const Potential& V, const RingParams& params);

// H_N(q,p) = |p|^2/(2M) + sum_i [ M (q_i - q_{i+1})^2 / (2 beta_N^2) + V(q_i) ].
double hamiltonian(const RingState& state, const Potential& V, const RingParams& params);

// -grad_q H_N.
std::vector<double> force(std::span<const double> q, const Potential& V, const RingParams& params);

// Allocation-free variant for the integrators; out.size() must equal q.size().
void force_into(std::span<const double> q, const Potential& V, const RingParams& params, std::span<double> out);

// (1/N) sum_i A(q_i).
double ring_average(const Observable& A, std::span<const double> q);

}  // namespace qti

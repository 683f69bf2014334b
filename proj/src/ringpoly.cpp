#include "qti/ringpoly.hpp"

#include <cmath>
#include <string>
#include <type_traits>

#include "qti/errors.hpp"

namespace qti {

RingParams::RingParams(int beads, double mass, double beta)
    : beads_(beads), mass_(mass), beta_(beta), beta_n_(beta / beads) {
    if (beads < 2) throw InvalidArgumentError("ring polymer needs at least 2 beads");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgumentError("mass must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgumentError("beta must be positive");
}

void RingState::validate(int beads) const {
    if (q.size() != p.size()) throw DimensionError("positions and momenta differ in length");
    if (static_cast<int>(q.size()) != beads)
        throw DimensionError("state has " + std::to_string(q.size()) + " beads, expected " + std::to_string(beads));
}

Observable::Observable(Shape shape, double bound) : shape_(shape), bound_(bound) {
    if (!(bound > 0.0) || !std::isfinite(bound)) throw InvalidArgumentError("observable bound must be positive");
}

Observable Observable::gaussian(double center, double exponent) {
    if (exponent < 0.0) throw InvalidArgumentError("Gaussian exponent must be non-negative");
    return Observable(GaussianBump{center, exponent}, 1.0);
}

Observable Observable::hermite(int order, double scale) {
    if (order < 0 || order > hermite_table().max_order()) throw OrderOverflowError("observable Hermite order out of range");
    return Observable(ScaledHermite{order, scale}, kHermiteBound);
}

Observable Observable::quadratic_surrogate(double exponent) {
    if (!(exponent > 0.0)) throw InvalidArgumentError("surrogate exponent must be positive");
    return Observable(QuadraticSurrogate{exponent}, 1.0 / exponent);
}

double Observable::operator()(double x) const {
    return std::visit(
        [x](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianBump>) {
                const double d = x - s.center;
                return std::exp(-s.exponent * d * d);
            } else if constexpr (std::is_same_v<T, ScaledHermite>) {
                return hermite_table()(s.order, s.scale * x);
            } else {
                return -std::expm1(-s.exponent * x * x) / s.exponent;
            }
        },
        shape_);
}

void to_json(nlohmann::json& j, const Observable& A) {
    std::visit(
        [&j](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianBump>)
                j = {{"kind", "gaussian_bump"}, {"parameters", {{"center", s.center}, {"exponent", s.exponent}}}};
            else if constexpr (std::is_same_v<T, ScaledHermite>)
                j = {{"kind", "scaled_hermite"}, {"parameters", {{"order", s.order}, {"scale", s.scale}}}};
            else
                j = {{"kind", "quadratic_surrogate"}, {"parameters", {{"exponent", s.exponent}}}};
        },
        A.shape());
    j["bound"] = A.bound();
}

Observable observable_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    const auto& par = j.at("parameters");
    Observable A = [&] {
        if (kind == "gaussian_bump") return Observable::gaussian(par.at("center"), par.at("exponent"));
        if (kind == "scaled_hermite") return Observable::hermite(par.at("order"), par.at("scale"));
        if (kind == "quadratic_surrogate") return Observable::quadratic_surrogate(par.at("exponent"));
        throw InvalidArgumentError("unknown observable kind '" + kind + "'");
    }();
    if (j.contains("bound")) A = Observable(A.shape(), j.at("bound").get<double>());
    return A;
}

namespace {

void check_beads(std::span<const double> q, const RingParams& params) {
    if (static_cast<int>(q.size()) != params.beads())
        throw DimensionError("configuration has " + std::to_string(q.size()) + " beads, expected " +
                             std::to_string(params.beads()));
}

// sum_i [ M (q_i - q_{i+1})^2 / (2 beta_N^2) + V(q_i) ]
double ring_potential(std::span<const double> q, const Potential& V, const RingParams& params) {
    const std::size_t n = q.size();
    const double half_k = 0.5 * params.spring();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = q[i] - q[(i + 1) % n];
        sum += half_k * d * d + V.value(q[i]);
    }
    return sum;
}

}  // namespace

double action(std::span<const double> q, const Potential& V, const RingParams& params) {
    check_beads(q, params);
    return params.beta_n() * ring_potential(q, V, params);
}

double hamiltonian(const RingState& state, const Potential& V, const RingParams& params) {
    state.validate(params.beads());
    double kinetic = 0.0;
    for (double p : state.p) kinetic += p * p;
    return kinetic / (2.0 * params.mass()) + ring_potential(state.q, V, params);
}

void force_into(std::span<const double> q, const Potential& V, const RingParams& params, std::span<double> out) {
    check_beads(q, params);
    if (out.size() != q.size()) throw DimensionError("force buffer has wrong length");
    const std::size_t n = q.size();
    const double k = params.spring();
    for (std::size_t i = 0; i < n; ++i) {
        const double prev = q[(i + n - 1) % n];
        const double next = q[(i + 1) % n];
        double value = 0.0;
        double slope = 0.0;
        V.evaluate(q[i], value, slope);
        out[i] = -(k * (2.0 * q[i] - prev - next) + slope);
    }
}

std::vector<double> force(std::span<const double> q, const Potential& V, const RingParams& params) {
    std::vector<double> out(q.size());
    force_into(q, V, params, out);
    return out;
}

double ring_average(const Observable& A, std::span<const double> q) {
    if (q.empty()) return 0.0;
    double sum = 0.0;
    for (double x : q) sum += A(x);
    return sum / static_cast<double>(q.size());
}

}  // namespace qti

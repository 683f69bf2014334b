#include "qti/basis.hpp"

#include <algorithm>
#include <string>

#include "qti/errors.hpp"

namespace qti {

HermiteEvaluator::HermiteEvaluator(int max_order) : max_order_(max_order) {
    if (max_order < 0) throw InvalidArgumentError("Hermite max_order must be non-negative");
    up_.resize(static_cast<std::size_t>(max_order) + 1);
    down_.resize(static_cast<std::size_t>(max_order) + 1);
    for (int n = 0; n <= max_order; ++n) {
        up_[n] = std::sqrt(2.0 / (n + 1.0));
        down_[n] = std::sqrt(n / (n + 1.0));
    }
}

double HermiteEvaluator::operator()(int n, double x) const {
    if (n < 0 || n > max_order_)
        throw OrderOverflowError("Hermite order " + std::to_string(n) + " outside [0, " + std::to_string(max_order_) + "]");
    double prev = 0.0;
    double cur = kHermiteBound * std::exp(-0.5 * x * x);
    for (int k = 0; k < n; ++k) {
        const double next = x * up_[k] * cur - down_[k] * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

void HermiteEvaluator::fill(double x, std::span<double> out) const {
    if (out.empty()) return;
    if (out.size() > static_cast<std::size_t>(max_order_) + 1)
        throw OrderOverflowError("requested " + std::to_string(out.size()) + " Hermite functions, max order is " +
                                 std::to_string(max_order_));
    out[0] = kHermiteBound * std::exp(-0.5 * x * x);
    if (out.size() == 1) return;
    out[1] = x * up_[0] * out[0];
    for (std::size_t k = 1; k + 1 < out.size(); ++k) out[k + 1] = x * up_[k] * out[k] - down_[k] * out[k - 1];
}

const HermiteEvaluator& hermite_table() {
    static const HermiteEvaluator table(1024);
    return table;
}

double hermite_eval(int n, double x) { return hermite_table()(n, x); }

void PotentialCoeffs::validate() const {
    if (v.empty()) throw InvalidArgumentError("potential needs at least one coefficient");
    for (double c : v)
        if (!std::isfinite(c)) throw InvalidArgumentError("potential coefficient is not finite");
}

namespace {

// Sum_i v_i phi_i(x) and its derivative in one pass over the recurrence.
void hermite_series(const std::vector<double>& v, double x, double& value, double& slope) {
    const auto& table = hermite_table();
    const std::size_t n = v.size();
    if (n + 1 > static_cast<std::size_t>(table.max_order()) + 1)
        throw OrderOverflowError("potential truncation exceeds supported Hermite order");
    double prev = 0.0;
    double cur = kHermiteBound * std::exp(-0.5 * x * x);
    double sum = 0.0;
    double dsum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const int i = static_cast<int>(k);
        const double next = x * table.up(i) * cur - table.down(i) * prev;
        sum += v[k] * cur;
        // sqrt(2(k+1)) = 2 / up(k)
        dsum += v[k] * (x * cur - 2.0 / table.up(i) * next);
        prev = cur;
        cur = next;
    }
    value = sum;
    slope = dsum;
}

}  // namespace

double potential_eval(const PotentialCoeffs& V, double x) {
    double value = 0.0;
    double slope = 0.0;
    hermite_series(V.v, x, value, slope);
    return 0.5 * x * x + value;
}

double potential_derivative(const PotentialCoeffs& V, double x) {
    double value = 0.0;
    double slope = 0.0;
    hermite_series(V.v, x, value, slope);
    return x + slope;
}

void potential_evaluate(const PotentialCoeffs& V, double x, double& value, double& slope) {
    hermite_series(V.v, x, value, slope);
    value += 0.5 * x * x;
    slope += x;
}

void Potential::evaluate(double x, double& value, double& slope) const {
    if (const auto* c = std::get_if<PotentialCoeffs>(&repr_)) {
        hermite_series(c->v, x, value, slope);
        value += 0.5 * x * x;
        slope += x;
        return;
    }
    const auto& b = std::get<SinusoidalBump>(repr_);
    const double g = std::exp(-0.5 * x * x);
    const double s = std::sin(b.wavenumber * x);
    const double c = std::cos(b.wavenumber * x);
    value = 0.5 * x * x + b.amplitude * s * g;
    slope = x + b.amplitude * g * (b.wavenumber * c - x * s);
}

double Potential::value(double x) const {
    double value = 0.0;
    double slope = 0.0;
    evaluate(x, value, slope);
    return value;
}

double Potential::derivative(double x) const {
    double value = 0.0;
    double slope = 0.0;
    evaluate(x, value, slope);
    return slope;
}

PriorSpec PriorSpec::power_law(int truncation, double scale, double exponent) {
    if (truncation < 0) throw InvalidArgumentError("truncation level must be non-negative");
    PriorSpec spec;
    spec.gamma.resize(static_cast<std::size_t>(truncation) + 1);
    for (int j = 0; j <= truncation; ++j) spec.gamma[j] = scale * std::pow(j + 1.0, -exponent);
    spec.validate();
    return spec;
}

void PriorSpec::validate() const {
    if (gamma.empty()) throw InvalidArgumentError("prior needs at least one mode");
    for (double g : gamma)
        if (!(g > 0.0) || !std::isfinite(g)) throw InvalidArgumentError("prior standard deviations must be positive");
}

PotentialCoeffs sample_prior(const PriorSpec& spec, RandomStream& rng) {
    spec.validate();
    PotentialCoeffs V;
    V.v.reserve(spec.gamma.size());
    for (double g : spec.gamma) V.v.push_back(g * rng.normal());
    return V;
}

double w1_distance(const Potential& V1, const Potential& V2, const GridSpec& grid) {
    grid.validate();
    const double h = grid.spacing();
    double l2 = 0.0;
    double linf = 0.0;
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        const double x = grid.point(i);
        const double d = V1.value(x) - V2.value(x);
        const double w = (i == 0 || i + 1 == grid.n_points) ? 0.5 : 1.0;
        l2 += w * d * d;
        linf = std::max(linf, std::abs(d));
    }
    return std::sqrt(l2 * h) + linf;
}

void to_json(nlohmann::json& j, const PotentialCoeffs& V) { j = {{"L", V.truncation()}, {"v", V.v}}; }

void from_json(const nlohmann::json& j, PotentialCoeffs& V) {
    V.v = j.at("v").get<std::vector<double>>();
    if (j.contains("L") && j.at("L").get<int>() != V.truncation())
        throw InvalidArgumentError("potential L does not match coefficient count");
    V.validate();
}

}  // namespace qti

#include "qti/twolevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qti/errors.hpp"
#include "qti/spectral.hpp"

namespace qti {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log cosh(d) for d >= 0.
double log_cosh(double d) { return d + std::log1p(std::exp(-2.0 * d)) - std::numbers::ln2; }

}  // namespace

void TwoLevelPotential::validate() const {
    v00.validate();
    v11.validate();
    for (const auto& c : v01) {
        if (!(c.amplitude > 0.0) || !std::isfinite(c.amplitude))
            throw InvalidArgumentError("coupling amplitudes must be positive");
        if (!(c.sigma > 0.0) || !std::isfinite(c.center)) throw InvalidArgumentError("coupling needs sigma > 0");
    }
}

double TwoLevelPotential::coupling(double x) const {
    double s = 0.0;
    for (const auto& c : v01) {
        const double u = (x - c.center) / c.sigma;
        s += c.amplitude * std::exp(-0.5 * u * u);
    }
    return s;
}

void TwoLevelPotential::log_coupling(double x, double& log_value, double& log_slope) const {
    double m = -kInf;
    for (const auto& c : v01) {
        if (!(c.amplitude > 0.0)) continue;
        const double u = (x - c.center) / c.sigma;
        m = std::max(m, std::log(c.amplitude) - 0.5 * u * u);
    }
    if (m == -kInf) {
        log_value = -kInf;
        log_slope = 0.0;
        return;
    }
    double z = 0.0;
    double dz = 0.0;
    for (const auto& c : v01) {
        if (!(c.amplitude > 0.0)) continue;
        const double u = (x - c.center) / c.sigma;
        const double w = std::exp(std::log(c.amplitude) - 0.5 * u * u - m);
        z += w;
        dz += w * (-(x - c.center) / (c.sigma * c.sigma));
    }
    log_value = m + std::log(z);
    log_slope = dz / z;
}

void to_json(nlohmann::json& j, const TwoLevelPotential& V) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : V.v01) comps.push_back({{"A", c.amplitude}, {"c", c.center}, {"sigma", c.sigma}});
    j = {{"v00", V.v00}, {"v11", V.v11}, {"v01", comps}};
}

void from_json(const nlohmann::json& j, TwoLevelPotential& V) {
    V.v00 = j.at("v00").get<PotentialCoeffs>();
    V.v11 = j.at("v11").get<PotentialCoeffs>();
    V.v01.clear();
    for (const auto& c : j.at("v01"))
        V.v01.push_back({c.at("A").get<double>(), c.at("c").get<double>(), c.at("sigma").get<double>()});
}

void TwoLevelState::validate(int beads) const {
    const auto n = static_cast<std::size_t>(beads);
    if (q.size() != n || p.size() != n || l.size() != n)
        throw DimensionError("2-level state must have " + std::to_string(beads) + " positions, momenta and labels");
    for (auto v : l)
        if (v > 1) throw InvalidArgumentError("level index must be 0 or 1");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(q[i]) || !std::isfinite(p[i])) throw InvalidArgumentError("state is not finite");
}

void to_json(nlohmann::json& j, const TwoLevelObservable& A) {
    j = {{"placement", A.placement == Placement::Diagonal ? "diagonal" : "off_diagonal"}, {"base", A.base}};
}

TwoLevelObservable two_level_observable_from_json(const nlohmann::json& j) {
    const auto placement = j.at("placement").get<std::string>();
    if (placement != "diagonal" && placement != "off_diagonal")
        throw InvalidArgumentError("unknown placement '" + placement + "'");
    return {placement == "diagonal" ? Placement::Diagonal : Placement::OffDiagonal,
            observable_from_json(j.at("base"))};
}

double BeadTerms::branch(int l, int l_next, double beta_n) const {
    if (l == l_next) return v[l] - log_cosh / beta_n;
    if (log_sinh == -kInf) return kInf;
    return 0.5 * (v[0] + v[1]) - log_sinh / beta_n;
}

double BeadTerms::branch_slope(int l, int l_next) const {
    if (l == l_next) return dv[l] - tanh_slope;
    return 0.5 * (dv[0] + dv[1]) - coth_slope;
}

BeadTerms bead_terms(const TwoLevelPotential& V, double x, double beta_n) {
    BeadTerms t;
    potential_evaluate(V.v00, x, t.v[0], t.dv[0]);
    potential_evaluate(V.v11, x, t.v[1], t.dv[1]);
    double log_v01 = 0.0;
    double dlog = 0.0;
    V.log_coupling(x, log_v01, dlog);
    if (log_v01 == -kInf) {
        t.log_cosh = 0.0;
        t.log_sinh = -kInf;
        return t;
    }
    // d = beta_N V01; slopes use V01' = V01 * dlog.
    const double log_d = std::log(beta_n) + log_v01;
    const double d = std::exp(log_d);
    t.log_cosh = log_cosh(d);
    t.log_sinh = log_d < -30.0 ? log_d : d - std::numbers::ln2 + std::log(-std::expm1(-2.0 * d));
    t.tanh_slope = std::tanh(d) * d * dlog / beta_n;
    const double d_coth_d = d < 1e-4 ? 1.0 + d * d / 3.0 : d / std::tanh(d);
    t.coth_slope = d_coth_d * dlog / beta_n;
    return t;
}

namespace {

std::vector<BeadTerms> all_terms(const TwoLevelState& s, const TwoLevelPotential& V, const RingParams& params) {
    s.validate(params.beads());
    std::vector<BeadTerms> t;
    t.reserve(s.q.size());
    for (double x : s.q) t.push_back(bead_terms(V, x, params.beta_n()));
    return t;
}

double kinetic_spring(const TwoLevelState& s, int k, const RingParams& params) {
    const std::size_t n = s.q.size();
    const auto i = static_cast<std::size_t>(k);
    const double dq = s.q[i] - s.q[(i + 1) % n];
    return s.p[i] * s.p[i] / (2.0 * params.mass()) + 0.5 * params.spring() * dq * dq;
}

// Potential part of H(l_new) - H(l) for a single flip of bead k (k < N) or the
// full flip (k == N).
double delta_branches(std::span<const BeadTerms> t, std::span<const std::uint8_t> l, int k, double beta_n) {
    const int n = static_cast<int>(l.size());
    if (k == n) {
        double d = 0.0;
        for (int i = 0; i < n; ++i) {
            const int li = l[i];
            if (li == l[(i + 1) % n]) d += t[i].v[1 - li] - t[i].v[li];
        }
        return d;
    }
    const int prev = (k + n - 1) % n;
    const int next = (k + 1) % n;
    const int lk = l[k];
    const double before = t[prev].branch(l[prev], lk, beta_n) + t[k].branch(lk, l[next], beta_n);
    const double after = t[prev].branch(l[prev], 1 - lk, beta_n) + t[k].branch(1 - lk, l[next], beta_n);
    if (before == kInf && after == kInf) return 0.0;
    return after - before;
}

double intensity_from_delta(double delta, double beta_n, double eta) {
    if (std::isnan(delta)) return 0.0;
    return eta * std::min(1.0, std::exp(-beta_n * delta));
}

double weight_from_terms(const TwoLevelObservable& A, std::span<const double> q, std::span<const std::uint8_t> l,
                         std::span<const BeadTerms> t, double beta_n) {
    const std::size_t n = q.size();
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double a = A.base(q[k]);
        if (A.placement == Placement::Diagonal) {
            s += a;
            continue;
        }
        if (a == 0.0) continue;
        const int lk = l[k];
        const int ln = l[(k + 1) % n];
        const double avg = 0.5 * (t[k].v[0] + t[k].v[1]);
        // beta_N (<l_k|G_k|l_{k+1}> - <lbar_k|G_k|l_{k+1}>), kinetic and spring parts cancel.
        const double log_ratio = lk == ln ? beta_n * (t[k].v[lk] - avg) + t[k].log_sinh - t[k].log_cosh
                                          : beta_n * (avg - t[k].v[ln]) + t[k].log_cosh - t[k].log_sinh;
        s -= a * std::exp(log_ratio);
    }
    return s / static_cast<double>(n);
}

void check_transition(std::span<const std::uint8_t> from, std::span<const std::uint8_t> to, int& move) {
    if (from.size() != to.size()) throw DimensionError("label vectors differ in length");
    int distance = 0;
    int where = -1;
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (to[i] > 1) throw InvalidTransitionError("level index must be 0 or 1");
        if (from[i] != to[i]) {
            ++distance;
            where = static_cast<int>(i);
        }
    }
    const int n = static_cast<int>(from.size());
    if (distance == n) {
        move = n;
    } else if (distance == 1) {
        move = where;
    } else {
        throw InvalidTransitionError("labels may change at one bead or at all beads, not " + std::to_string(distance));
    }
}

}  // namespace

double g_entry(int l, int l_next, int k, const TwoLevelState& state, const TwoLevelPotential& V,
               const RingParams& params) {
    state.validate(params.beads());
    if (k < 0 || k >= params.beads()) throw DimensionError("bead index out of range");
    if ((l != 0 && l != 1) || (l_next != 0 && l_next != 1)) throw InvalidArgumentError("level index must be 0 or 1");
    const BeadTerms t = bead_terms(V, state.q[static_cast<std::size_t>(k)], params.beta_n());
    return kinetic_spring(state, k, params) + t.branch(l, l_next, params.beta_n());
}

double h2(const TwoLevelState& state, const TwoLevelPotential& V, const RingParams& params) {
    const auto t = all_terms(state, V, params);
    const int n = params.beads();
    double h = 0.0;
    for (int k = 0; k < n; ++k)
        h += kinetic_spring(state, k, params) + t[k].branch(state.l[k], state.l[(k + 1) % n], params.beta_n());
    return h;
}

double weight_fn(const TwoLevelObservable& A, const TwoLevelState& state, const TwoLevelPotential& V,
                 const RingParams& params) {
    const auto t = all_terms(state, V, params);
    return weight_from_terms(A, state.q, state.l, t, params.beta_n());
}

double hop_intensity(const TwoLevelState& state, std::span<const std::uint8_t> l_new, const RingParams& params,
                     const TwoLevelPotential& V, double eta) {
    if (!(eta > 0.0)) throw InvalidArgumentError("eta must be positive");
    int move = 0;
    check_transition(state.l, l_new, move);
    const auto t = all_terms(state, V, params);
    return intensity_from_delta(delta_branches(t, state.l, move, params.beta_n()), params.beta_n(), eta);
}

std::vector<double> force2(const TwoLevelState& state, const TwoLevelPotential& V, const RingParams& params) {
    const auto t = all_terms(state, V, params);
    const std::size_t n = state.q.size();
    std::vector<double> f(n);
    const double k = params.spring();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t prev = (i + n - 1) % n;
        const std::size_t next = (i + 1) % n;
        f[i] = -k * (2.0 * state.q[i] - state.q[prev] - state.q[next]) - t[i].branch_slope(state.l[i], state.l[next]);
    }
    return f;
}

Eigen::MatrixXd hopping_generator(const TwoLevelState& state, const TwoLevelPotential& V, const RingParams& params,
                                  double eta) {
    const int n = params.beads();
    if (n > 16) throw InvalidArgumentError("generator is only assembled for N <= 16");
    const auto t = all_terms(state, V, params);
    const int states = 1 << n;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(states, states);
    std::vector<std::uint8_t> l(static_cast<std::size_t>(n));
    for (int s = 0; s < states; ++s) {
        for (int i = 0; i < n; ++i) l[i] = static_cast<std::uint8_t>((s >> i) & 1);
        for (int move = 0; move <= n; ++move) {
            const int target = move == n ? (states - 1) ^ s : s ^ (1 << move);
            const double rate = intensity_from_delta(delta_branches(t, l, move, params.beta_n()), params.beta_n(), eta);
            Q(s, target) += rate;
            Q(s, s) -= rate;
        }
    }
    return Q;
}

Eigen::VectorXd label_gibbs_weights(const TwoLevelState& state, const TwoLevelPotential& V,
                                    const RingParams& params) {
    const int n = params.beads();
    if (n > 16) throw InvalidArgumentError("label weights are only enumerated for N <= 16");
    const int states = 1 << n;
    TwoLevelState s = state;
    Eigen::VectorXd h(states);
    for (int b = 0; b < states; ++b) {
        for (int i = 0; i < n; ++i) s.l[i] = static_cast<std::uint8_t>((b >> i) & 1);
        h(b) = h2(s, V, params);
    }
    const double hmin = h.minCoeff();
    Eigen::VectorXd w(states);
    for (int b = 0; b < states; ++b) w(b) = std::exp(-params.beta_n() * (h(b) - hmin));
    return w / w.sum();
}

double default_eta(const RingParams& params) { return 1.0 / params.beta_n(); }

SurfaceHoppingIntegrator::SurfaceHoppingIntegrator(TwoLevelPotential V, const RingParams& params, double dt,
                                                   double gamma_f, double eta, TwoLevelState initial)
    : V_(std::move(V)), params_(params), dt_(dt), friction_(std::exp(-gamma_f * dt)),
      noise_(std::sqrt(-std::expm1(-2.0 * gamma_f * dt) * params.mass() / params.beta_n())), eta_(eta),
      state_(std::move(initial)) {
    if (!(eta > 0.0)) throw InvalidArgumentError("eta must be positive");
    if (!(dt > 0.0)) throw InvalidArgumentError("dt must be positive");
    state_.validate(params.beads());
    const auto n = static_cast<std::size_t>(params.beads());
    substeps_ = std::max(1, static_cast<int>(std::ceil(eta * static_cast<double>(n + 1) * dt - 1e-12)));
    force_.assign(n, 0.0);
    rates_.assign(n + 1, 0.0);
    refresh_terms();
    refresh_force();
}

void SurfaceHoppingIntegrator::refresh_terms() {
    terms_.resize(state_.q.size());
    for (std::size_t i = 0; i < state_.q.size(); ++i) terms_[i] = bead_terms(V_, state_.q[i], params_.beta_n());
}

void SurfaceHoppingIntegrator::refresh_force() {
    const std::size_t n = state_.q.size();
    const double k = params_.spring();
    const auto& q = state_.q;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t prev = (i + n - 1) % n;
        const std::size_t next = (i + 1) % n;
        force_[i] = -k * (2.0 * q[i] - q[prev] - q[next]) - terms_[i].branch_slope(state_.l[i], state_.l[next]);
    }
}

double SurfaceHoppingIntegrator::delta_h(int move) const {
    return delta_branches(terms_, state_.l, move, params_.beta_n());
}

void SurfaceHoppingIntegrator::jump(RandomStream& rng, double h) {
    const int n = params_.beads();
    for (int move = 0; move <= n; ++move)
        rates_[static_cast<std::size_t>(move)] = intensity_from_delta(delta_h(move), params_.beta_n(), eta_);
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (int move = 0; move <= n; ++move) {
        cumulative += rates_[static_cast<std::size_t>(move)] * h;
        if (u < cumulative) {
            if (move == n) {
                for (auto& v : state_.l) v = static_cast<std::uint8_t>(1 - v);
            } else {
                state_.l[static_cast<std::size_t>(move)] ^= 1;
            }
            ++hops_;
            return;
        }
    }
}

void SurfaceHoppingIntegrator::step(RandomStream& rng) {
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
        q[i] += drift * p[i];
    }
    refresh_terms();
    refresh_force();
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] += half * force_[i];
        finite = finite && std::isfinite(q[i]) && std::isfinite(p[i]);
    }
    if (!finite) throw DivergenceError("PIMD-SH trajectory diverged; reduce dt (currently " + std::to_string(dt_) + ")");
    const long before = hops_;
    const double h = dt_ / substeps_;
    for (int s = 0; s < substeps_; ++s) jump(rng, h);
    if (hops_ != before) refresh_force();
}

double SurfaceHoppingIntegrator::weight(const TwoLevelObservable& A) const {
    return weight_from_terms(A, state_.q, state_.l, terms_, params_.beta_n());
}

std::vector<ForwardEstimate> pimd_sh_estimate(const TwoLevelPotential& V,
                                              std::span<const TwoLevelObservable> observables,
                                              const RingParams& params, const LangevinConfig& cfg, double eta) {
    if (observables.empty()) throw InvalidArgumentError("pimd_sh_estimate needs at least one observable");
    V.validate();
    const LangevinConfig c = cfg.resolved(params);
    c.validate();
    const double rate = eta > 0.0 ? eta : default_eta(params);
    RandomStream rng(c.seed);

    // Start every bead at the lower of the two coarse diagonal minima.
    const double x0 = coarse_minimizer(V.v00);
    const double x1 = coarse_minimizer(V.v11);
    const bool upper = potential_eval(V.v11, x1) < potential_eval(V.v00, x0);
    const auto n = static_cast<std::size_t>(params.beads());
    TwoLevelState start{std::vector<double>(n, upper ? x1 : x0), std::vector<double>(n),
                        std::vector<std::uint8_t>(n, upper ? 1 : 0)};
    const double sd = std::sqrt(params.mass() / params.beta_n());
    for (double& p : start.p) p = sd * rng.normal();

    SurfaceHoppingIntegrator integrator(V, params, c.dt, c.gamma_f, rate, std::move(start));
    std::vector<BatchMeans> acc;
    acc.reserve(observables.size());
    for (std::size_t k = 0; k < observables.size(); ++k) acc.emplace_back(c.n_samples(), c.n_batches);
    for (long s = 0; s < c.n_burnin; ++s) integrator.step(rng);
    const long n_samples = c.n_samples();
    for (long s = 0; s < n_samples; ++s) {
        for (long t = 0; t < c.thin; ++t) integrator.step(rng);
        for (std::size_t k = 0; k < observables.size(); ++k) acc[k].add(integrator.weight(observables[k]));
    }
    std::vector<ForwardEstimate> out;
    out.reserve(acc.size());
    for (const auto& a : acc) out.push_back(a.estimate());
    return out;
}

std::vector<double> exact_thermal_averages_2level(const TwoLevelPotential& V,
                                                  std::span<const TwoLevelObservable> observables, double beta,
                                                  double mass, const GridSpec& grid) {
    grid.validate(16);
    if (!(beta > 0.0) || !(mass > 0.0)) throw InvalidArgumentError("beta and mass must be positive");
    const std::size_t m = grid.n_points - 2;
    // Unknown 2i + l holds level l at grid point i + 1.
    SymmetricBand H(2 * m, 4);
    add_kinetic(H, m, 0, 2, grid.spacing(), mass);
    add_kinetic(H, m, 1, 2, grid.spacing(), mass);
    for (std::size_t i = 0; i < m; ++i) {
        const double x = grid.point(i + 1);
        H.set(2 * i, 2 * i, H.get(2 * i, 2 * i) + potential_eval(V.v00, x));
        H.set(2 * i + 1, 2 * i + 1, H.get(2 * i + 1, 2 * i + 1) + potential_eval(V.v11, x));
        H.set(2 * i + 1, 2 * i, V.coupling(x));
    }
    const auto states = thermal_states(H, beta);
    std::vector<double> diag(m, 0.0);
    std::vector<double> off(m, 0.0);
    for (std::size_t k = 0; k < states.weights.size(); ++k) {
        const auto& psi = states.vectors[k];
        const double w = states.weights[k];
        for (std::size_t i = 0; i < m; ++i) {
            diag[i] += w * (psi[2 * i] * psi[2 * i] + psi[2 * i + 1] * psi[2 * i + 1]);
            off[i] += w * 2.0 * psi[2 * i] * psi[2 * i + 1];
        }
    }
    std::vector<double> out;
    out.reserve(observables.size());
    for (const auto& A : observables) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double x = grid.point(i + 1);
            s += A.placement == Placement::Diagonal ? A.base(x) * diag[i] : A.base(x) * off[i];
        }
        out.push_back(s);
    }
    return out;
}

double exact_thermal_average_2level(const TwoLevelPotential& V, const TwoLevelObservable& A, double beta,
                                    double mass, const GridSpec& grid) {
    return exact_thermal_averages_2level(V, std::span<const TwoLevelObservable>(&A, 1), beta, mass, grid).front();
}

}  // namespace qti

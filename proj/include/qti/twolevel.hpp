#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qti/basis.hpp"
#include "qti/grid.hpp"
#include "qti/pimd.hpp"
#include "qti/random.hpp"
#include "qti/ringpoly.hpp"

namespace qti {

// A exp(-(x-c)^2 / (2 sigma^2)) with A > 0.
struct GaussianComponent {
    double amplitude = 1.0;
    double center = 0.0;
    double sigma = 0.5;
};

// Symmetric 2x2 potential [[V00, V01], [V01, V11]] with V01 a positive
// mixture of Gaussians, so V01 never changes sign.
struct TwoLevelPotential {
    PotentialCoeffs v00;
    PotentialCoeffs v11;
    std::vector<GaussianComponent> v01;

    void validate() const;

    double coupling(double x) const;

    // log V01(x) and d/dx log V01(x), computed without underflow. With every
    // amplitude zero, log V01 = -inf and the slope is reported as 0.
    void log_coupling(double x, double& log_value, double& log_slope) const;
};

void to_json(nlohmann::json& j, const TwoLevelPotential& V);
void from_json(const nlohmann::json& j, TwoLevelPotential& V);

struct TwoLevelState {
    std::vector<double> q;
    std::vector<double> p;
    std::vector<std::uint8_t> l;

    void validate(int beads) const;
};

enum class Placement { Diagonal, OffDiagonal };

// a(x) I for Diagonal, a(x) sigma_x for OffDiagonal.
struct TwoLevelObservable {
    Placement placement = Placement::Diagonal;
    Observable base = Observable::gaussian(0.0, 0.0);

    double diagonal(double x) const { return placement == Placement::Diagonal ? base(x) : 0.0; }
    double off_diagonal(double x) const { return placement == Placement::OffDiagonal ? base(x) : 0.0; }
};

void to_json(nlohmann::json& j, const TwoLevelObservable& A);
TwoLevelObservable two_level_observable_from_json(const nlohmann::json& j);

// Potential-dependent pieces of G_k at one bead position.
struct BeadTerms {
    double v[2] = {0.0, 0.0};   // V00, V11
    double dv[2] = {0.0, 0.0};  // their slopes
    double log_cosh = 0.0;      // log cosh(beta_N |V01|)
    double log_sinh = 0.0;      // log sinh(beta_N |V01|), -inf when V01 = 0
    double tanh_slope = 0.0;    // d/dq (1/beta_N) log cosh(beta_N V01)
    double coth_slope = 0.0;    // d/dq (1/beta_N) log sinh(beta_N V01)

    // Potential branch of <l|G|l'>.
    double branch(int l, int l_next, double beta_n) const;
    double branch_slope(int l, int l_next) const;
};

BeadTerms bead_terms(const TwoLevelPotential& V, double x, double beta_n);

// <l|G_k|l_next> including the kinetic and spring parts. +inf when l != l_next
// and V01(q_k) = 0.
double g_entry(int l, int l_next, int k, const TwoLevelState& state, const TwoLevelPotential& V,
               const RingParams& params);

// H_N(q,p,l) = sum_k <l_k|G_k|l_{k+1}>, cyclic in q and l.
double h2(const TwoLevelState& state, const TwoLevelPotential& V, const RingParams& params);

// W_N[A](q,p,l).
double weight_fn(const TwoLevelObservable& A, const TwoLevelState& state, const TwoLevelPotential& V,
                 const RingParams& params);

// eta * min{1, exp[beta_N (H(z,l) - H(z,l_new))]} for l_new a single flip or
// the full flip of state.l; anything else throws InvalidTransitionError. This
// Metropolis form satisfies detailed balance with respect to exp(-beta_N H).
double hop_intensity(const TwoLevelState& state, std::span<const std::uint8_t> l_new, const RingParams& params,
                     const TwoLevelPotential& V, double eta);

// -grad_q H_N at fixed labels.
std::vector<double> force2(const TwoLevelState& state, const TwoLevelPotential& V, const RingParams& params);

// Continuous-time generator of the label process at frozen (q,p), indexed by
// the bit pattern sum_k l_k 2^k. Rows sum to zero. Intended for small N.
Eigen::MatrixXd hopping_generator(const TwoLevelState& state, const TwoLevelPotential& V, const RingParams& params,
                                  double eta);

// exp(-beta_N H(z,l)) normalised over all 2^N label vectors, same indexing.
Eigen::VectorXd label_gibbs_weights(const TwoLevelState& state, const TwoLevelPotential& V,
                                    const RingParams& params);

// Default hopping scale eta = 1/beta_N.
double default_eta(const RingParams& params);

// BAOAB on (q,p) at fixed labels, followed by the label jump process at
// frozen (q,p). Each step is split into the smallest number m of jump
// sub-steps with eta (N+1) dt/m <= 1; in a sub-step of length h, move j is
// taken with probability lambda_j h, which is exactly reversible with respect
// to the label Gibbs weights.
class SurfaceHoppingIntegrator {
public:
    SurfaceHoppingIntegrator(TwoLevelPotential V, const RingParams& params, double dt, double gamma_f, double eta,
                             TwoLevelState initial);

    void step(RandomStream& rng);

    const TwoLevelState& state() const noexcept { return state_; }
    std::span<const BeadTerms> terms() const noexcept { return terms_; }
    long hops() const noexcept { return hops_; }

    double weight(const TwoLevelObservable& A) const;

private:
    void refresh_terms();
    void refresh_force();
    void jump(RandomStream& rng, double h);
    double delta_h(int move) const;

    TwoLevelPotential V_;
    RingParams params_;
    double dt_;
    double friction_;
    double noise_;
    double eta_;
    int substeps_;
    TwoLevelState state_;
    std::vector<BeadTerms> terms_;
    std::vector<double> force_;
    std::vector<double> rates_;
    long hops_ = 0;
};

// Time average of weight_fn per observable along one PIMD-SH trajectory.
// eta <= 0 selects default_eta.
std::vector<ForwardEstimate> pimd_sh_estimate(const TwoLevelPotential& V,
                                              std::span<const TwoLevelObservable> observables,
                                              const RingParams& params, const LangevinConfig& cfg, double eta = 0.0);

// Tr[e^(-beta H) A] / Tr[e^(-beta H)] for the 2x2 matrix Hamiltonian on the grid.
double exact_thermal_average_2level(const TwoLevelPotential& V, const TwoLevelObservable& A, double beta,
                                    double mass, const GridSpec& grid = {});

// Same oracle for several observables from one diagonalisation.
std::vector<double> exact_thermal_averages_2level(const TwoLevelPotential& V,
                                                  std::span<const TwoLevelObservable> observables, double beta,
                                                  double mass, const GridSpec& grid = {});

}  // namespace qti

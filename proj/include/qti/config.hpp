#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qti/basis.hpp"
#include "qti/inversion.hpp"
#include "qti/metrics.hpp"
#include "qti/pimd.hpp"
#include "qti/ringpoly.hpp"
#include "qti/twolevel.hpp"

namespace qti {

enum class Mode { Forward, Invert, Stability, TwoLevel };

std::string_view mode_name(Mode mode);
Mode parse_mode(std::string_view text);

// Where y_star comes from: the grid oracle, or a long forward run of the truth
// with the configured sampler (truth_steps steps, same burn-in and thinning).
enum class TruthSource { Exact, Forward };

// 1-level ground truth: Hermite coefficients or the closed-form bump.
struct TruthSpec {
    enum class Kind { Coefficients, Bump };
    Kind kind = Kind::Bump;
    PotentialCoeffs coeffs;
    SinusoidalBump bump;

    Potential potential() const;
};

struct ExperimentConfig {
    Mode mode = Mode::Forward;
    std::uint64_t seed = 0;

    // [system]
    double mass = 1.0;
    double beta = 1.0;
    int beads = 8;
    TruthSpec truth;
    TwoLevelPotential truth2;

    // [prior]
    int truncation = 12;
    double prior_scale = 4.0;
    double prior_exponent = 1.2;
    double amplitude_scale = 1.0;

    // [observables]
    std::vector<Observable> train;
    std::vector<Observable> test;
    std::vector<TwoLevelObservable> train2;
    std::vector<TwoLevelObservable> test2;

    // [noise]: scalar scale, or per-observation variances when non-empty
    double noise_scale = 1e-3;
    std::vector<double> noise_variances;

    // [sampler]
    LangevinConfig sampler;
    double eta = 0.0;

    // [inversion]
    InversionConfig inversion;
    TruthSource truth_source = TruthSource::Exact;
    long truth_steps = 1000000;
    bool noisy = false;

    // [stability]
    std::vector<double> stability_scales{0.01, 0.03, 0.1, 0.3};
    int stability_draws = 4;

    // [output]
    double x_min = -3.0;
    double x_max = 3.0;
    int x_points = 121;
    long max_lag = 100;

    bool two_level() const noexcept { return mode == Mode::TwoLevel; }
    RingParams ring() const { return RingParams(beads, mass, beta); }
    PriorSpec prior() const { return PriorSpec::power_law(truncation, prior_scale, prior_exponent); }
    NoiseModel noise() const;
    std::size_t n_train() const noexcept { return two_level() ? train2.size() : train.size(); }
    std::size_t n_test() const noexcept { return two_level() ? test2.size() : test.size(); }

    // Throws ConfigError naming the offending field.
    void validate() const;

    // 10 runs x 1600 proposals.
    void apply_paper_scale();
};

// Parses the INI-style document: top-level `mode` and `seed`, then the
// sections [system] [prior] [observables] [noise] [sampler] [inversion]
// [stability] [output]. Lines starting with '#' or ';' are comments. Unknown
// or duplicate keys are rejected. Parse errors carry the line number.
ExperimentConfig parse_config(std::string_view text);

// Fully resolved document with every field spelled out; parse_config of the
// result reproduces the config exactly.
std::string canonical_config(const ExperimentConfig& cfg);

std::string observable_text(const Observable& A);
std::string observable_text(const TwoLevelObservable& A);

}  // namespace qti

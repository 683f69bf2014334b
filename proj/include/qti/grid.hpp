#pragma once

#include <cstddef>
#include <string>

#include "qti/errors.hpp"

namespace qti {

// Uniform grid x_i = x_min + i*h, i = 0..n_points-1.
struct GridSpec {
    double x_min = -12.0;
    double x_max = 12.0;
    std::size_t n_points = 1601;

    double spacing() const noexcept { return (x_max - x_min) / static_cast<double>(n_points - 1); }
    double point(std::size_t i) const noexcept { return x_min + static_cast<double>(i) * spacing(); }

    void validate(std::size_t min_points = 2) const {
        if (n_points < min_points || !(x_min < x_max))
            throw InvalidGridError("grid needs x_min < x_max and at least " + std::to_string(min_points) + " points");
    }

    GridSpec refined() const { return {x_min, x_max, 2 * n_points - 1}; }
};

}  // namespace qti

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qti {

// Real symmetric band matrix, lower band storage (LAPACK 'L' layout):
// element (i, j) with 0 <= i - j <= bandwidth lives at data[(i - j) + j * (bandwidth + 1)].
class SymmetricBand {
public:
    SymmetricBand(std::size_t n, std::size_t bandwidth);

    std::size_t size() const noexcept { return n_; }
    std::size_t bandwidth() const noexcept { return kd_; }

    // Sets (i, j) and (j, i). |i - j| must not exceed the bandwidth.
    void set(std::size_t i, std::size_t j, double value);
    double get(std::size_t i, std::size_t j) const;

    // y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;

    const std::vector<double>& raw() const noexcept { return data_; }

private:
    std::size_t n_;
    std::size_t kd_;
    std::vector<double> data_;
};

// Adds the fourth-order finite-difference kinetic operator -(1/2M) d^2/dx^2 with
// spacing h on the n unknowns stored at rows offset, offset + stride, ...;
// values beyond either end are taken as zero.
void add_kinetic(SymmetricBand& H, std::size_t n, std::size_t offset, std::size_t stride, double h, double mass);

// All eigenvalues in ascending order. Throws OracleError if LAPACK fails.
std::vector<double> band_eigenvalues(const SymmetricBand& H);

// Unit eigenvectors for the given (accurate) eigenvalues by shifted inverse
// iteration on the banded LU factorization. Vectors belonging to (near-)
// degenerate eigenvalues are orthogonalised against each other.
std::vector<std::vector<double>> band_eigenvectors(const SymmetricBand& H, std::span<const double> eigenvalues);

// Normalised Boltzmann weights e^(-beta E_k)/Z and unit eigenvectors of the
// states with beta (E_k - E_0) <= cutoff; the rest carry weight below e^-cutoff.
struct ThermalStates {
    std::vector<double> weights;
    std::vector<std::vector<double>> vectors;
};

ThermalStates thermal_states(const SymmetricBand& H, double beta, double cutoff = 60.0);

// Canonical average sum_k e^(-beta E_k) <psi_k|A|psi_k> / sum_k e^(-beta E_k).
// States with beta (E_k - E_0) above `cutoff` carry weight below e^-cutoff and are
// not diagonalised.
double boltzmann_average(const SymmetricBand& H, double beta,
                         const std::function<double(std::span<const double>)>& expectation, double cutoff = 60.0);

}  // namespace qti

#include "qti/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <lapacke.h>

#include "qti/errors.hpp"
#include "qti/random.hpp"

namespace qti {

SymmetricBand::SymmetricBand(std::size_t n, std::size_t bandwidth)
    : n_(n), kd_(bandwidth), data_((bandwidth + 1) * n, 0.0) {
    if (n == 0) throw OracleError("empty matrix");
}

void SymmetricBand::set(std::size_t i, std::size_t j, double value) {
    if (i < j) std::swap(i, j);
    if (i - j > kd_ || i >= n_) throw OracleError("band index out of range");
    data_[(i - j) + j * (kd_ + 1)] = value;
}

double SymmetricBand::get(std::size_t i, std::size_t j) const {
    if (i < j) std::swap(i, j);
    if (i >= n_ || i - j > kd_) return 0.0;
    return data_[(i - j) + j * (kd_ + 1)];
}

void SymmetricBand::multiply(std::span<const double> x, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
        y[j] += data_[j * (kd_ + 1)] * x[j];
        for (std::size_t d = 1; d <= kd_ && j + d < n_; ++d) {
            const double a = data_[d + j * (kd_ + 1)];
            y[j + d] += a * x[j];
            y[j] += a * x[j + d];
        }
    }
}

void add_kinetic(SymmetricBand& H, std::size_t n, std::size_t offset, std::size_t stride, double h, double mass) {
    const double c = 1.0 / (2.0 * mass * 12.0 * h * h);
    const double stencil[3] = {30.0 * c, -16.0 * c, 1.0 * c};
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t row = offset + i * stride;
        H.set(row, row, H.get(row, row) + stencil[0]);
        for (std::size_t d = 1; d <= 2 && i + d < n; ++d) {
            const std::size_t col = row + d * stride;
            H.set(col, row, H.get(col, row) + stencil[d]);
        }
    }
}

std::vector<double> band_eigenvalues(const SymmetricBand& H) {
    const auto n = static_cast<lapack_int>(H.size());
    const auto kd = static_cast<lapack_int>(H.bandwidth());
    std::vector<double> ab = H.raw();
    std::vector<double> w(H.size());
    const lapack_int info = LAPACKE_dsbev(LAPACK_COL_MAJOR, 'N', 'L', n, kd, ab.data(), kd + 1, w.data(), nullptr, 1);
    if (info != 0) throw OracleError("dsbev failed with info " + std::to_string(info));
    return w;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void normalize(std::vector<double>& x) {
    const double norm = std::sqrt(dot(x, x));
    if (!(norm > 0.0) || !std::isfinite(norm)) throw OracleError("inverse iteration broke down");
    for (double& v : x) v /= norm;
}

}  // namespace

std::vector<std::vector<double>> band_eigenvectors(const SymmetricBand& H, std::span<const double> eigenvalues) {
    const std::size_t n = H.size();
    const std::size_t kd = H.bandwidth();
    const auto ln = static_cast<lapack_int>(n);
    const auto lkd = static_cast<lapack_int>(kd);
    const std::size_t ldab = 3 * kd + 1;

    double scale = 0.0;
    for (double a : H.raw()) scale = std::max(scale, std::abs(a));
    scale = std::max(scale, 1.0);
    const double cluster_tol = 1e-6 * scale;

    RandomStream rng(0x5eed);
    std::vector<std::vector<double>> vectors;
    vectors.reserve(eigenvalues.size());
    std::vector<double> ab(ldab * n);
    std::vector<lapack_int> pivots(n);

    for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
        // Shift slightly off the eigenvalue so the factorization stays regular.
        const double shift = eigenvalues[k] + 4.0 * 2.2e-16 * scale;
        std::fill(ab.begin(), ab.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t i_lo = j >= kd ? j - kd : 0;
            const std::size_t i_hi = std::min(n - 1, j + kd);
            for (std::size_t i = i_lo; i <= i_hi; ++i) {
                double a = H.get(i, j);
                if (i == j) a -= shift;
                ab[(2 * kd + i - j) + j * ldab] = a;
            }
        }
        lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, ln, ln, lkd, lkd, ab.data(), static_cast<lapack_int>(ldab),
                                         pivots.data());
        if (info < 0) throw OracleError("dgbtrf failed with info " + std::to_string(info));
        if (info > 0) {
            // Exactly singular: nudge the zero pivot.
            ab[2 * kd + static_cast<std::size_t>(info - 1) * ldab] = 1e-300;
        }

        std::vector<double> x(n);
        for (double& v : x) v = rng.uniform() - 0.5;
        normalize(x);
        for (int iter = 0; iter < 3; ++iter) {
            info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', ln, lkd, lkd, 1, ab.data(), static_cast<lapack_int>(ldab),
                                  pivots.data(), x.data(), ln);
            if (info != 0) throw OracleError("dgbtrs failed with info " + std::to_string(info));
            normalize(x);
            for (std::size_t m = 0; m < k; ++m) {
                if (std::abs(eigenvalues[m] - eigenvalues[k]) > cluster_tol) continue;
                const double c = dot(vectors[m], x);
                for (std::size_t i = 0; i < n; ++i) x[i] -= c * vectors[m][i];
            }
            normalize(x);
        }
        vectors.push_back(std::move(x));
    }
    return vectors;
}

ThermalStates thermal_states(const SymmetricBand& H, double beta, double cutoff) {
    const auto energies = band_eigenvalues(H);
    const double e0 = energies.front();
    std::size_t count = 0;
    while (count < energies.size() && beta * (energies[count] - e0) <= cutoff) ++count;
    ThermalStates out;
    out.vectors = band_eigenvectors(H, std::span<const double>(energies.data(), count));
    out.weights.resize(count);
    double z = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        out.weights[k] = std::exp(-beta * (energies[k] - e0));
        z += out.weights[k];
    }
    if (!(z > 0.0) || !std::isfinite(z)) throw OracleError("degenerate Boltzmann sum");
    for (double& w : out.weights) w /= z;
    return out;
}

double boltzmann_average(const SymmetricBand& H, double beta,
                         const std::function<double(std::span<const double>)>& expectation, double cutoff) {
    const auto states = thermal_states(H, beta, cutoff);
    double acc = 0.0;
    for (std::size_t k = 0; k < states.weights.size(); ++k) acc += states.weights[k] * expectation(states.vectors[k]);
    if (!std::isfinite(acc)) throw OracleError("thermal average is not finite");
    return acc;
}

}  // namespace qti

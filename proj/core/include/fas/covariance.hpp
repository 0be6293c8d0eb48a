#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fas/linalg.hpp"

namespace fas {

struct FasConfig {
    int n_ports = 100;          // N
    double width = 1.0;         // W, aperture in wavelengths
    double sigma2 = 10.0;       // per-port channel power
    double snr_target_db = 0.0; // gamma_th / Gamma in dB

    // Throws ConfigError when N < 1, W <= 0 or sigma2 <= 0.
    void validate() const;

    double sigma() const;
    // c = W / (N - 1); the port spacing in wavelengths. Requires N >= 2.
    double spacing() const;
    // 0 < c < 1/2, needed wherever the large-N eigenvalue law is used.
    bool spacing_below_half() const;
    // Jake argument for a port-index lag: 2 pi lag W / (N - 1).
    double lag_argument(long lag) const;
};

// sigma2 * J0(2 pi (k - l) W / (N - 1)); entries from the extended-precision J0,
// diagonal exactly sigma2.
Matrix build_jake_covariance(const FasConfig& config);
MatrixLD build_jake_covariance_ext(const FasConfig& config);

// First column of the Jake matrix (it is symmetric Toeplitz).
std::vector<long double> jake_first_column(const FasConfig& config);

struct SpectralModel {
    FasConfig config;
    Matrix matrix;                  // Sigma_g
    std::vector<double> eigenvalues; // non-increasing, rounding negatives clamped to 0
    Matrix eigenvectors;            // column l is u_l
    int jacobi_sweeps = 0;

    std::size_t size() const noexcept { return eigenvalues.size(); }
};

// Build Sigma_g and its eigendecomposition (long double Jacobi).
SpectralModel make_spectral_model(const FasConfig& config);

// Eigendecomposition of an arbitrary symmetric matrix; throws DomainError if
// the matrix is not symmetric to 1e-12 relative.
EigenDecomposition eigendecompose(const Matrix& matrix);

struct EpsilonRank {
    double threshold = 0.0;
    int rank = 0;
    double truncation_energy = 0.0;  // sum of eigenvalues beyond rank
};

EpsilonRank epsilon_rank(const SpectralModel& spectral, double threshold);
EpsilonRank epsilon_rank(const std::vector<double>& eigenvalues, double threshold);

inline constexpr double kDefaultRankConstant = 3.1935;

// ceil(a W N / (N - 1)) clamped to [1, N - 1]. Requires N >= 2.
int epsilon_rank_formula(const FasConfig& config, double a_const = kDefaultRankConstant);
// Same without the clamp (what the fit compares against).
int epsilon_rank_formula_raw(int n_ports, double width, double a_const);

// Eigenvalues only, via the Toeplitz split; much cheaper than the full
// decomposition and good to long double rounding.
std::vector<long double> jake_eigenvalues(const FasConfig& config);

struct FitCell {
    int n_ports;
    double width;
    int numeric_rank;  // eigenvalues of T_N above 1/(2N)
};

struct FitOptions {
    double a_min = 1.0;
    double a_max = 6.0;
    double a_step = 1e-4;
    // Drop (N, W) pairs with W/(N-1) >= 1/2 instead of rejecting the grid.
    bool skip_invalid = false;
};

struct FitResult {
    double a = 0.0;           // midpoint of the first minimising run of the scan
    double interval_lo = 0.0; // that run, inclusive
    double interval_hi = 0.0;
    double mse = 0.0;
    std::vector<FitCell> cells;
    std::vector<std::pair<int, double>> skipped;
};

// Least-squares scan of a over the grid product, threshold 1/(2N) on the
// unit-power matrix T_N. Throws ConfigError listing the offending pairs when a
// pair violates W/(N-1) < 1/2 and skip_invalid is false.
FitResult fit_a_constant(const std::vector<int>& n_grid, const std::vector<double>& w_grid,
                         const FitOptions& options = {});

// Fit against caller-supplied ranks (no eigen-solves).
FitResult fit_a_to_cells(std::vector<FitCell> cells, const FitOptions& options = {});

std::vector<int> default_fit_n_grid();     // 10, 20, ..., 300
std::vector<double> default_fit_w_grid();  // 0.1, 0.2, ..., 5.0

// Large-N fraction of eigenvalues of the Jake matrix at or below x. The law
// has an atom of mass 1 - 2c at 0, flat up to sigma2 / (pi c), then rises to 1.
double limiting_eigen_cdf(double x, double c, double sigma2);

// Sup over x of |F_N(x) - limiting_eigen_cdf(x)| for the empirical CDF F_N of
// the given eigenvalues. Values with |s| <= zero_tol are rounding noise around
// the atom and are counted at 0.
double limiting_eigen_distance(std::span<const double> eigenvalues, double c, double sigma2, double zero_tol);

}  // namespace fas

#include "fas/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fas/errors.hpp"
#include "fas/specfun.hpp"

namespace fas {

void FasConfig::validate() const
{
    if (n_ports < 1)
        throw ConfigError("n_ports must be at least 1");
    if (!(width > 0.0) || !std::isfinite(width))
        throw ConfigError("width must be positive and finite");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw ConfigError("sigma2 must be positive and finite");
    if (std::isnan(snr_target_db))
        throw ConfigError("snr_target_db must not be NaN");
}

double FasConfig::sigma() const { return std::sqrt(sigma2); }

double FasConfig::spacing() const
{
    if (n_ports < 2)
        throw ConfigError("port spacing needs at least two ports");
    return width / (n_ports - 1);
}

bool FasConfig::spacing_below_half() const { return n_ports >= 2 && spacing() < 0.5; }

double FasConfig::lag_argument(long lag) const
{
    return 2.0 * std::numbers::pi * static_cast<double>(lag) * spacing();
}

std::vector<long double> jake_first_column(const FasConfig& config)
{
    config.validate();
    const auto n = static_cast<std::size_t>(config.n_ports);
    std::vector<long double> col(n);
    col[0] = config.sigma2;
    if (n == 1)
        return col;
    const long double step = 2.0L * std::numbers::pi_v<long double> *
                             static_cast<long double>(config.width) / static_cast<long double>(n - 1);
    for (std::size_t d = 1; d < n; ++d)
        col[d] = static_cast<long double>(config.sigma2) * bessel_j0_ext(step * static_cast<long double>(d));
    return col;
}

MatrixLD build_jake_covariance_ext(const FasConfig& config)
{
    const std::vector<long double> col = jake_first_column(config);
    const std::size_t n = col.size();
    MatrixLD m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m(i, j) = col[i > j ? i - j : j - i];
    return m;
}

Matrix build_jake_covariance(const FasConfig& config)
{
    return matrix_cast<double>(build_jake_covariance_ext(config));
}

EigenDecomposition eigendecompose(const Matrix& matrix)
{
    const std::size_t n = matrix.rows();
    if (n != matrix.cols())
        throw DomainError("eigendecompose: matrix must be square");
    double scale = 0.0;
    for (double v : matrix.data())
        scale = std::max(scale, std::fabs(v));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(matrix(i, j) - matrix(j, i)) > 1e-12 * scale)
                throw DomainError("eigendecompose: matrix is not symmetric");
    return jacobi_eigen(matrix);
}

SpectralModel make_spectral_model(const FasConfig& config)
{
    config.validate();
    SpectralModel model;
    model.config = config;
    const MatrixLD ext = build_jake_covariance_ext(config);
    model.matrix = matrix_cast<double>(ext);
    EigenDecomposition eig = jacobi_eigen(ext);
    for (double& s : eig.values)
        s = std::max(s, 0.0);
    model.eigenvalues = std::move(eig.values);
    model.eigenvectors = std::move(eig.vectors);
    model.jacobi_sweeps = eig.sweeps;
    return model;
}

EpsilonRank epsilon_rank(const std::vector<double>& eigenvalues, double threshold)
{
    if (!(threshold > 0.0))
        throw DomainError("epsilon_rank: threshold must be positive");
    EpsilonRank out;
    out.threshold = threshold;
    for (double s : eigenvalues) {
        if (s > threshold)
            ++out.rank;
        else
            out.truncation_energy += s;
    }
    return out;
}

EpsilonRank epsilon_rank(const SpectralModel& spectral, double threshold)
{
    return epsilon_rank(spectral.eigenvalues, threshold);
}

int epsilon_rank_formula_raw(int n_ports, double width, double a_const)
{
    if (n_ports < 2)
        throw ConfigError("epsilon_rank_formula: needs N >= 2");
    if (!(a_const > 0.0))
        throw DomainError("epsilon_rank_formula: a must be positive");
    const double v = a_const * width * n_ports / (n_ports - 1);
    return static_cast<int>(std::ceil(v));
}

int epsilon_rank_formula(const FasConfig& config, double a_const)
{
    config.validate();
    const int raw = epsilon_rank_formula_raw(config.n_ports, config.width, a_const);
    return std::clamp(raw, 1, config.n_ports - 1);
}

std::vector<long double> jake_eigenvalues(const FasConfig& config)
{
    const std::vector<long double> col = jake_first_column(config);
    return symmetric_toeplitz_eigenvalues<long double>(col);
}

std::vector<int> default_fit_n_grid()
{
    std::vector<int> g;
    for (int n = 10; n <= 300; n += 10)
        g.push_back(n);
    return g;
}

std::vector<double> default_fit_w_grid()
{
    std::vector<double> g;
    for (int i = 1; i <= 50; ++i)
        g.push_back(i / 10.0);
    return g;
}

FitResult fit_a_to_cells(std::vector<FitCell> cells, const FitOptions& options)
{
    if (cells.empty())
        throw DomainError("fit_a_constant: empty grid");
    if (!(options.a_step > 0.0) || !(options.a_max >= options.a_min) || !(options.a_min > 0.0))
        throw DomainError("fit_a_constant: bad scan range");

    std::vector<double> slope(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
        slope[i] = cells[i].width * cells[i].n_ports / (cells[i].n_ports - 1.0);

    const auto steps = static_cast<long>(std::llround((options.a_max - options.a_min) / options.a_step));
    double best = std::numeric_limits<double>::infinity();
    long run_lo = 0, run_hi = 0;
    bool in_run = false;
    for (long i = 0; i <= steps; ++i) {
        const double a = options.a_min + static_cast<double>(i) * options.a_step;
        double sse = 0.0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const double diff = cells[c].numeric_rank - std::ceil(a * slope[c]);
            sse += diff * diff;
        }
        if (sse < best) {
            best = sse;
            run_lo = run_hi = i;
            in_run = true;
        } else if (sse == best && in_run && run_hi == i - 1) {
            run_hi = i;
        } else {
            in_run = false;
        }
    }

    FitResult out;
    out.interval_lo = options.a_min + static_cast<double>(run_lo) * options.a_step;
    out.interval_hi = options.a_min + static_cast<double>(run_hi) * options.a_step;
    out.a = options.a_min + 0.5 * static_cast<double>(run_lo + run_hi) * options.a_step;
    out.mse = best / static_cast<double>(cells.size());
    out.cells = std::move(cells);
    return out;
}

FitResult fit_a_constant(const std::vector<int>& n_grid, const std::vector<double>& w_grid,
                         const FitOptions& options)
{
    if (n_grid.empty() || w_grid.empty())
        throw DomainError("fit_a_constant: empty grid");

    std::vector<std::pair<int, double>> bad;
    std::vector<FitCell> cells;
    for (int n : n_grid) {
        for (double w : w_grid) {
            FasConfig cfg{n, w, 1.0, 0.0};
            cfg.validate();
            if (n < 2 || !cfg.spacing_below_half()) {
                bad.emplace_back(n, w);
                continue;
            }
            cells.push_back({n, w, 0});
        }
    }
    if (!bad.empty() && !options.skip_invalid) {
        std::ostringstream msg;
        msg << "fit_a_constant: pairs with W/(N-1) >= 1/2:";
        for (const auto& [n, w] : bad)
            msg << " (" << n << ", " << w << ")";
        throw ConfigError(msg.str());
    }

    for (FitCell& cell : cells) {
        const FasConfig cfg{cell.n_ports, cell.width, 1.0, 0.0};
        const std::vector<long double> ev = jake_eigenvalues(cfg);
        const long double eps = 1.0L / (2.0L * cell.n_ports);
        cell.numeric_rank = static_cast<int>(std::count_if(ev.begin(), ev.end(),
                                                           [&](long double s) { return s > eps; }));
    }
    FitResult out = fit_a_to_cells(std::move(cells), options);
    out.skipped = std::move(bad);
    return out;
}

double limiting_eigen_cdf(double x, double c, double sigma2)
{
    if (!(c > 0.0 && c < 0.5))
        throw DomainError("limiting_eigen_cdf: c must lie in (0, 1/2)");
    if (!(sigma2 > 0.0))
        throw DomainError("limiting_eigen_cdf: sigma2 must be positive");
    if (std::isnan(x))
        throw DomainError("limiting_eigen_cdf: x is NaN");
    if (x < 0.0)
        return 0.0;
    const double knee = sigma2 / (std::numbers::pi * c);
    if (x < knee)
        return 1.0 - 2.0 * c;
    const double r = 2.0 * sigma2 / (std::numbers::pi * x);
    const double root = std::sqrt(std::max(0.0, 4.0 * c * c - r * r));
    return 1.0 - 2.0 * c + root;
}

double limiting_eigen_distance(std::span<const double> eigenvalues, double c, double sigma2, double zero_tol)
{
    if (eigenvalues.empty())
        throw DomainError("limiting_eigen_distance: no eigenvalues");
    if (!(zero_tol >= 0.0))
        throw DomainError("limiting_eigen_distance: zero_tol must be non-negative");
    std::vector<double> x(eigenvalues.begin(), eigenvalues.end());
    for (double& v : x)
        if (std::fabs(v) <= zero_tol)
            v = 0.0;
    std::sort(x.begin(), x.end());
    const auto n = static_cast<double>(x.size());
    auto law_left = [&](double v) { return v <= 0.0 ? 0.0 : limiting_eigen_cdf(v, c, sigma2); };
    // Both sides are step-or-monotone between sample points, so the sup sits at
    // a sample point (left or right limit) or at the atom.
    double sup = std::fabs(static_cast<double>(std::upper_bound(x.begin(), x.end(), 0.0) - x.begin()) / n -
                           limiting_eigen_cdf(0.0, c, sigma2));
    for (std::size_t i = 0; i < x.size();) {
        std::size_t j = i;
        while (j < x.size() && x[j] == x[i])
            ++j;
        const double below = static_cast<double>(i) / n;
        const double at = static_cast<double>(j) / n;
        sup = std::max({sup, std::fabs(below - law_left(x[i])), std::fabs(at - limiting_eigen_cdf(x[i], c, sigma2))});
        i = j;
    }
    return sup;
}

}  // namespace fas

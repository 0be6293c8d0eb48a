#include "fas/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "fas/errors.hpp"

namespace fas {

void Accuracy::validate() const
{
    if (!(abs_tol > 0.0) || !std::isfinite(abs_tol))
        throw DomainError("Accuracy.abs_tol must be a positive finite number");
    if (max_terms < 1)
        throw DomainError("Accuracy.max_terms must be at least 1");
}

namespace {

constexpr double kJ0SeriesLimit = 16.0;

double j0_series(double x, const Accuracy& acc)
{
    // Alternating series; long double keeps the cancellation at |x| = 16
    // (largest term ~2e5) below 1e-13.
    const long double q = -0.25L * static_cast<long double>(x) * x;
    long double term = 1.0L;
    long double sum = 1.0L;
    for (int k = 1; k <= acc.max_terms; ++k) {
        term *= q / (static_cast<long double>(k) * k);
        sum += term;
        if (std::fabs(term) < 1e-22L)
            return static_cast<double>(sum);
    }
    throw AccuracyError("bessel_j0: power series did not converge", static_cast<double>(sum));
}

double j0_hankel(double x)
{
    // J0(x) = sqrt(2/(pi x)) (P cos chi - Q sin chi), chi = x - pi/4.
    // Coefficients a_k = prod_{j<=k} (2j-1)^2 / (k! 8^k); stop at the smallest term.
    double p = 1.0, q = 0.0;
    double coeff = 1.0;
    double last = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double f = (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
        if (f >= 1.0)
            break;
        coeff *= f;
        if (coeff > last)
            break;
        last = coeff;
        switch (k % 4) {
        case 1: q -= coeff; break;
        case 2: p -= coeff; break;
        case 3: q += coeff; break;
        default: p += coeff; break;
        }
        if (coeff < 1e-17)
            break;
    }
    const double s = std::sin(x);
    const double c = std::cos(x);
    const double cos_chi = (c + s) * std::numbers::sqrt2 * 0.5;
    const double sin_chi = (s - c) * std::numbers::sqrt2 * 0.5;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * cos_chi - q * sin_chi);
}

}  // namespace

double bessel_j0(double x, const Accuracy& acc)
{
    acc.validate();
    if (!std::isfinite(x))
        throw DomainError("bessel_j0: non-finite argument");
    x = std::fabs(x);
    return x <= kJ0SeriesLimit ? j0_series(x, acc) : j0_hankel(x);
}

long double bessel_j0_ext(long double x)
{
    if (!std::isfinite(x))
        throw DomainError("bessel_j0_ext: non-finite argument");
    x = std::fabs(x);
    if (x == 0.0L)
        return 1.0L;
    // Aliasing error of the M-point rule is ~2 J_{2M}(x); 2M - x must clear the
    // Airy transition zone (width ~x^{1/3}) by a wide margin.
    const long double cbrt = std::cbrt(x);
    const int m = static_cast<int>(std::ceil(x / 2.0L + 12.0L * cbrt + 30.0L));
    const long double h = std::numbers::pi_v<long double> / m;
    long double sum = 1.0L;  // theta = 0
    const int half = m / 2;
    for (int j = 1; j <= half; ++j) {
        const long double v = std::cos(x * std::sin(h * j));
        sum += (2 * j == m) ? v : 2.0L * v;
    }
    return sum / m;
}

void bessel_ik_scaled(double x, std::span<double> out, const Accuracy& acc)
{
    acc.validate();
    if (!(x >= 0.0) || !std::isfinite(x))
        throw DomainError("bessel_ik_scaled: argument must be finite and non-negative");
    if (out.empty())
        return;
    if (x == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = 1.0;
        return;
    }
    const std::size_t kmax = out.size() - 1;
    const std::size_t start = kmax + 40 + static_cast<std::size_t>(std::ceil(std::sqrt(80.0 * x)));
    if (start > 200000)
        throw AccuracyError("bessel_ik_scaled: argument too large for Miller recurrence", 0.0);

    std::vector<double> v(start + 2, 0.0);
    v[start + 1] = 0.0;
    v[start] = 1e-280;
    const double two_over_x = 2.0 / x;
    for (std::size_t k = start; k >= 1; --k) {
        v[k - 1] = static_cast<double>(k) * two_over_x * v[k] + v[k + 1];
        if (v[k - 1] > 1e250) {
            for (std::size_t j = k - 1; j <= start; ++j)
                v[j] *= 1e-250;
        }
    }
    // I0 + 2 sum I_k = e^x, so the scaled values sum to one.
    double norm = v[0];
    for (std::size_t k = 1; k <= start; ++k)
        norm += 2.0 * v[k];
    for (std::size_t k = 0; k <= kmax; ++k)
        out[k] = v[k] / norm;
}

double bessel_i0_scaled(double x, const Accuracy& acc)
{
    acc.validate();
    if (!std::isfinite(x))
        throw DomainError("bessel_i0_scaled: non-finite argument");
    x = std::fabs(x);
    if (x >= 40.0) {
        // Asymptotic series; the smallest term is ~e^{-2x}.
        double sum = 1.0, term = 1.0;
        for (int k = 1; k < 60; ++k) {
            const double next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
            if (next > term || next < 1e-18)
                break;
            term = next;
            sum += term;
        }
        return sum / std::sqrt(2.0 * std::numbers::pi * x);
    }
    double v[1];
    bessel_ik_scaled(x, v, acc);
    return v[0];
}

namespace detail {

double log_normal_sf(double x)
{
    if (x < 37.0)
        return std::log(0.5 * std::erfc(x * (std::numbers::sqrt2 / 2.0)));
    // Mills ratio expansion.
    const double z = 1.0 / (x * x);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 8; ++k) {
        term *= -(2.0 * k - 1.0) * z;
        sum += term;
    }
    return -0.5 * x * x - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(sum);
}

double log_normal_cdf(double x)
{
    if (x > 5.0)
        return std::log1p(-0.5 * std::erfc(x * (std::numbers::sqrt2 / 2.0)));
    return log_normal_sf(-x);
}

}  // namespace detail

}  // namespace fas

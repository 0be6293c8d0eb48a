#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace fas {

struct Accuracy {
    double abs_tol = 1e-12;
    int max_terms = 500;

    void validate() const;
};

// Bessel function of the first kind, order zero.
// Power series (summed in long double) for |x| <= 16, Hankel asymptotic beyond.
// Absolute error below 1e-14 on the whole real line.
double bessel_j0(double x, const Accuracy& acc = {});

// Extended-precision J0 used to assemble covariance matrices whose small
// eigenvalues sit far below double rounding noise. Periodic trapezoid rule on
// J0(x) = (1/pi) * integral_0^pi cos(x sin t) dt, exact to long double rounding.
long double bessel_j0_ext(long double x);

// Exponentially scaled modified Bessel functions exp(-x) I_k(x), k = 0..out.size()-1,
// for x >= 0. Miller backward recurrence normalised by I0 + 2 sum I_k = exp(x).
void bessel_ik_scaled(double x, std::span<double> out, const Accuracy& acc = {});

// exp(-|x|) I0(x).
double bessel_i0_scaled(double x, const Accuracy& acc = {});

// First-order Marcum Q function Q1(a, b), a, b >= 0.
double marcum_q1(double a, double b, const Accuracy& acc = {});

// Returned by log_one_minus_q1 when b == 0: the Rician CDF at 0 is exactly 0.
inline constexpr double kLogCertainMiss = -std::numeric_limits<double>::infinity();

// ln(1 - Q1(a, b)), evaluated from the complementary side directly so that
// values near 0 (Q1 near 1) keep full relative accuracy.
double log_one_minus_q1(double a, double b, const Accuracy& acc = {});

// ln Q1(a, b); keeps relative accuracy deep in the upper tail.
double log_marcum_q1(double a, double b, const Accuracy& acc = {});

// Both tails at once. Each member is accurate relative to itself.
struct MarcumPair {
    double log_q;           // ln Q1
    double log_one_minus_q; // ln(1 - Q1)
};
MarcumPair marcum_q1_pair(double a, double b, const Accuracy& acc = {});

// b values reused across many MarcumFixedA objects (a fixed radius grid seen
// by every Monte Carlo draw). Caches b^2/2 and exp(-b^2/2).
class MarcumGrid {
public:
    explicit MarcumGrid(std::vector<double> b);

    std::size_t size() const noexcept { return b_.size(); }
    double b(std::size_t i) const { return b_[i]; }

private:
    friend class MarcumFixedA;
    std::vector<double> b_, y_, p0_;
};

// 1 - Q1(a, b_i) for a fixed a and many b_i, with absolute error below
// acc.abs_tol. Meant for hot loops (Monte Carlo over latents, quadrature
// over a radius grid) where only absolute accuracy of the CDF matters.
// Uses the Poisson-difference representation Q1(a,b) = P(J >= I),
// J ~ Poisson(a^2/2), I ~ Poisson(b^2/2), when a is moderate, and a fixed
// Gauss-Legendre rule on the theta integral otherwise.
class MarcumFixedA {
public:
    explicit MarcumFixedA(double a, const Accuracy& acc = {});

    double a() const noexcept { return a_; }
    double one_minus_q1(double b) const;
    void one_minus_q1(std::span<const double> b, std::span<double> out) const;
    // Grid entries [first, first + out.size()).
    void one_minus_q1(const MarcumGrid& grid, std::size_t first, std::span<double> out) const;

private:
    void poisson_kernel(const double* b, const double* y, const double* p0, std::size_t n, double* out) const;
    double theta_integral(double b) const;

    double a_;
    Accuracy acc_;
    double gap_ = 0.0;
    bool poisson_ = false;
    // survival_[i] = P(J >= i) for the Poisson(a^2/2) variable.
    std::vector<double> survival_;
    std::vector<double> inv_;
};

// 1 - Q1(a_i, b) for a fixed b and many a_i. Relative accuracy is kept for
// b^2/2 <= 60 (Poisson sum over J with P(I > j) weights, all terms positive);
// above that the error is absolute, below acc.abs_tol. Entries with
// a_i - b beyond the tail cut are returned as 0.
class MarcumFixedB {
public:
    explicit MarcumFixedB(double b, const Accuracy& acc = {});

    double b() const noexcept { return b_; }
    void one_minus_q1(std::span<const double> a, std::span<double> out) const;

private:
    double b_;
    Accuracy acc_;
    double gap_ = 0.0;
    bool poisson_ = false;
    std::vector<double> tail_;  // P(I > j), I ~ Poisson(b^2/2)
};

namespace detail {
double log_normal_cdf(double x);  // ln Phi(x)
double log_normal_sf(double x);   // ln (1 - Phi(x))
}  // namespace detail

}  // namespace fas

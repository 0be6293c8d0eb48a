#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "fas/errors.hpp"
#include "fas/quadrature.hpp"
#include "fas/specfun.hpp"

#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
#define FAS_KERNEL_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define FAS_KERNEL_CLONES
#endif

namespace fas {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSeriesLimit = 400.0;  // ab above this goes to quadrature
constexpr int kThetaNodes = 32;
// MarcumFixedA / MarcumFixedB switch from the Poisson sums (cost ~ a^2/2 or
// b^2/2 terms) to complement_large above this a^2/2 or b^2/2. That integral
// needs both arguments beyond ~gap.
constexpr double kPoissonLambdaMax = 60.0;

double log_add(double x, double y)
{
    if (x < y)
        std::swap(x, y);
    if (y == kNegInf)
        return x;
    return x + std::log1p(std::exp(y - x));
}

// ln(1 - e^v) for v <= 0.
double log1m_exp(double v)
{
    if (v > -std::numbers::ln2)
        return std::log(-std::expm1(v));
    return std::log1p(-std::exp(v));
}

// 1 - Q1 for b <= 2 and ab <= 4, from I_k(x) = sum_m (x/2)^{2m+k} / (m!(m+k)!):
// (b/a)^k I_k(ab) = y^k sum_m (x^2/4)^m / (m!(m+k)!), y = b^2/2.
// Returns ln(1 - Q1). All terms positive.
double log_complement_small_b(double a, double b, const Accuracy& acc)
{
    const double y = 0.5 * b * b;
    const double z = 0.25 * (a * b) * (a * b);
    double outer = 0.0;
    double yk = 1.0;        // y^{k-1}
    double kfact = 1.0;     // k!
    for (int k = 1; k <= acc.max_terms; ++k) {
        kfact *= k;
        // inner(k) = sum_m z^m / (m! (m+k)!) scaled by k!
        double term = 1.0, inner = 1.0;
        for (int m = 1; m <= acc.max_terms; ++m) {
            term *= z / (static_cast<double>(m) * (m + k));
            inner += term;
            if (term < 1e-18 * inner)
                break;
        }
        const double contrib = yk * inner / kfact;
        outer += contrib;
        if (contrib < 1e-18 * outer)
            return -0.5 * (a * a + b * b) + std::log(y) + std::log(outer);
        yk *= y;
    }
    throw AccuracyError("marcum_q1: small-b series did not converge",
                        std::exp(-0.5 * (a * a + b * b)) * y * outer);
}

// Modified-Bessel series, ab <= kSeriesLimit.
MarcumPair series_pair(double a, double b, const Accuracy& acc)
{
    const double x = a * b;
    const double pre = -0.5 * (a - b) * (a - b);
    const bool complement_side = a >= b;
    const double rho = complement_side ? b / a : a / b;

    const int k_gauss = static_cast<int>(std::ceil(std::sqrt(80.0 * x))) + 40;
    int kmax = k_gauss;
    if (rho < 1.0) {
        const double k_geom = std::ceil(-41.5 / std::log(rho)) + 2.0;
        if (k_geom < kmax)
            kmax = static_cast<int>(k_geom);
    }
    const bool truncated = kmax > acc.max_terms;
    kmax = std::min(kmax, acc.max_terms);

    std::vector<double> ik(static_cast<std::size_t>(kmax) + 1);
    bessel_ik_scaled(x, ik, acc);

    double sum = 0.0;
    double rk = complement_side ? rho : 1.0;
    double last = 0.0;
    for (int k = complement_side ? 1 : 0; k <= kmax; ++k) {
        last = rk * ik[k];
        sum += last;
        rk *= rho;
    }
    if (truncated && last > 1e-17 * sum) {
        const double partial = std::exp(pre) * sum;
        throw AccuracyError("marcum_q1: Bessel series did not converge within max_terms",
                            complement_side ? 1.0 - partial : partial);
    }

    MarcumPair out{};
    if (complement_side) {
        // Q1 >= 1/2 whenever a >= b, so the complement is the small side.
        out.log_one_minus_q = (b <= 2.0 && x <= 4.0) ? log_complement_small_b(a, b, acc)
                                                     : pre + std::log(sum);
        out.log_q = log1m_exp(out.log_one_minus_q);
    } else {
        out.log_q = pre + std::log(sum);
        const double q = std::exp(out.log_q);
        if (q > 0.5 && b <= 2.0 && x <= 4.0)
            out.log_one_minus_q = log_complement_small_b(a, b, acc);
        else
            out.log_one_minus_q = std::log1p(-q);
    }
    return out;
}

// Conditional-Gaussian representation with Y = b sin(theta):
//   1 - Q1 = int_0^{pi/2} 2 b cos(t) phi(b sin t) [Phi(c - a) - Phi(-c - a)] dt
//   Q1     = 2 Phi(-b) + int_0^{pi/2} 2 b cos(t) phi(b sin t) [Phi(a - c) + Phi(-c - a)] dt
// with c = b cos(t). The integrand peaks at t = 0 and is monotone, so the
// range is cut where it has dropped by e^{-50}.
MarcumPair quadrature_pair(double a, double b)
{
    using detail::log_normal_cdf;
    const bool complement_side = a >= b;
    const double log_2b = std::log(2.0 * b);
    const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi);

    auto log_integrand = [&](double t) {
        const double c = b * std::cos(t);
        const double y = b * std::sin(t);
        double lv;
        if (complement_side) {
            const double l1 = log_normal_cdf(c - a);
            const double l2 = log_normal_cdf(-c - a);
            lv = l1 + log1m_exp(std::min(0.0, l2 - l1));
        } else {
            lv = log_add(log_normal_cdf(a - c), log_normal_cdf(-c - a));
        }
        return log_2b + std::log(std::cos(t)) + log_norm - 0.5 * y * y + lv;
    };

    const double half_pi = 0.5 * std::numbers::pi;
    const double peak = log_integrand(0.0);
    double t_max = half_pi;
    if (log_integrand(half_pi * (1.0 - 1e-9)) < peak - 50.0) {
        double lo = 0.0, hi = half_pi;
        for (int it = 0; it < 60 && hi - lo > 1e-12 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (log_integrand(mid) > peak - 50.0)
                lo = mid;
            else
                hi = mid;
        }
        t_max = hi;
    }

    static const QuadratureRule rule = gauss_legendre(kThetaNodes);
    std::array<double, kThetaNodes> terms{};
    double biggest = kNegInf;
    for (int i = 0; i < kThetaNodes; ++i) {
        const double t = 0.5 * t_max * (rule.nodes[i] + 1.0);
        terms[i] = log_integrand(t) + std::log(0.5 * t_max * rule.weights[i]);
        biggest = std::max(biggest, terms[i]);
    }
    double acc = 0.0;
    for (double v : terms)
        acc += std::exp(v - biggest);
    double log_small = biggest + std::log(acc);

    MarcumPair out{};
    if (complement_side) {
        out.log_one_minus_q = log_small;
        out.log_q = log1m_exp(log_small);
    } else {
        log_small = log_add(log_small, std::numbers::ln2 + detail::log_normal_cdf(-b));
        out.log_q = log_small;
        out.log_one_minus_q = log1m_exp(log_small);
    }
    return out;
}

void check_args(double a, double b, const char* who)
{
    if (std::isnan(a) || std::isnan(b) || a < 0.0 || b < 0.0)
        throw DomainError(std::string(who) + ": arguments must satisfy a >= 0, b >= 0");
}

// 1 - Q1 in the linear domain for a, b both beyond ~gap. With X, Y ~ N(0, 1),
//   1 - Q1 = P((a + X)^2 + Y^2 <= b^2) = E_Y[Phi(c - a) - Phi(-c - a)], c = sqrt(b^2 - Y^2).
// For b >= 8 the expectation is taken by 16-point Gauss-Hermite (even in Y, so
// 8 evaluations); below that by the theta integral. Phi(-c - a) is below
// 1e-19 in both uses and dropped.
double complement_large(double a, double b)
{
    constexpr double kInvSqrt2Pi = 0.3989422804014327;
    constexpr double kInvSqrt2 = 0.7071067811865476;
    if (b >= 8.0) {
        constexpr int kHalf = 8;
        struct HalfRule {
            std::array<double, kHalf> y2{}, w{};
        };
        static const HalfRule hr = [] {
            const QuadratureRule gh = gauss_hermite(2 * kHalf);
            HalfRule r;
            for (int i = 0; i < kHalf; ++i) {
                const double y = gh.nodes[kHalf + i];
                r.y2[i] = y * y;
                // Both signs of Y, and Phi(x) = erfc(-x / sqrt 2) / 2.
                r.w[i] = gh.weights[kHalf + i];
            }
            return r;
        }();
        const double b2 = b * b;
        double sum = 0.0;
        for (int i = 0; i < kHalf; ++i)
            sum += hr.w[i] * std::erfc((a - std::sqrt(b2 - hr.y2[i])) * kInvSqrt2);
        return std::clamp(sum, 0.0, 1.0);
    }
    static const QuadratureRule rule = gauss_legendre(kThetaNodes);
    const double half = 0.25 * std::numbers::pi;
    double sum = 0.0;
    for (int i = 0; i < kThetaNodes; ++i) {
        const double t = half * (rule.nodes[i] + 1.0);
        const double c = b * std::cos(t);
        const double y = b * std::sin(t);
        sum += rule.weights[i] * std::cos(t) * std::exp(-0.5 * y * y) * std::erfc((a - c) * kInvSqrt2);
    }
    return std::clamp(half * b * kInvSqrt2Pi * sum, 0.0, 1.0);
}

// Tail cut for absolute-accuracy callers: Q1(a,b) <= exp(-(b-a)^2/2) for b >= a
// and 1 - Q1(a,b) <= exp(-(a-b)^2/2) for b <= a.
double gap_for(double abs_tol)
{
    return std::sqrt(-2.0 * std::log(abs_tol * 1e-3));
}

}  // namespace

MarcumPair marcum_q1_pair(double a, double b, const Accuracy& acc)
{
    acc.validate();
    check_args(a, b, "marcum_q1");
    if (b == 0.0)
        return {0.0, kNegInf};
    if (std::isinf(b))
        return {kNegInf, 0.0};
    if (std::isinf(a))
        return {0.0, kNegInf};
    if (a == 0.0) {
        const double y = 0.5 * b * b;
        return {-y, log1m_exp(-y)};
    }
    if (a * b <= kSeriesLimit)
        return series_pair(a, b, acc);
    return quadrature_pair(a, b);
}

double marcum_q1(double a, double b, const Accuracy& acc)
{
    const MarcumPair p = marcum_q1_pair(a, b, acc);
    if (p.log_q > -std::numbers::ln2)
        return std::clamp(-std::expm1(p.log_one_minus_q), 0.0, 1.0);
    return std::clamp(std::exp(p.log_q), 0.0, 1.0);
}

double log_one_minus_q1(double a, double b, const Accuracy& acc)
{
    if (b == 0.0) {
        check_args(a, b, "log_one_minus_q1");
        return kLogCertainMiss;
    }
    return marcum_q1_pair(a, b, acc).log_one_minus_q;
}

double log_marcum_q1(double a, double b, const Accuracy& acc)
{
    return marcum_q1_pair(a, b, acc).log_q;
}

MarcumFixedA::MarcumFixedA(double a, const Accuracy& acc) : a_(a), acc_(acc)
{
    acc_.validate();
    if (!(a >= 0.0) || !std::isfinite(a))
        throw DomainError("MarcumFixedA: a must be finite and non-negative");
    gap_ = gap_for(acc_.abs_tol);
    const double lambda = 0.5 * a * a;
    if (lambda > kPoissonLambdaMax)
        return;
    poisson_ = true;
    const auto top = static_cast<std::size_t>(std::ceil(lambda + 12.0 * std::sqrt(lambda) + 25.0));
    std::vector<double> pmf(top + 1);
    pmf[0] = std::exp(-lambda);
    for (std::size_t i = 1; i <= top; ++i)
        pmf[i] = pmf[i - 1] * lambda / static_cast<double>(i);
    survival_.assign(top + 1, 0.0);
    double tail = 0.0;
    for (std::size_t i = top + 1; i-- > 0;) {
        tail += pmf[i];
        survival_[i] = tail;
    }
    std::size_t used = top + 1;
    while (used > 1 && survival_[used - 1] < 1e-19)
        --used;
    survival_.resize(used);
    inv_.resize(used);
    for (std::size_t i = 1; i < used; ++i)
        inv_[i] = 1.0 / static_cast<double>(i);
}

double MarcumFixedA::theta_integral(double b) const
{
    return complement_large(a_, b);
}

double MarcumFixedA::one_minus_q1(double b) const
{
    double out;
    one_minus_q1(std::span<const double>(&b, 1), std::span<double>(&out, 1));
    return out;
}

void MarcumFixedA::one_minus_q1(std::span<const double> b, std::span<double> out) const
{
    if (out.size() != b.size())
        throw DomainError("MarcumFixedA: output size mismatch");
    const std::size_t n = b.size();
    if (!poisson_) {
        for (std::size_t j = 0; j < n; ++j) {
            const double bj = b[j];
            if (std::isnan(bj) || bj < 0.0)
                throw DomainError("MarcumFixedA: b must be non-negative");
            if (bj - a_ > gap_)
                out[j] = 1.0;
            else if (a_ - bj > gap_)
                out[j] = 0.0;
            else
                out[j] = theta_integral(bj);
        }
        return;
    }

    constexpr std::size_t kBlock = 64;
    double y[kBlock], p0[kBlock];
    for (std::size_t j0 = 0; j0 < n; j0 += kBlock) {
        const std::size_t len = std::min(kBlock, n - j0);
        for (std::size_t l = 0; l < len; ++l) {
            const double bj = b[j0 + l];
            if (std::isnan(bj) || bj < 0.0)
                throw DomainError("MarcumFixedA: b must be non-negative");
            y[l] = std::min(0.5 * bj * bj, 700.0);
            p0[l] = std::exp(-y[l]);
        }
        poisson_kernel(b.data() + j0, y, p0, len, out.data() + j0);
    }
}

void MarcumFixedA::one_minus_q1(const MarcumGrid& grid, std::size_t first, std::span<double> out) const
{
    if (first + out.size() > grid.size())
        throw DomainError("MarcumFixedA: grid range out of bounds");
    if (!poisson_) {
        one_minus_q1(std::span<const double>(grid.b_.data() + first, out.size()), out);
        return;
    }
    poisson_kernel(grid.b_.data() + first, grid.y_.data() + first, grid.p0_.data() + first, out.size(),
                   out.data());
}

// Q1 = sum_i Poisson(i; b^2/2) P(J >= i); fixed trip count, vectorises across b.
FAS_KERNEL_CLONES void MarcumFixedA::poisson_kernel(const double* b, const double* y, const double* p0, std::size_t n,
                                  double* out) const
{
    constexpr std::size_t kLanes = 8;
    const std::size_t terms = survival_.size();
    for (std::size_t j0 = 0; j0 < n; j0 += kLanes) {
        const std::size_t lanes = std::min(kLanes, n - j0);
        double yl[kLanes], p[kLanes], q[kLanes];
        for (std::size_t l = 0; l < kLanes; ++l) {
            yl[l] = l < lanes ? y[j0 + l] : 0.0;
            p[l] = l < lanes ? p0[j0 + l] : 1.0;
            q[l] = p[l] * survival_[0];
        }
        for (std::size_t i = 1; i < terms; ++i) {
            const double s = survival_[i];
            const double inv = inv_[i];
            for (std::size_t l = 0; l < kLanes; ++l) {
                p[l] *= yl[l] * inv;
                q[l] += p[l] * s;
            }
        }
        for (std::size_t l = 0; l < lanes; ++l) {
            if (b[j0 + l] - a_ > gap_ || yl[l] >= 700.0)
                out[j0 + l] = 1.0;
            else
                out[j0 + l] = std::clamp(1.0 - q[l], 0.0, 1.0);
        }
    }
}

MarcumGrid::MarcumGrid(std::vector<double> b) : b_(std::move(b)), y_(b_.size()), p0_(b_.size())
{
    for (std::size_t i = 0; i < b_.size(); ++i) {
        if (std::isnan(b_[i]) || b_[i] < 0.0)
            throw DomainError("MarcumGrid: b must be non-negative");
        y_[i] = std::min(0.5 * b_[i] * b_[i], 700.0);
        p0_[i] = std::exp(-y_[i]);
    }
}

MarcumFixedB::MarcumFixedB(double b, const Accuracy& acc) : b_(b), acc_(acc)
{
    acc_.validate();
    if (!(b >= 0.0) || !std::isfinite(b))
        throw DomainError("MarcumFixedB: b must be finite and non-negative");
    gap_ = gap_for(acc_.abs_tol);
    const double y = 0.5 * b * b;
    if (y > kPoissonLambdaMax)
        return;
    poisson_ = true;
    // tail_[j] = P(I > j), I ~ Poisson(y), summed from the top so that small
    // values keep their relative accuracy.
    const auto top = static_cast<std::size_t>(std::ceil(y + 12.0 * std::sqrt(y) + 40.0));
    std::vector<double> pmf(top + 2);
    pmf[0] = std::exp(-y);
    for (std::size_t i = 1; i < pmf.size(); ++i)
        pmf[i] = pmf[i - 1] * y / static_cast<double>(i);
    tail_.assign(top + 1, 0.0);
    double t = 0.0;
    for (std::size_t j = top + 1; j-- > 0;) {
        t += pmf[j + 1];
        tail_[j] = t;
    }
    std::size_t used = top + 1;
    while (used > 1 && tail_[used - 1] == 0.0)
        --used;
    tail_.resize(used);
}

void MarcumFixedB::one_minus_q1(std::span<const double> a, std::span<double> out) const
{
    if (out.size() != a.size())
        throw DomainError("MarcumFixedB: output size mismatch");
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double aj = a[j];
        if (std::isnan(aj) || aj < 0.0)
            throw DomainError("MarcumFixedB: a must be non-negative");
        if (b_ == 0.0 || aj - b_ > gap_) {
            out[j] = 0.0;
            continue;
        }
        if (!poisson_) {
            out[j] = b_ - aj > gap_ ? 1.0 : complement_large(aj, b_);
            continue;
        }
        // 1 - Q1 = P(I > J) = sum_j P(J = j) P(I > j), J ~ Poisson(a^2/2).
        const double lambda = 0.5 * aj * aj;
        double p = std::exp(-lambda);
        double sum = p * tail_[0];
        for (std::size_t i = 1; i < tail_.size(); ++i) {
            p *= lambda / static_cast<double>(i);
            sum += p * tail_[i];
        }
        out[j] = std::clamp(sum, 0.0, 1.0);
    }
}

}  // namespace fas

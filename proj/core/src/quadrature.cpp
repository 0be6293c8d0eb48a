#include "fas/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>
#include <utility>

#include "fas/errors.hpp"
#include "fas/linalg.hpp"

namespace fas {

namespace {

using LD = long double;

// P_n(x) and P_n'(x).
std::pair<LD, LD> legendre(int n, LD x)
{
    LD p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
        const LD p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    const LD dp = n * (x * p1 - p0) / (x * x - 1);
    return {p1, dp};
}

// L_n(x) and L_{n-1}(x).
std::pair<LD, LD> laguerre(int n, LD x)
{
    LD l0 = 1, l1 = 1 - x;
    if (n == 0)
        return {l0, 0};
    for (int k = 1; k < n; ++k) {
        const LD l2 = ((2 * k + 1 - x) * l1 - k * l0) / (k + 1);
        l0 = l1;
        l1 = l2;
    }
    return {l1, l0};
}

// Kronrod 15 / Gauss 7 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double lo, hi, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel kronrod(const std::function<double(double)>& f, double lo, double hi)
{
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    const double fc = f(c);
    double gauss = fc * kWg[3];
    double kron = fc * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double s = f(c - dx) + f(c + dx);
        kron += kWgk[j] * s;
        if (j % 2 == 1)
            gauss += kWg[j / 2] * s;
    }
    return {lo, hi, kron * h, std::fabs((kron - gauss) * h)};
}

}  // namespace

QuadratureRule gauss_legendre(int n)
{
    if (n < 1)
        throw DomainError("gauss_legendre: n must be positive");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        LD x = std::cos(std::numbers::pi_v<LD> * (i + 0.75L) / (n + 0.5L));
        LD dp = 0;
        for (int it = 0; it < 100; ++it) {
            const auto [p, d] = legendre(n, x);
            dp = d;
            const LD dx = p / d;
            x -= dx;
            if (std::fabs(dx) < 1e-19L)
                break;
        }
        dp = legendre(n, x).second;
        const LD w = 2 / ((1 - x * x) * dp * dp);
        rule.nodes[i] = static_cast<double>(-x);
        rule.nodes[n - 1 - i] = static_cast<double>(x);
        rule.weights[i] = rule.weights[n - 1 - i] = static_cast<double>(w);
    }
    if (n % 2 == 1)
        rule.nodes[n / 2] = 0.0;
    return rule;
}

QuadratureRule gauss_laguerre(int n)
{
    if (n < 1)
        throw DomainError("gauss_laguerre: n must be positive");
    std::vector<LD> d(n), e(n, 0), first;
    for (int i = 0; i < n; ++i)
        d[i] = 2 * i + 1;
    for (int i = 1; i < n; ++i)
        e[i] = i;
    tridiagonal_ql(d, e, &first);
    std::sort(d.begin(), d.end());

    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        LD x = d[i];
        for (int it = 0; it < 20; ++it) {
            const auto [ln, lm] = laguerre(n, x);
            const LD deriv = n * (ln - lm) / x;
            const LD dx = ln / deriv;
            x -= dx;
            if (std::fabs(dx) <= 1e-18L * x)
                break;
        }
        const LD next = laguerre(n + 1, x).first;
        const LD w = x / ((n + 1) * (n + 1) * next * next);
        rule.nodes[i] = static_cast<double>(x);
        rule.weights[i] = static_cast<double>(w);
    }
    return rule;
}

QuadratureRule gauss_hermite(int n)
{
    if (n < 1)
        throw DomainError("gauss_hermite: n must be positive");
    std::vector<LD> d(n, 0), e(n, 0), first;
    for (int i = 1; i < n; ++i)
        e[i] = std::sqrt(static_cast<LD>(i));
    tridiagonal_ql(d, e, &first);
    std::sort(d.begin(), d.end());

    // h_k = He_k / sqrt(k!): h_{k+1} = (x h_k - sqrt(k) h_{k-1}) / sqrt(k+1).
    auto orthonormal = [n](LD x) {
        LD prev = 0, cur = 1;
        for (int k = 0; k < n - 1; ++k) {
            const LD next = (x * cur - std::sqrt(static_cast<LD>(k)) * prev) / std::sqrt(static_cast<LD>(k + 1));
            prev = cur;
            cur = next;
        }
        return std::pair<LD, LD>{cur, prev};  // h_{n-1}, h_{n-2}
    };
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        LD x = d[i];
        for (int it = 0; it < 20; ++it) {
            const auto [hm, hmm] = orthonormal(x);
            const LD hn = (x * hm - std::sqrt(static_cast<LD>(n - 1)) * hmm) / std::sqrt(static_cast<LD>(n));
            // h_n' = sqrt(n) h_{n-1}
            const LD dx = hn / (std::sqrt(static_cast<LD>(n)) * hm);
            x -= dx;
            if (std::fabs(dx) <= 1e-18L * std::max<LD>(1, std::fabs(x)))
                break;
        }
        const LD hm = orthonormal(x).first;
        rule.nodes[i] = static_cast<double>(x);
        rule.weights[i] = static_cast<double>(1 / (n * hm * hm));
    }
    return rule;
}

IntegrationResult integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                                     double rel_tol, double abs_tol, int max_panels)
{
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw DomainError("integrate_adaptive: bounds must be finite");
    if (!(rel_tol > 0.0) && !(abs_tol > 0.0))
        throw DomainError("integrate_adaptive: need a positive tolerance");
    IntegrationResult out;
    if (lo == hi)
        return out;

    std::priority_queue<Panel> panels;
    Panel whole = kronrod(f, lo, hi);
    out.evaluations = 15;
    double value = whole.value, error = whole.error;
    panels.push(whole);
    while (error > std::max(abs_tol, rel_tol * std::fabs(value))) {
        if (static_cast<int>(panels.size()) >= max_panels)
            throw AccuracyError("integrate_adaptive: panel limit reached, error " + std::to_string(error),
                                value, error);
        const Panel p = panels.top();
        panels.pop();
        const double mid = 0.5 * (p.lo + p.hi);
        const Panel left = kronrod(f, p.lo, mid);
        const Panel right = kronrod(f, mid, p.hi);
        out.evaluations += 30;
        value += left.value + right.value - p.value;
        error += left.error + right.error - p.error;
        panels.push(left);
        panels.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    value = 0.0;
    error = 0.0;
    while (!panels.empty()) {
        value += panels.top().value;
        error += panels.top().error;
        panels.pop();
    }
    out.value = value;
    out.error = error;
    return out;
}

}  // namespace fas

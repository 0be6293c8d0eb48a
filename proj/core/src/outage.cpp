#include "fas/outage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fas/errors.hpp"
#include "fas/parallel.hpp"
#include "fas/quadrature.hpp"
#include "fas/rng.hpp"
#include "fas/specfun.hpp"

namespace fas {

namespace {

constexpr std::size_t kMcChunk = 1024;
// Beyond u = 45 the exponential weight is below 3e-20 of the integral.
constexpr double kMaxU = 45.0;

void require_sorted_grid(std::span<const double> grid, const char* who)
{
    if (grid.empty())
        throw DomainError(std::string(who) + ": empty grid");
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (std::isnan(grid[j]) || grid[j] < 0.0)
            throw DomainError(std::string(who) + ": grid points must be non-negative");
        if (j > 0 && grid[j] < grid[j - 1])
            throw DomainError(std::string(who) + ": grid must be sorted");
    }
}

double tail_gap(const Accuracy& acc) { return std::sqrt(-2.0 * std::log(acc.abs_tol * 1e-3)); }

// Quadrature pieces for one stage-2 port factor at one radius:
//   F = head + sum_i weights[i] * (1 - Q1(a_i, beta))^R.
// head is the mass where 1 - Q1 is 1 to within the tail cut.
struct FactorPieces {
    double head = 0.0;
    std::vector<double> weights;
    std::vector<double> values;  // 1 - Q1 at the nodes
};

// alpha = sqrt(2 m)/tau, beta = sqrt(2) r/tau. The integrand
// e^{-u} (1 - Q1(alpha sqrt(u), beta))^R falls from ~1 to ~0 while
// a = alpha sqrt(u) crosses [beta - gap, beta + gap]; that window is integrated
// by Gauss-Legendre in a, the flat head exactly and the remainder by
// Gauss-Laguerre shifted to the window's end.
FactorPieces factor_pieces(double alpha, double beta, const QuadratureRule& legendre,
                           const QuadratureRule& laguerre, double gap, const MarcumFixedB& marcum)
{
    FactorPieces out;
    const double a_cap = alpha * std::sqrt(kMaxU);
    const double a_lo = std::min(std::max(0.0, beta - gap), a_cap);
    const double a_hi = std::min(beta + gap, a_cap);
    const double u_lo = (a_lo / alpha) * (a_lo / alpha);
    out.head = -std::expm1(-u_lo);

    const std::size_t n = legendre.nodes.size();
    std::vector<double> nodes;
    nodes.reserve(n + laguerre.nodes.size());
    out.weights.reserve(n + laguerre.nodes.size());
    if (a_hi > a_lo) {
        const double half = 0.5 * (a_hi - a_lo);
        const double mid = 0.5 * (a_hi + a_lo);
        for (std::size_t i = 0; i < n; ++i) {
            const double a = mid + half * legendre.nodes[i];
            const double u = (a / alpha) * (a / alpha);
            out.weights.push_back(half * legendre.weights[i] * std::exp(-u) * 2.0 * a / (alpha * alpha));
            nodes.push_back(a);
        }
    }
    const double u_hi = (a_hi / alpha) * (a_hi / alpha);
    if (u_hi < kMaxU) {
        const double shift = std::exp(-u_hi);
        for (std::size_t i = 0; i < laguerre.nodes.size(); ++i) {
            if (laguerre.weights[i] == 0.0)
                continue;
            out.weights.push_back(shift * laguerre.weights[i]);
            nodes.push_back(alpha * std::sqrt(u_hi + laguerre.nodes[i]));
        }
    }
    out.values.resize(nodes.size());
    marcum.one_minus_q1(nodes, out.values);
    return out;
}

double factor_value(const FactorPieces& p, int replication)
{
    double acc = p.head;
    for (std::size_t i = 0; i < p.weights.size(); ++i)
        acc += p.weights[i] * std::pow(p.values[i], replication);
    return std::clamp(acc, 0.0, 1.0);
}

struct Rules {
    QuadratureRule legendre, legendre2, laguerre, laguerre2;
};

const Rules& rules_for(int nodes)
{
    // Small fixed set of node counts in practice; built once per count.
    static thread_local std::vector<std::pair<int, Rules>> cache;
    for (const auto& [n, r] : cache)
        if (n == nodes)
            return r;
    cache.emplace_back(nodes, Rules{gauss_legendre(nodes), gauss_legendre(2 * nodes), gauss_laguerre(nodes),
                                    gauss_laguerre(2 * nodes)});
    return cache.back().second;
}

void check_stage2_model(const Stage1Model& m)
{
    for (std::size_t k = 0; k < m.ports(); ++k)
        if (!(m.port_residual_std[k] > 0.0) || !(m.port_mixture_power[k] > 0.0))
            throw ConfigError("stage-2 CDF: port " + std::to_string(k + 1) +
                              " has a vanishing residual or mixture power");
}

// Log of one port factor for each requested R, with the node-doubling check.
void port_log_factors(const Stage1Model& m, std::size_t k, double r, std::span<const int> reps,
                      const QuadratureSpec& quad, std::span<double> out_log)
{
    if (r == 0.0) {
        std::fill(out_log.begin(), out_log.end(), kLogCertainMiss);
        return;
    }
    if (std::isinf(r)) {
        std::fill(out_log.begin(), out_log.end(), 0.0);
        return;
    }
    const Accuracy acc{};
    const double gap = tail_gap(acc);
    const double tau = m.port_residual_std[k];
    const double alpha = std::sqrt(2.0 * m.port_mixture_power[k]) / tau;
    const double beta = std::numbers::sqrt2 * r / tau;

    if (quad.scheme == QuadScheme::adaptive) {
        const double a_cap = alpha * std::sqrt(kMaxU);
        const double a_lo = std::min(std::max(0.0, beta - gap), a_cap);
        const double a_hi = std::min(beta + gap, a_cap);
        const double head = -std::expm1(-(a_lo / alpha) * (a_lo / alpha));
        for (std::size_t i = 0; i < reps.size(); ++i) {
            const int rep = reps[i];
            auto f = [&](double a) {
                const double u = (a / alpha) * (a / alpha);
                return std::exp(-u) * 2.0 * a / (alpha * alpha) *
                       std::pow(std::exp(log_one_minus_q1(a, beta, acc)), rep);
            };
            double body = 0.0;
            if (a_hi > a_lo)
                body = integrate_adaptive(f, a_lo, a_hi, quad.rel_tol, 1e-300).value;
            out_log[i] = std::log(std::clamp(head + body, 0.0, 1.0));
        }
        return;
    }

    const Rules& rules = rules_for(quad.nodes);
    const MarcumFixedB marcum(beta, acc);
    const FactorPieces coarse = factor_pieces(alpha, beta, rules.legendre, rules.laguerre, gap, marcum);
    const FactorPieces fine = factor_pieces(alpha, beta, rules.legendre2, rules.laguerre2, gap, marcum);
    for (std::size_t i = 0; i < reps.size(); ++i) {
        const double f1 = factor_value(coarse, reps[i]);
        const double f2 = factor_value(fine, reps[i]);
        if (std::fabs(f1 - f2) > quad.rel_tol * f2 + 1e-15)
            throw AccuracyError("stage-2 quadrature: port " + std::to_string(k + 1) + ", r = " + std::to_string(r) +
                                    ": " + std::to_string(quad.nodes) + " nodes give " + std::to_string(f1) +
                                    ", " + std::to_string(2 * quad.nodes) + " give " + std::to_string(f2),
                                f2, f1);
        out_log[i] = std::log(f2);
    }
}

}  // namespace

EmpiricalCdf EmpiricalCdf::from_samples(std::vector<double> samples)
{
    if (samples.empty())
        throw DomainError("empirical CDF: no samples");
    std::sort(samples.begin(), samples.end());
    return EmpiricalCdf{std::move(samples)};
}

double EmpiricalCdf::operator()(double r) const
{
    const auto it = std::upper_bound(sorted_samples.begin(), sorted_samples.end(), r);
    return static_cast<double>(it - sorted_samples.begin()) / static_cast<double>(count());
}

double EmpiricalCdf::left(double r) const
{
    const auto it = std::lower_bound(sorted_samples.begin(), sorted_samples.end(), r);
    return static_cast<double>(it - sorted_samples.begin()) / static_cast<double>(count());
}

double EmpiricalCdf::quantile(double p) const
{
    if (!(p >= 0.0 && p <= 1.0))
        throw DomainError("quantile: p must lie in [0, 1]");
    const auto n = static_cast<double>(count());
    const auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(p * n) - 1.0));
    return sorted_samples[std::min(idx, count() - 1)];
}

EmpiricalCdf empirical_cdf(const ChannelSampleBatch& batch)
{
    if (batch.draws == 0 || batch.ports == 0)
        throw DomainError("empirical_cdf: empty batch");
    return EmpiricalCdf::from_samples(batch.row_max());
}

OutageQuery OutageQuery::from_config(const FasConfig& config)
{
    config.validate();
    OutageQuery q;
    q.config = config;
    q.threshold_magnitude = config.sigma() * std::pow(10.0, config.snr_target_db / 20.0);
    return q;
}

void QuadratureSpec::validate() const
{
    if (nodes < 8)
        throw DomainError("quadrature: nodes must be at least 8");
    if (!(rel_tol > 0.0))
        throw DomainError("quadrature: rel_tol must be positive");
}

std::vector<McEstimate> stage1_cdf_curve(const Stage1Model& model, std::span<const double> r_grid,
                                         std::size_t mc_draws, std::uint64_t seed, unsigned threads,
                                         double negligible)
{
    if (!(negligible >= 0.0 && negligible < 1.0))
        throw DomainError("stage1_cdf: negligible must lie in [0, 1)");
    require_sorted_grid(r_grid, "stage1_cdf");
    if (mc_draws < 100)
        throw DomainError("stage1_cdf: mc_draws must be at least 100");
    const std::size_t ports = model.ports();
    const auto dims = static_cast<std::size_t>(model.eps_rank);
    const std::size_t points = r_grid.size();
    const Accuracy acc{};
    const double gap = tail_gap(acc);

    // b-side Poisson weights depend only on (port, radius); shared by all draws.
    std::vector<MarcumGrid> port_grids;
    port_grids.reserve(ports);
    for (std::size_t k = 0; k < ports; ++k) {
        std::vector<double> b(points);
        for (std::size_t j = 0; j < points; ++j)
            b[j] = std::numbers::sqrt2 * r_grid[j] / model.port_residual_std[k];
        port_grids.emplace_back(std::move(b));
    }

    const std::size_t chunks = (mc_draws + kMcChunk - 1) / kMcChunk;
    std::vector<std::vector<double>> sums(chunks), squares(chunks);
    parallel_for(
        chunks,
        [&](std::size_t c) {
            std::vector<double> sum(points, 0.0), sq(points, 0.0);
            std::vector<double> a(dims), b(dims), ak(ports), lo(ports), hi(ports);
            // Product over ports kept as mantissa * 2^exponent so that it
            // cannot underflow before the final rescale.
            std::vector<double> prod(points), vals(points);
            std::vector<int> expo(points);
            const std::size_t end = std::min(mc_draws, (c + 1) * kMcChunk);
            for (std::size_t s = c * kMcChunk; s < end; ++s) {
                LatentNormal gen(seed, Stream::stage1_mc, s);
                for (std::size_t l = 0; l < dims; ++l)
                    a[l] = gen();
                for (std::size_t l = 0; l < dims; ++l)
                    b[l] = gen();
                double r_floor = 0.0;
                for (std::size_t k = 0; k < ports; ++k) {
                    const double* load = &model.loadings(k, 0);
                    double re = 0.0, im = 0.0;
                    for (std::size_t l = 0; l < dims; ++l) {
                        re += load[l] * a[l];
                        im += load[l] * b[l];
                    }
                    const double tau = model.port_residual_std[k];
                    ak[k] = std::sqrt(2.0 * (re * re + im * im)) / tau;
                    // Radii where this port's factor is 0 (below lo) or 1 (above hi).
                    lo[k] = tau * (ak[k] - gap) / std::numbers::sqrt2;
                    hi[k] = tau * (ak[k] + gap) / std::numbers::sqrt2;
                    r_floor = std::max(r_floor, lo[k]);
                }
                const auto first = static_cast<std::size_t>(
                    std::lower_bound(r_grid.begin(), r_grid.end(), r_floor) - r_grid.begin());
                if (first == points)
                    continue;
                std::fill(prod.begin() + static_cast<std::ptrdiff_t>(first), prod.end(), 1.0);
                std::fill(expo.begin() + static_cast<std::ptrdiff_t>(first), expo.end(), 0);
                std::size_t live = first;
                for (std::size_t k = 0; k < ports && live < points; ++k) {
                    const auto last = static_cast<std::size_t>(
                        std::upper_bound(r_grid.begin(), r_grid.end(), hi[k]) - r_grid.begin());
                    if (last <= live)
                        continue;
                    const std::size_t len = last - live;
                    const MarcumFixedA fa(ak[k], acc);
                    fa.one_minus_q1(port_grids[k], live, std::span<double>(vals.data(), len));
                    for (std::size_t j = 0; j < len; ++j) {
                        double& p = prod[live + j];
                        p *= vals[j];
                        if (p < 0x1p-900 && p > 0.0) {
                            int e;
                            p = std::frexp(p, &e);
                            expo[live + j] += e;
                        }
                    }
                    // Each factor is a CDF in r, so the product is increasing
                    // along the grid and the dropped points form a prefix.
                    if (negligible > 0.0) {
                        while (live < points && std::ldexp(prod[live], expo[live]) < negligible) {
                            prod[live] = 0.0;
                            expo[live] = 0;
                            ++live;
                        }
                    }
                }
                for (std::size_t j = first; j < points; ++j) {
                    const double v = std::ldexp(prod[j], expo[j]);
                    sum[j] += v;
                    sq[j] += v * v;
                }
            }
            sums[c] = std::move(sum);
            squares[c] = std::move(sq);
        },
        threads);

    std::vector<McEstimate> out(points);
    const auto n = static_cast<double>(mc_draws);
    for (std::size_t j = 0; j < points; ++j) {
        double s = 0.0, q = 0.0;
        for (std::size_t c = 0; c < chunks; ++c) {
            s += sums[c][j];
            q += squares[c][j];
        }
        const double mean = s / n;
        const double var = std::max(0.0, (q / n - mean * mean) * n / (n - 1.0));
        out[j] = {mean, std::sqrt(var / n)};
    }
    return out;
}

McEstimate stage1_cdf(const Stage1Model& model, double r, std::size_t mc_draws, std::uint64_t seed,
                      unsigned threads)
{
    const double grid[1] = {r};
    return stage1_cdf_curve(model, grid, mc_draws, seed, threads, 0.0)[0];
}

McEstimate stage1_outage(const Stage1Model& model, const OutageQuery& query, std::size_t mc_draws,
                         std::uint64_t seed, unsigned threads)
{
    return stage1_cdf(model, query.threshold_magnitude, mc_draws, seed, threads);
}

std::vector<std::vector<double>> stage2_cdf_curves(const Stage1Model& model, std::span<const int> replications,
                                                   std::span<const double> r_grid, const QuadratureSpec& quad,
                                                   unsigned threads)
{
    quad.validate();
    require_sorted_grid(r_grid, "stage2_cdf");
    if (replications.empty())
        throw DomainError("stage2_cdf: no replication counts");
    for (int rep : replications)
        if (rep < 1)
            throw ConfigError("stage2_cdf: replication must be at least 1");
    check_stage2_model(model);

    const std::size_t ports = model.ports();
    const std::size_t points = r_grid.size();
    const std::size_t nrep = replications.size();
    // log_factor[k][j * nrep + i]
    std::vector<std::vector<double>> log_factor(ports, std::vector<double>(points * nrep));
    parallel_for(
        ports,
        [&](std::size_t k) {
            for (std::size_t j = 0; j < points; ++j)
                port_log_factors(model, k, r_grid[j], replications, quad,
                                 std::span<double>(log_factor[k].data() + j * nrep, nrep));
        },
        threads);

    std::vector<std::vector<double>> out(nrep, std::vector<double>(points));
    for (std::size_t i = 0; i < nrep; ++i) {
        for (std::size_t j = 0; j < points; ++j) {
            double total = 0.0;
            for (std::size_t k = 0; k < ports; ++k)
                total += log_factor[k][j * nrep + i];
            out[i][j] = std::exp(total / replications[i]);
        }
    }
    return out;
}

double stage2_cdf(const Stage2Model& model, double r, const QuadratureSpec& quad)
{
    const double grid[1] = {r};
    const int reps[1] = {model.replication};
    return stage2_cdf_curves(model.stage1, reps, grid, quad, 1)[0][0];
}

double stage2_outage(const Stage2Model& model, const OutageQuery& query, const QuadratureSpec& quad)
{
    return stage2_cdf(model, query.threshold_magnitude, quad);
}

double reference_log_cdf_fas1(const FasConfig& config, double r, const QuadratureSpec& quad)
{
    config.validate();
    quad.validate();
    if (config.n_ports < 2)
        throw ConfigError("reference model needs N >= 2");
    if (std::isnan(r) || r < 0.0)
        throw DomainError("reference CDF: r must be non-negative");
    if (r == 0.0)
        return kLogCertainMiss;

    const std::vector<long double> col = jake_first_column(config);
    const std::size_t n = col.size();
    std::vector<double> mu(n), scale(n);
    for (std::size_t k = 1; k < n; ++k) {
        mu[k] = static_cast<double>(col[k] / static_cast<long double>(config.sigma2));
        const double rest = 1.0 - mu[k] * mu[k];
        if (!(rest > 0.0))
            throw DomainError("reference model: |mu_k| = 1 at port " + std::to_string(k + 1));
        scale[k] = std::sqrt(rest);
    }
    const double z_top = r * r / config.sigma2;
    if (std::isinf(z_top))
        return 0.0;
    const double b_base = std::numbers::sqrt2 * r / config.sigma();

    auto log_integrand = [&](double z) {
        double acc = -z;
        const double root = std::sqrt(2.0 * z);
        for (std::size_t k = 1; k < n; ++k) {
            acc += log_one_minus_q1(std::fabs(mu[k]) * root / scale[k], b_base / scale[k]);
            if (acc == kLogCertainMiss)
                break;
        }
        return acc;
    };

    double shift = kLogCertainMiss;
    constexpr int kProbe = 64;
    for (int i = 0; i <= kProbe; ++i)
        shift = std::max(shift, log_integrand(z_top * i / kProbe));
    if (shift == kLogCertainMiss)
        return kLogCertainMiss;
    const auto res = integrate_adaptive([&](double z) { return std::exp(log_integrand(z) - shift); }, 0.0, z_top,
                                        quad.rel_tol, 0.0, 20000);
    if (!(res.value > 0.0))
        return kLogCertainMiss;
    return shift + std::log(res.value);
}

double reference_cdf_fas1(const FasConfig& config, double r, const QuadratureSpec& quad)
{
    return std::exp(reference_log_cdf_fas1(config, r, quad));
}

double reference_outage_fas1(const FasConfig& config, const OutageQuery& query, const QuadratureSpec& quad)
{
    return reference_cdf_fas1(config, query.threshold_magnitude, quad);
}

double rayleigh_max_cdf(double r, double sigma2, int ports)
{
    if (!(sigma2 > 0.0) || ports < 1)
        throw DomainError("rayleigh_max_cdf: sigma2 > 0 and ports >= 1 required");
    if (!(r > 0.0))
        return 0.0;
    const double single = -std::expm1(-r * r / sigma2);
    return std::pow(single, ports);
}

double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b)
{
    const auto& x = a.sorted_samples;
    const auto& y = b.sorted_samples;
    const auto na = static_cast<double>(x.size());
    const auto nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    while (i < x.size() || j < y.size()) {
        double v;
        if (j == y.size() || (i < x.size() && x[i] <= y[j]))
            v = x[i];
        else
            v = y[j];
        while (i < x.size() && x[i] == v)
            ++i;
        while (j < y.size() && y[j] == v)
            ++j;
        best = std::max(best, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

double ks_distance(const EmpiricalCdf& a, std::span<const double> grid, std::span<const double> values)
{
    if (grid.size() != values.size() || grid.empty())
        throw DomainError("ks_distance: grid and values must match and be non-empty");
    require_sorted_grid(grid, "ks_distance");
    double best = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        best = std::max(best, std::fabs(a(grid[j]) - values[j]));
        best = std::max(best, std::fabs(a.left(grid[j]) - values[j]));
    }
    const auto& xs = a.sorted_samples;
    const auto n = static_cast<double>(xs.size());
    auto it = std::lower_bound(xs.begin(), xs.end(), grid.front());
    std::size_t g = 0;
    for (; it != xs.end() && *it <= grid.back(); ++it) {
        const double x = *it;
        while (g + 1 < grid.size() && grid[g + 1] < x)
            ++g;
        double f;
        if (g + 1 >= grid.size() || grid[g + 1] == grid[g]) {
            f = values[g];
        } else {
            const double t = std::clamp((x - grid[g]) / (grid[g + 1] - grid[g]), 0.0, 1.0);
            f = values[g] + t * (values[g + 1] - values[g]);
        }
        const auto i = static_cast<double>(it - xs.begin());
        best = std::max(best, std::fabs(i / n - f));
        best = std::max(best, std::fabs((i + 1.0) / n - f));
    }
    return best;
}

double ks_distance(std::span<const double> fa, std::span<const double> fb)
{
    if (fa.size() != fb.size())
        throw DomainError("ks_distance: size mismatch");
    double best = 0.0;
    for (std::size_t j = 0; j < fa.size(); ++j)
        best = std::max(best, std::fabs(fa[j] - fb[j]));
    return best;
}

std::vector<double> ks_grid(const EmpiricalCdf& oracle, std::size_t points)
{
    if (points < 2)
        throw DomainError("ks_grid: need at least two points");
    const double top = oracle.quantile(0.9999);
    std::vector<double> grid(points);
    for (std::size_t j = 0; j < points; ++j)
        grid[j] = top * static_cast<double>(j) / static_cast<double>(points - 1);
    return grid;
}

double dkw_bound(std::size_t n, double alpha)
{
    if (n == 0 || !(alpha > 0.0 && alpha < 1.0))
        throw DomainError("dkw_bound: n >= 1 and 0 < alpha < 1 required");
    return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

}  // namespace fas

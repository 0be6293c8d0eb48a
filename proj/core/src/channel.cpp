#include "fas/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fas/errors.hpp"
#include "fas/parallel.hpp"
#include "fas/rng.hpp"

namespace fas {

namespace {

constexpr std::size_t kChunk = 4096;

// Loadings sqrt(s_l) u_{k,l} stored latent-major (dims x ports) so the
// per-draw mixing is a run of axpy updates over contiguous port vectors.
struct Loadings {
    std::size_t ports = 0;
    std::size_t dims = 0;
    std::vector<double> values;

    const double* latent(std::size_t l) const { return values.data() + l * ports; }
};

Loadings exact_loadings(const SpectralModel& spectral)
{
    const double cut = kExactEigenCutoff * spectral.config.sigma2;
    std::size_t m = 0;
    while (m < spectral.size() && spectral.eigenvalues[m] > cut)
        ++m;
    Loadings out{spectral.size(), m, std::vector<double>(spectral.size() * m)};
    for (std::size_t l = 0; l < m; ++l)
        for (std::size_t k = 0; k < out.ports; ++k)
            out.values[l * out.ports + k] = std::sqrt(spectral.eigenvalues[l]) * spectral.eigenvectors(k, l);
    return out;
}

Loadings stage1_loadings(const Stage1Model& m)
{
    const auto dims = static_cast<std::size_t>(m.eps_rank);
    Loadings out{m.ports(), dims, std::vector<double>(m.ports() * dims)};
    for (std::size_t l = 0; l < dims; ++l)
        for (std::size_t k = 0; k < out.ports; ++k)
            out.values[l * out.ports + k] = m.loadings(k, l);
    return out;
}

// Per-thread scratch for one draw.
struct Scratch {
    std::vector<double> a, b, re, im;

    void fit(std::size_t dims, std::size_t ports)
    {
        a.resize(dims);
        b.resize(dims);
        re.resize(ports);
        im.resize(ports);
    }
};

Scratch& scratch(std::size_t dims, std::size_t ports)
{
    thread_local Scratch s;
    s.fit(dims, ports);
    return s;
}

// re/im <- sum_l loadings_l * (a_l, b_l)
void mix(const Loadings& load, const double* a, const double* b, double* re, double* im)
{
    std::fill(re, re + load.ports, 0.0);
    std::fill(im, im + load.ports, 0.0);
    for (std::size_t l = 0; l < load.dims; ++l) {
        const double* col = load.latent(l);
        const double al = a[l], bl = b[l];
        for (std::size_t k = 0; k < load.ports; ++k) {
            re[k] += col[k] * al;
            im[k] += col[k] * bl;
        }
    }
}

// Runs emit(s, out_row) for every draw, chunked across threads. Each draw owns
// a disjoint slice of `out` so the result does not depend on scheduling.
template <class Emit>
void for_draws(std::size_t draws, std::size_t width, std::vector<double>& out, unsigned threads, Emit emit)
{
    out.assign(draws * width, 0.0);
    const std::size_t chunks = (draws + kChunk - 1) / kChunk;
    parallel_for(
        chunks,
        [&](std::size_t c) {
            const std::size_t end = std::min(draws, (c + 1) * kChunk);
            for (std::size_t s = c * kChunk; s < end; ++s)
                emit(s, out.data() + s * width);
        },
        threads);
}

void require_draws(std::size_t draws)
{
    if (draws < 1)
        throw DomainError("sampler: draws must be at least 1");
}

// One exact draw into sc.re / sc.im.
void exact_draw(const Loadings& load, std::uint64_t seed, std::size_t s, Scratch& sc)
{
    LatentNormal gen(seed, Stream::exact, s);
    for (std::size_t l = 0; l < load.dims; ++l) {
        sc.a[l] = gen();
        sc.b[l] = gen();
    }
    mix(load, sc.a.data(), sc.b.data(), sc.re.data(), sc.im.data());
}

// One stage-1 column into sc.re / sc.im: latents, then residuals per port.
void stage1_column(const Stage1Model& m, const Loadings& load, LatentNormal& gen, Scratch& sc)
{
    for (std::size_t l = 0; l < load.dims; ++l)
        sc.a[l] = gen();
    for (std::size_t l = 0; l < load.dims; ++l)
        sc.b[l] = gen();
    mix(load, sc.a.data(), sc.b.data(), sc.re.data(), sc.im.data());
    for (std::size_t k = 0; k < load.ports; ++k) {
        const double tau = m.port_residual_std[k];
        sc.re[k] += tau * gen();
        sc.im[k] += tau * gen();
    }
}

void magnitudes(const Scratch& sc, std::size_t ports, double* out)
{
    for (std::size_t k = 0; k < ports; ++k)
        out[k] = std::sqrt(sc.re[k] * sc.re[k] + sc.im[k] * sc.im[k]);
}

double max_magnitude(const Scratch& sc, std::size_t ports)
{
    double best = 0.0;
    for (std::size_t k = 0; k < ports; ++k)
        best = std::max(best, sc.re[k] * sc.re[k] + sc.im[k] * sc.im[k]);
    return std::sqrt(best);
}

std::vector<double> reference_mu(const SpectralModel& spectral)
{
    const std::size_t n = spectral.size();
    std::vector<double> mu(n);
    for (std::size_t k = 0; k < n; ++k)
        mu[k] = std::clamp(spectral.matrix(0, k) / spectral.config.sigma2, -1.0, 1.0);
    mu[0] = 1.0;
    return mu;
}

void reference_draw(const std::vector<double>& mu, double sigma, std::uint64_t seed, std::size_t s, double* out)
{
    LatentNormal gen(seed, Stream::reference, s);
    const double a = gen();
    const double b = gen();
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double x = gen();
        const double y = gen();
        const double res = sigma * std::sqrt(std::max(0.0, 1.0 - mu[k] * mu[k]));
        const double re = res * x + sigma * mu[k] * a;
        const double im = res * y + sigma * mu[k] * b;
        out[k] = std::sqrt(re * re + im * im);
    }
}

}  // namespace

Stage1Model make_stage1_model(std::shared_ptr<const SpectralModel> spectral, int eps_rank)
{
    if (!spectral)
        throw ConfigError("stage-1 model: null spectral model");
    const int n = static_cast<int>(spectral->size());
    if (eps_rank < 1 || eps_rank >= n)
        throw ConfigError("stage-1 model: eps_rank must satisfy 1 <= eps_rank < N (got " +
                          std::to_string(eps_rank) + ", N = " + std::to_string(n) + ")");
    Stage1Model m;
    m.spectral = spectral;
    m.eps_rank = eps_rank;
    const auto dims = static_cast<std::size_t>(eps_rank);
    const auto ports = static_cast<std::size_t>(n);
    const double sigma2 = spectral->config.sigma2;

    m.retained_values.assign(spectral->eigenvalues.begin(), spectral->eigenvalues.begin() + eps_rank);
    m.loadings = Matrix(ports, dims);
    m.port_mixture_power.resize(ports);
    m.port_residual_var.resize(ports);
    m.port_residual_std.resize(ports);
    for (std::size_t k = 0; k < ports; ++k) {
        for (std::size_t l = 0; l < dims; ++l)
            m.loadings(k, l) = std::sqrt(m.retained_values[l]) * spectral->eigenvectors(k, l);
        // The tail sum is small and summed directly; sigma2 minus the head
        // would lose it to cancellation.
        double tail = 0.0;
        for (std::size_t l = dims; l < ports; ++l) {
            const double u = spectral->eigenvectors(k, l);
            tail += spectral->eigenvalues[l] * u * u;
        }
        if (!(tail > 0.0))
            throw ConfigError("stage-1 model: residual variance of port " + std::to_string(k + 1) +
                              " vanishes; eps_rank too large");
        m.port_residual_var[k] = tail;
        m.port_residual_std[k] = std::sqrt(tail);
        m.port_mixture_power[k] = sigma2 - tail;
    }
    return m;
}

Stage2Model make_stage2_model(Stage1Model stage1, int replication)
{
    if (replication < 1)
        throw ConfigError("stage-2 model: replication must be at least 1");
    return {std::move(stage1), replication};
}

std::vector<double> ChannelSampleBatch::row_max() const
{
    std::vector<double> out(draws);
    for (std::size_t s = 0; s < draws; ++s) {
        const auto r = row(s);
        out[s] = *std::max_element(r.begin(), r.end());
    }
    return out;
}

ChannelSampleBatch sample_exact(const SpectralModel& spectral, std::size_t draws, std::uint64_t seed)
{
    require_draws(draws);
    const Loadings load = exact_loadings(spectral);
    ChannelSampleBatch batch{draws, load.ports, {}, seed, ModelTag::exact};
    for_draws(draws, load.ports, batch.gains, 0, [&](std::size_t s, double* out) {
        Scratch& sc = scratch(load.dims, load.ports);
        exact_draw(load, seed, s, sc);
        magnitudes(sc, load.ports, out);
    });
    return batch;
}

std::vector<double> sample_exact_complex(const SpectralModel& spectral, std::size_t draws, std::uint64_t seed)
{
    require_draws(draws);
    const Loadings load = exact_loadings(spectral);
    std::vector<double> out;
    for_draws(draws, 2 * load.ports, out, 0, [&](std::size_t s, double* row) {
        Scratch& sc = scratch(load.dims, load.ports);
        exact_draw(load, seed, s, sc);
        for (std::size_t k = 0; k < load.ports; ++k) {
            row[2 * k] = sc.re[k];
            row[2 * k + 1] = sc.im[k];
        }
    });
    return out;
}

std::vector<double> sample_exact_max(const SpectralModel& spectral, std::size_t draws, std::uint64_t seed,
                                     unsigned threads)
{
    require_draws(draws);
    const Loadings load = exact_loadings(spectral);
    std::vector<double> out;
    for_draws(draws, 1, out, threads, [&](std::size_t s, double* dst) {
        Scratch& sc = scratch(load.dims, load.ports);
        exact_draw(load, seed, s, sc);
        *dst = max_magnitude(sc, load.ports);
    });
    return out;
}

ChannelSampleBatch sample_stage1(const Stage1Model& model, std::size_t draws, std::uint64_t seed)
{
    require_draws(draws);
    const Loadings load = stage1_loadings(model);
    ChannelSampleBatch batch{draws, model.ports(), {}, seed, ModelTag::stage1};
    for_draws(draws, model.ports(), batch.gains, 0, [&](std::size_t s, double* out) {
        Scratch& sc = scratch(load.dims, load.ports);
        LatentNormal gen(seed, Stream::stage1, s);
        stage1_column(model, load, gen, sc);
        magnitudes(sc, load.ports, out);
    });
    return batch;
}

std::vector<double> sample_stage1_max(const Stage1Model& model, std::size_t draws, std::uint64_t seed,
                                      unsigned threads)
{
    require_draws(draws);
    const Loadings load = stage1_loadings(model);
    std::vector<double> out;
    for_draws(draws, 1, out, threads, [&](std::size_t s, double* dst) {
        Scratch& sc = scratch(load.dims, load.ports);
        LatentNormal gen(seed, Stream::stage1, s);
        stage1_column(model, load, gen, sc);
        *dst = max_magnitude(sc, load.ports);
    });
    return out;
}

std::vector<double> sample_latent_energy(const Stage1Model& model, std::size_t draws, std::uint64_t seed)
{
    require_draws(draws);
    const Loadings load = stage1_loadings(model);
    std::vector<double> out;
    for_draws(draws, model.ports(), out, 0, [&](std::size_t s, double* row) {
        Scratch& sc = scratch(load.dims, load.ports);
        LatentNormal gen(seed, Stream::stage1, s);
        for (std::size_t l = 0; l < load.dims; ++l)
            sc.a[l] = gen();
        for (std::size_t l = 0; l < load.dims; ++l)
            sc.b[l] = gen();
        mix(load, sc.a.data(), sc.b.data(), sc.re.data(), sc.im.data());
        for (std::size_t k = 0; k < load.ports; ++k)
            row[k] = sc.re[k] * sc.re[k] + sc.im[k] * sc.im[k];
    });
    return out;
}

ChannelSampleBatch sample_reference_fas1(const SpectralModel& spectral, std::size_t draws, std::uint64_t seed)
{
    require_draws(draws);
    if (spectral.size() < 2)
        throw ConfigError("reference model needs N >= 2");
    const std::vector<double> mu = reference_mu(spectral);
    const double sigma = spectral.config.sigma();
    ChannelSampleBatch batch{draws, spectral.size(), {}, seed, ModelTag::reference};
    for_draws(draws, spectral.size(), batch.gains, 0,
              [&](std::size_t s, double* out) { reference_draw(mu, sigma, seed, s, out); });
    return batch;
}

std::vector<double> sample_reference_max(const SpectralModel& spectral, std::size_t draws, std::uint64_t seed,
                                         unsigned threads)
{
    require_draws(draws);
    if (spectral.size() < 2)
        throw ConfigError("reference model needs N >= 2");
    const std::vector<double> mu = reference_mu(spectral);
    const double sigma = spectral.config.sigma();
    std::vector<double> out;
    for_draws(draws, 1, out, threads, [&](std::size_t s, double* dst) {
        thread_local std::vector<double> g;
        g.resize(mu.size());
        reference_draw(mu, sigma, seed, s, g.data());
        *dst = *std::max_element(g.begin(), g.end());
    });
    return out;
}

double MatrixSampleBatch::magnitude(std::size_t s, std::size_t k, std::size_t r) const
{
    const double* p = values.data() + s * stride() + 2 * (k * cols + r);
    return std::sqrt(p[0] * p[0] + p[1] * p[1]);
}

std::vector<double> MatrixSampleBatch::draw_max() const
{
    std::vector<double> out(draws);
    for (std::size_t s = 0; s < draws; ++s) {
        double best = 0.0;
        for (std::size_t k = 0; k < rows; ++k)
            for (std::size_t r = 0; r < cols; ++r)
                best = std::max(best, magnitude(s, k, r));
        out[s] = best;
    }
    return out;
}

MatrixSampleBatch sample_ghat_matrix(const Stage2Model& model, std::size_t draws, std::uint64_t seed)
{
    require_draws(draws);
    const Stage1Model& m = model.stage1;
    const Loadings load = stage1_loadings(m);
    const auto cols = static_cast<std::size_t>(model.replication);
    MatrixSampleBatch batch{draws, m.ports(), cols, {}, seed};
    for_draws(draws, batch.stride(), batch.values, 0, [&](std::size_t s, double* out) {
        Scratch& sc = scratch(load.dims, load.ports);
        LatentNormal gen(seed, Stream::ghat, s);
        for (std::size_t r = 0; r < cols; ++r) {
            stage1_column(m, load, gen, sc);
            for (std::size_t k = 0; k < load.ports; ++k) {
                out[2 * (k * cols + r)] = sc.re[k];
                out[2 * (k * cols + r) + 1] = sc.im[k];
            }
        }
    });
    return batch;
}

MatrixSampleBatch sample_gtilde_matrix(const Stage2Model& model, std::size_t draws, std::uint64_t seed)
{
    require_draws(draws);
    const Stage1Model& m = model.stage1;
    const auto cols = static_cast<std::size_t>(model.replication);
    const auto dims = static_cast<std::size_t>(m.eps_rank);
    MatrixSampleBatch batch{draws, m.ports(), cols, {}, seed};
    for_draws(draws, batch.stride(), batch.values, 0, [&](std::size_t s, double* out) {
        Scratch& sc = scratch(dims, 0);
        LatentNormal gen(seed, Stream::gtilde, s);
        for (std::size_t k = 0; k < m.ports(); ++k) {
            for (std::size_t l = 0; l < dims; ++l)
                sc.a[l] = gen();
            for (std::size_t l = 0; l < dims; ++l)
                sc.b[l] = gen();
            double mix_re = 0.0, mix_im = 0.0;
            for (std::size_t l = 0; l < dims; ++l) {
                mix_re += m.loadings(k, l) * sc.a[l];
                mix_im += m.loadings(k, l) * sc.b[l];
            }
            const double tau = m.port_residual_std[k];
            for (std::size_t r = 0; r < cols; ++r) {
                out[2 * (k * cols + r)] = tau * gen() + mix_re;
                out[2 * (k * cols + r) + 1] = tau * gen() + mix_im;
            }
        }
    });
    return batch;
}

int select_replication(const FasConfig& config)
{
    config.validate();
    if (config.n_ports < 2)
        throw ConfigError("select_replication: needs N >= 2");
    const double raw = std::floor(1.52 * (config.n_ports - 1) / (2.0 * std::numbers::pi * config.width));
    const double capped = std::min(raw, static_cast<double>(config.n_ports));
    return std::max(1, static_cast<int>(capped));
}

std::vector<int> divisors(int n)
{
    if (n < 1)
        throw DomainError("divisors: n must be positive");
    std::vector<int> out;
    for (int d = 1; d <= n; ++d)
        if (n % d == 0)
            out.push_back(d);
    return out;
}

double p3_objective(const FasConfig& config, int r)
{
    config.validate();
    const int n = config.n_ports;
    if (r < 1 || n % r != 0)
        throw DomainError("p3_objective: R = " + std::to_string(r) + " does not divide N = " + std::to_string(n));
    const std::vector<long double> col = jake_first_column(config);
    const long double sigma2 = config.sigma2;
    long double best = 0;
    for (int l = 0; l < n; ++l) {
        const int block = l / r;
        long double sum = 0;
        for (int k = 0; k < n; ++k) {
            const long double v = col[static_cast<std::size_t>(std::abs(k - l))];
            sum += (k / r == block) ? std::fabs(v - sigma2) : std::fabs(v);
        }
        best = std::max(best, sum);
    }
    return static_cast<double>(best);
}

double p3_objective_dense(const FasConfig& config, int r)
{
    config.validate();
    const int n = config.n_ports;
    if (r < 1 || n % r != 0)
        throw DomainError("p3_objective: R = " + std::to_string(r) + " does not divide N = " + std::to_string(n));
    const Matrix g = build_jake_covariance(config);
    const auto size = static_cast<std::size_t>(n) * static_cast<std::size_t>(r);
    // Sigma_G(R): R copies of Sigma_g on the diagonal. I(R): N copies of 1_{RxR}.
    Matrix diff(size, size);
    for (std::size_t blk = 0; blk < static_cast<std::size_t>(r); ++blk)
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j)
                diff(blk * g.rows() + i, blk * g.cols() + j) = g(i, j);
    const auto rr = static_cast<std::size_t>(r);
    for (std::size_t blk = 0; blk < static_cast<std::size_t>(n); ++blk)
        for (std::size_t i = 0; i < rr; ++i)
            for (std::size_t j = 0; j < rr; ++j)
                diff(blk * rr + i, blk * rr + j) -= config.sigma2;
    double best = 0.0;
    for (std::size_t j = 0; j < size; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < size; ++i)
            sum += std::fabs(diff(i, j));
        best = std::max(best, sum);
    }
    return best;
}

P3Solution solve_p3_detail(const FasConfig& config)
{
    config.validate();
    if (config.n_ports < 2)
        throw ConfigError("solve_p3: needs N >= 2");
    P3Solution out;
    double best = std::numeric_limits<double>::infinity();
    for (int d : divisors(config.n_ports)) {
        const double obj = p3_objective(config, d);
        out.objectives.emplace_back(d, obj);
        // Divisors arrive in increasing order; near-equal objectives go to the larger one.
        if (obj <= best * (1.0 + 1e-12)) {
            best = std::min(best, obj);
            out.replication = d;
            out.objective = obj;
        }
        const double arg = 2.0 * std::numbers::pi * (d - 1) * config.width / (config.n_ports - 1);
        if (arg <= kJ0HalfPoint)
            out.rule_replication = d;
    }
    out.rule_condition_met = out.rule_replication > 1;
    return out;
}

int solve_p3(const FasConfig& config) { return solve_p3_detail(config).replication; }

}  // namespace fas

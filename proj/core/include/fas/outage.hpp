#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fas/channel.hpp"
#include "fas/covariance.hpp"

namespace fas {

struct EmpiricalCdf {
    std::vector<double> sorted_samples;

    static EmpiricalCdf from_samples(std::vector<double> samples);

    std::size_t count() const noexcept { return sorted_samples.size(); }
    // Fraction of samples <= r.
    double operator()(double r) const;
    // Fraction of samples < r (left limit).
    double left(double r) const;
    // Smallest sample with at least p of the mass at or below it.
    double quantile(double p) const;
};

// Row maxima of the batch, sorted.
EmpiricalCdf empirical_cdf(const ChannelSampleBatch& batch);

struct OutageQuery {
    FasConfig config;
    double threshold_magnitude = 0.0;  // r_th = sigma 10^{dB/20}

    // r_th from config.snr_target_db; -inf dB gives r_th = 0.
    static OutageQuery from_config(const FasConfig& config);
};

enum class QuadScheme { gauss_laguerre, adaptive };

struct QuadratureSpec {
    int nodes = 96;
    QuadScheme scheme = QuadScheme::gauss_laguerre;
    double rel_tol = 1e-8;

    void validate() const;  // nodes >= 8, rel_tol > 0
};

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

// Monte Carlo over the 2 eps_rank latent Gaussians of
//   E[ prod_k (1 - Q1(sqrt(2 z_k) / tau_k, sqrt(2) r / tau_k)) ].
// Draw i uses latents keyed by (seed, i); chunks merge in index order.
McEstimate stage1_cdf(const Stage1Model& model, double r, std::size_t mc_draws, std::uint64_t seed,
                      unsigned threads = 0);

// Same estimator on a sorted grid, sharing the latent draws across grid points.
// Per-draw products that fall below `negligible` are set to 0 and skip the
// remaining ports; 0 keeps every product exactly (needed for deep outage).
std::vector<McEstimate> stage1_cdf_curve(const Stage1Model& model, std::span<const double> r_grid,
                                         std::size_t mc_draws, std::uint64_t seed, unsigned threads = 0,
                                         double negligible = 0.0);

McEstimate stage1_outage(const Stage1Model& model, const OutageQuery& query, std::size_t mc_draws,
                         std::uint64_t seed, unsigned threads = 0);

// Second-stage CDF: prod_k [ int_0^inf e^{-u} (1 - Q1(sqrt(2 m_k u)/tau_k, sqrt(2) r/tau_k))^R du ]^{1/R}.
// Throws AccuracyError when the node-doubling check misses quad.rel_tol.
double stage2_cdf(const Stage2Model& model, double r, const QuadratureSpec& quad = {});

// One curve per replication count over a shared grid; the Marcum values are
// computed once and reused for every R.
std::vector<std::vector<double>> stage2_cdf_curves(const Stage1Model& model, std::span<const int> replications,
                                                   std::span<const double> r_grid,
                                                   const QuadratureSpec& quad = {}, unsigned threads = 0);

double stage2_outage(const Stage2Model& model, const OutageQuery& query, const QuadratureSpec& quad = {});

// Reference single-shared-latent model, as a CDF of the max at magnitude r:
//   int_0^{r^2/sigma^2} e^{-z} prod_{k>=2} (1 - Q1(mu_k sqrt(2z)/sqrt(1-mu_k^2),
//                                                 sqrt(2) r/(sigma sqrt(1-mu_k^2)))) dz.
// Throws DomainError naming the port when |mu_k| = 1 for some k >= 2.
double reference_cdf_fas1(const FasConfig& config, double r, const QuadratureSpec& quad = {});
double reference_outage_fas1(const FasConfig& config, const OutageQuery& query, const QuadratureSpec& quad = {});

// ln of the above; keeps values far below the double range of interest.
double reference_log_cdf_fas1(const FasConfig& config, double r, const QuadratureSpec& quad = {});

// (1 - exp(-r^2/sigma2))^ports: N independent Rayleigh ports; ports = 1 is the
// single-port closed form used when N = 1.
double rayleigh_max_cdf(double r, double sigma2, int ports = 1);

// Sup distance between two empirical CDFs over all sample points.
double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b);

// Sup distance between an empirical CDF and an analytic one known on a sorted
// grid. Covers the grid and every sample inside it; the analytic CDF is
// interpolated linearly between grid points.
double ks_distance(const EmpiricalCdf& a, std::span<const double> grid, std::span<const double> values);

// Sup over a shared grid of |fa - fb|.
double ks_distance(std::span<const double> fa, std::span<const double> fb);

// `points` uniform points from 0 to the 99.99th percentile of the oracle.
std::vector<double> ks_grid(const EmpiricalCdf& oracle, std::size_t points = 512);

// Dvoretzky-Kiefer-Wolfowitz half-width sqrt(ln(2/alpha) / (2n)).
double dkw_bound(std::size_t n, double alpha);

}  // namespace fas

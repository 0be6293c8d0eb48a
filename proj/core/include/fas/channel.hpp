#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "fas/covariance.hpp"

namespace fas {

// First-stage model: eps_rank shared eigen-latents plus an independent
// residual per port.
//   g_k = tau_k (x_k + j y_k) + sum_{l <= M} sqrt(s_l) u_{k,l} (a_l + j b_l)
struct Stage1Model {
    std::shared_ptr<const SpectralModel> spectral;
    int eps_rank = 0;
    std::vector<double> retained_values;     // s_1 .. s_M
    Matrix loadings;                         // N x M, sqrt(s_l) u_{k,l}
    std::vector<double> port_mixture_power;  // m_k
    std::vector<double> port_residual_var;   // tau_k^2 = sum_{l > M} s_l u_{k,l}^2
    std::vector<double> port_residual_std;   // tau_k

    std::size_t ports() const noexcept { return port_mixture_power.size(); }
    double sigma2() const noexcept { return spectral->config.sigma2; }
    // Real latent dimensions the stage-1 integral runs over.
    int latent_dimension() const noexcept { return 2 * eps_rank; }
};

// Throws ConfigError unless 1 <= eps_rank < N and every tau_k^2 > 0.
Stage1Model make_stage1_model(std::shared_ptr<const SpectralModel> spectral, int eps_rank);

struct Stage2Model {
    Stage1Model stage1;
    int replication = 1;  // R
};

Stage2Model make_stage2_model(Stage1Model stage1, int replication);

enum class ModelTag { exact, stage1, reference };

// draws x ports magnitudes, row-major.
struct ChannelSampleBatch {
    std::size_t draws = 0;
    std::size_t ports = 0;
    std::vector<double> gains;
    std::uint64_t seed = 0;
    ModelTag tag = ModelTag::exact;

    double at(std::size_t s, std::size_t k) const { return gains[s * ports + k]; }
    std::span<const double> row(std::size_t s) const { return {gains.data() + s * ports, ports}; }
    std::vector<double> row_max() const;
};

// Eigenpairs with s_l below this fraction of sigma^2 are dropped by the exact
// sampler; they sit under the eigensolver's rounding floor.
inline constexpr double kExactEigenCutoff = 1e-15;

// Variate order per draw: exact draws a_l, b_l pairs; stage-1 draws all a_l,
// then all b_l, then (x_k, y_k) per port; reference draws a, b, then (x_k, y_k).
ChannelSampleBatch sample_exact(const SpectralModel& spectral, std::size_t draws, std::uint64_t seed);
ChannelSampleBatch sample_stage1(const Stage1Model& model, std::size_t draws, std::uint64_t seed);
ChannelSampleBatch sample_reference_fas1(const SpectralModel& spectral, std::size_t draws, std::uint64_t seed);

// Only the per-draw maximum max_k |g_k|; identical to sample_*(...).row_max()
// for the same seed, without holding the full batch.
std::vector<double> sample_exact_max(const SpectralModel& spectral, std::size_t draws, std::uint64_t seed,
                                     unsigned threads = 0);
std::vector<double> sample_stage1_max(const Stage1Model& model, std::size_t draws, std::uint64_t seed,
                                      unsigned threads = 0);
std::vector<double> sample_reference_max(const SpectralModel& spectral, std::size_t draws,
                                         std::uint64_t seed, unsigned threads = 0);

// Complex gains of the exact model (real and imaginary parts interleaved per
// port), for covariance checks.
std::vector<double> sample_exact_complex(const SpectralModel& spectral, std::size_t draws, std::uint64_t seed);

// Latent mixture energy z_k = |sum_l sqrt(s_l) u_{k,l} (a_l + j b_l)|^2,
// draws x ports, from the stage-1 latent stream.
std::vector<double> sample_latent_energy(const Stage1Model& model, std::size_t draws, std::uint64_t seed);

// draws x (N x R) complex entries; real/imaginary interleaved, row-major
// within a draw (entry (k, r) at 2 (k R + r)).
struct MatrixSampleBatch {
    std::size_t draws = 0;
    std::size_t rows = 0;  // N
    std::size_t cols = 0;  // R
    std::vector<double> values;
    std::uint64_t seed = 0;

    std::size_t stride() const noexcept { return 2 * rows * cols; }
    double magnitude(std::size_t s, std::size_t k, std::size_t r) const;
    std::vector<double> draw_max() const;  // max over all N R entries
};

// G-hat: every column is an independent stage-1 draw.
MatrixSampleBatch sample_ghat_matrix(const Stage2Model& model, std::size_t draws, std::uint64_t seed);
// G-tilde: latents fresh per port k, shared along the row; residuals fresh per entry.
MatrixSampleBatch sample_gtilde_matrix(const Stage2Model& model, std::size_t draws, std::uint64_t seed);

// max(1, min(floor(1.52 (N - 1) / (2 pi W)), N)).
int select_replication(const FasConfig& config);

std::vector<int> divisors(int n);

// ||Sigma_g - sigma^2 diag(1_{RxR}, ..., 1_{RxR})||_1 from per-column sums.
// Throws DomainError if r does not divide N.
double p3_objective(const FasConfig& config, int r);

// Same quantity from the literal NR x NR block matrices. O((NR)^2); a check
// route, not for production sizes.
double p3_objective_dense(const FasConfig& config, int r);

// First positive root of J0(x) = 1/2.
inline constexpr double kJ0HalfPoint = 1.5211440576687651;

struct P3Solution {
    int replication = 1;     // argmin of the objective over divisors (ties to the larger)
    double objective = 0.0;
    int rule_replication = 1;    // greatest divisor with 2 pi (R-1) W / (N-1) <= kJ0HalfPoint
    bool rule_condition_met = false;  // some divisor > 1 satisfies it
    std::vector<std::pair<int, double>> objectives;  // (divisor, objective)
};

P3Solution solve_p3_detail(const FasConfig& config);
int solve_p3(const FasConfig& config);

}  // namespace fas

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "fas/channel.hpp"
#include "fas/errors.hpp"
#include "fas/outage.hpp"
#include "fas/rng.hpp"
#include "oracles.hpp"

using namespace fas;

namespace {

using cplx = std::complex<double>;

// Sample covariance E[g_i conj(g_j)] from interleaved (re, im) rows of width 2*dim.
Eigen::MatrixXcd sample_covariance(const std::vector<double>& v, std::size_t draws, std::size_t dim)
{
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(dim, dim);
    Eigen::VectorXcd g(dim);
    for (std::size_t s = 0; s < draws; ++s) {
        for (std::size_t i = 0; i < dim; ++i)
            g(i) = cplx(v[s * 2 * dim + 2 * i], v[s * 2 * dim + 2 * i + 1]);
        c.noalias() += g * g.adjoint();
    }
    return c / static_cast<double>(draws);
}

std::shared_ptr<const SpectralModel> spectral(int n, double w, double sigma2)
{
    return std::make_shared<const SpectralModel>(make_spectral_model({n, w, sigma2, 0.0}));
}

// Sup distance between two sorted samples.
double ks_two_sample(std::vector<double> a, std::vector<double> b)
{
    return ks_distance(EmpiricalCdf::from_samples(std::move(a)), EmpiricalCdf::from_samples(std::move(b)));
}

}  // namespace

TEST_SUITE("channel")
{
    TEST_CASE("latent normals have variance 1/2 per component")
    {
        double sum = 0.0, sq = 0.0;
        const int n = 400000;
        for (int s = 0; s < n / 4; ++s) {
            LatentNormal gen(11, Stream::exact, static_cast<std::uint64_t>(s));
            for (int i = 0; i < 4; ++i) {
                const double x = gen();
                sum += x;
                sq += x * x;
            }
        }
        CHECK(std::fabs(sum / n) < 4.0 * std::sqrt(0.5 / n));
        CHECK(sq / n == doctest::Approx(0.5).epsilon(0.01));
    }

    TEST_CASE("counter RNG is keyed by seed, stream and index")
    {
        CounterRng a(5, Stream::exact, 9), b(5, Stream::exact, 9), c(5, Stream::stage1, 9), d(6, Stream::exact, 9),
            e(5, Stream::exact, 10);
        const auto va = a();
        CHECK(va == b());
        CHECK(va != c());
        CHECK(va != d());
        CHECK(va != e());
    }

    TEST_CASE("replication rule")
    {
        CHECK(select_replication({100, 1.0, 10.0, 0.0}) == 23);
        CHECK(select_replication({2, 5.0, 1.0, 0.0}) == 1);
        CHECK(select_replication({200, 4.0, 1.0, 0.0}) == 12);
        for (int n : {2, 10, 57, 100, 200, 401})
            for (double w : {0.05, 0.3, 1.0, 2.5, 4.0}) {
                const int r = select_replication({n, w, 1.0, 0.0});
                const double step = 2.0 * std::numbers::pi * w / (n - 1);
                CAPTURE(n);
                CAPTURE(w);
                CHECK(r >= 1);
                CHECK(r <= n);
                if (r > 1)
                    CHECK(r * step <= 1.52 + 1e-12);
                if (r < n)
                    CHECK((r + 1) * step > 1.52 - 1e-12);
            }
        CHECK_THROWS_AS(select_replication({1, 1.0, 1.0, 0.0}), ConfigError);
    }

    TEST_CASE("divisors")
    {
        CHECK(divisors(12) == std::vector<int>{1, 2, 3, 4, 6, 12});
        CHECK(divisors(1) == std::vector<int>{1});
        CHECK_THROWS_AS(divisors(0), DomainError);
    }

    TEST_CASE("block objective against the dense NR x NR oracle")
    {
        for (int n : {12, 24, 36})
            for (double w : {0.5, 1.0})
                for (int r : divisors(n)) {
                    const FasConfig c{n, w, 2.0, 0.0};
                    const double want = oracle::p3_norm_dense(oracle::jake_matrix(n, w, 2.0), 2.0, r);
                    CAPTURE(n);
                    CAPTURE(w);
                    CAPTURE(r);
                    CHECK(p3_objective(c, r) == doctest::Approx(want).epsilon(1e-12));
                    CHECK(p3_objective_dense(c, r) == doctest::Approx(want).epsilon(1e-12));
                }
        CHECK_THROWS_AS(p3_objective({12, 1.0, 1.0, 0.0}, 5), DomainError);
    }

    TEST_CASE("block objective limiting cases")
    {
        const FasConfig c{10, 1.0, 3.0, 0.0};
        const Eigen::MatrixXd m = oracle::jake_matrix(10, 1.0, 3.0);
        const double want = (m - 3.0 * Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().colwise().sum().maxCoeff();
        CHECK(p3_objective(c, 1) == doctest::Approx(want).epsilon(1e-12));

        const FasConfig wide{10, 1e4, 3.0, 0.0};
        CHECK(p3_objective(wide, 10) == doctest::Approx(9 * 3.0).epsilon(0.05));
    }

    TEST_CASE("P3 solution is the brute-force argmin")
    {
        for (int n : {12, 24, 36})
            for (double w : {0.5, 1.0}) {
                const Eigen::MatrixXd m = oracle::jake_matrix(n, w, 1.0);
                int best_r = 0;
                double best = 1e300;
                for (int r = 1; r <= n; ++r) {
                    if (n % r)
                        continue;
                    const double obj = oracle::p3_norm_dense(m, 1.0, r);
                    if (obj <= best * (1.0 + 1e-12)) {
                        best = std::min(best, obj);
                        best_r = r;
                    }
                }
                CAPTURE(n);
                CAPTURE(w);
                CHECK(solve_p3({n, w, 1.0, 0.0}) == best_r);
            }
    }

    TEST_CASE("P3 rule cases")
    {
        const P3Solution twelve = solve_p3_detail({12, 1.0, 1.0, 0.0});
        // Greatest divisor still inside the main lobe, J0(2 pi (R-1) W/(N-1)) >= 1/2, checked directly.
        int rule = 1;
        for (int d : divisors(12))
            if (oracle::j0_series(2.0 * std::numbers::pi * (d - 1) / 11.0) >= 0.5)
                rule = d;
        CHECK(twelve.rule_replication == rule);
        CHECK(twelve.replication == rule);

        // R=2 leaves sigma^2 (1 - J0(0.0628)) ~ 1e-3 sigma^2 against J0(0.0628) sigma^2 for R=1.
        const P3Solution tiny = solve_p3_detail({2, 0.01, 1.0, 0.0});
        CHECK(tiny.objectives.size() == 2);
        CHECK(tiny.objectives[1].second < tiny.objectives[0].second);
        CHECK(solve_p3({2, 0.01, 1.0, 0.0}) == 2);

        const P3Solution hundred = solve_p3_detail({100, 1.0, 1.0, 0.0});
        CHECK(hundred.rule_replication == 20);
        CHECK(hundred.replication == 20);
        CHECK(select_replication({100, 1.0, 1.0, 0.0}) == 23);
    }

    TEST_CASE("single port is Rayleigh")
    {
        const SpectralModel sp = make_spectral_model({1, 1.0, 1.0, 0.0});
        const std::size_t draws = 1000000;
        const EmpiricalCdf e = EmpiricalCdf::from_samples(sample_exact_max(sp, draws, 3));
        const double d = oracle::ks_sorted(e.sorted_samples, [](double r) { return -std::expm1(-r * r); });
        CHECK(d < oracle::dkw(draws, 0.01));
        const double median = e(std::sqrt(std::log(2.0)));
        CHECK(std::fabs(median - 0.5) < 3.0 * std::sqrt(0.25 / draws));
    }

    TEST_CASE("independent ports follow the order-statistics law")
    {
        const int n = 6;
        const double s2 = 2.5;
        SpectralModel sp;
        sp.config = {n, 1.0, s2, 0.0};
        sp.matrix = Matrix::identity(n);
        for (double& v : sp.matrix.data())
            v *= s2;
        sp.eigenvalues.assign(n, s2);
        sp.eigenvectors = Matrix::identity(n);
        const std::size_t draws = 200000;
        const EmpiricalCdf e = EmpiricalCdf::from_samples(sample_exact_max(sp, draws, 8));
        const double d =
            oracle::ks_sorted(e.sorted_samples, [&](double r) { return std::pow(-std::expm1(-r * r / s2), n); });
        CHECK(d < oracle::dkw(draws, 0.01));
    }

    TEST_CASE("exact sampler reproduces the Jake covariance")
    {
        const SpectralModel sp = make_spectral_model({2, 0.5, 1.0, 0.0});
        const std::size_t draws = 1000000;
        const Eigen::MatrixXcd c = sample_covariance(sample_exact_complex(sp, draws, 4), draws, 2);
        CHECK(std::fabs(c(0, 1).real() - oracle::j0_series(std::numbers::pi)) < 0.01);
        CHECK(std::fabs(c(0, 1).imag()) < 0.01);
        CHECK(c(0, 0).real() == doctest::Approx(1.0).epsilon(0.01));

        const SpectralModel sp6 = make_spectral_model({6, 1.3, 4.0, 0.0});
        const Eigen::MatrixXcd c6 = sample_covariance(sample_exact_complex(sp6, 200000, 5), 200000, 6);
        const Eigen::MatrixXd want = oracle::jake_matrix(6, 1.3, 4.0);
        CHECK((c6.real() - want).cwiseAbs().maxCoeff() < 0.05 * 4.0);
        CHECK(c6.imag().cwiseAbs().maxCoeff() < 0.05 * 4.0);
    }

    TEST_CASE("samplers are deterministic and thread-count independent")
    {
        const SpectralModel sp = make_spectral_model({20, 1.0, 1.0, 0.0});
        const ChannelSampleBatch a = sample_exact(sp, 3000, 42);
        const ChannelSampleBatch b = sample_exact(sp, 3000, 42);
        CHECK(a.gains == b.gains);
        CHECK(sample_exact(sp, 3000, 43).gains != a.gains);
        CHECK(a.row_max() == sample_exact_max(sp, 3000, 42, 1));
        CHECK(sample_exact_max(sp, 3000, 42, 1) == sample_exact_max(sp, 3000, 42, 3));

        const Stage1Model m = make_stage1_model(spectral(20, 1.0, 1.0), 3);
        CHECK(sample_stage1(m, 3000, 7).row_max() == sample_stage1_max(m, 3000, 7, 2));
        CHECK(sample_reference_fas1(sp, 3000, 7).row_max() == sample_reference_max(sp, 3000, 7, 2));
        CHECK_THROWS_AS(sample_exact(sp, 0, 1), DomainError);
    }

    TEST_CASE("stage-1 model bookkeeping")
    {
        auto sp = spectral(30, 1.5, 10.0);
        const Stage1Model m = make_stage1_model(sp, 5);
        REQUIRE(m.ports() == 30);
        for (std::size_t k = 0; k < 30; ++k) {
            double mk = 0.0;
            for (int l = 0; l < 5; ++l) {
                const double u = sp->eigenvectors(k, l);
                mk += sp->eigenvalues[l] * u * u;
                CHECK(m.loadings(k, l) == doctest::Approx(std::sqrt(sp->eigenvalues[l]) * u).epsilon(1e-12));
            }
            CHECK(m.port_mixture_power[k] == doctest::Approx(mk).epsilon(1e-12));
            CHECK(m.port_mixture_power[k] + m.port_residual_var[k] == doctest::Approx(10.0).epsilon(1e-12));
            CHECK(m.port_residual_std[k] == doctest::Approx(std::sqrt(m.port_residual_var[k])));
        }
        CHECK(m.latent_dimension() == 10);
        CHECK_THROWS_AS(make_stage1_model(sp, 0), ConfigError);
        CHECK_THROWS_AS(make_stage1_model(sp, 30), ConfigError);
        CHECK_THROWS_AS(make_stage2_model(m, 0), ConfigError);
    }

    TEST_CASE("stage-1 sampler keeps the per-port power")
    {
        const Stage1Model m = make_stage1_model(spectral(10, 1.0, 1.0), 3);
        const std::size_t draws = 1000000;
        const ChannelSampleBatch b = sample_stage1(m, draws, 12);
        for (std::size_t k = 0; k < 10; ++k) {
            double p = 0.0;
            for (std::size_t s = 0; s < draws; ++s)
                p += b.at(s, k) * b.at(s, k);
            CAPTURE(k);
            CHECK(p / draws == doctest::Approx(1.0).epsilon(0.01));
        }
    }

    TEST_CASE("stage-1 with nearly full rank matches the exact model")
    {
        auto sp = spectral(12, 2.0, 1.0);
        const Stage1Model m = make_stage1_model(sp, 11);
        CHECK(sp->eigenvalues[11] < 1e-6);
        const std::size_t draws = 1000000;
        const double d = ks_two_sample(sample_stage1_max(m, draws, 1), sample_exact_max(*sp, draws, 2));
        CHECK(d < 0.01);
    }

    TEST_CASE("latent energy is exponential with mean m_k")
    {
        const Stage1Model m = make_stage1_model(spectral(12, 1.0, 10.0), 4);
        const std::size_t draws = 100000;
        const std::vector<double> z = sample_latent_energy(m, draws, 77);
        int exceed = 0;
        for (std::size_t k = 0; k < m.ports(); ++k) {
            std::vector<double> col(draws);
            double sum = 0.0;
            for (std::size_t s = 0; s < draws; ++s)
                sum += col[s] = z[s * m.ports() + k];
            std::sort(col.begin(), col.end());
            const double mk = m.port_mixture_power[k];
            CHECK(std::fabs(sum / draws - mk) < 5.0 * mk / std::sqrt(static_cast<double>(draws)));
            if (oracle::ks_sorted(col, [mk](double x) { return -std::expm1(-x / mk); }) >= oracle::dkw(draws, 0.01))
                ++exceed;
        }
        // Each port exceeds the 1% band with probability at most 1%.
        CHECK(exceed <= 1);
    }

    TEST_CASE("reference model: port 1 carries the shared latent alone")
    {
        const SpectralModel sp = make_spectral_model({5, 1.0, 4.0, 0.0});
        const ChannelSampleBatch b = sample_reference_fas1(sp, 100, 9);
        for (std::size_t s = 0; s < 100; ++s) {
            LatentNormal gen(9, Stream::reference, s);
            const double a = gen(), c = gen();
            CHECK(b.at(s, 0) == doctest::Approx(2.0 * std::hypot(a, c)).epsilon(1e-14));
        }
    }

    TEST_CASE("reference model covariance follows mu_k mu_l, not Jake")
    {
        // For circular complex Gaussians E|g_k|^2 |g_l|^2 = sigma^4 + |C_kl|^2.
        const int n = 5;
        const double s2 = 1.0;
        const SpectralModel sp = make_spectral_model({n, 1.0, s2, 0.0});
        const std::size_t draws = 1000000;
        const ChannelSampleBatch b = sample_reference_fas1(sp, draws, 21);
        const Eigen::MatrixXd jake = oracle::jake_matrix(n, 1.0, s2);
        auto mu = [&](int k) { return jake(0, k) / s2; };
        const int k = 2, l = 4;
        double acc = 0.0, acc2 = 0.0;
        for (std::size_t s = 0; s < draws; ++s) {
            const double v = b.at(s, k) * b.at(s, k) * b.at(s, l) * b.at(s, l);
            acc += v;
            acc2 += v * v;
        }
        const double mean = acc / draws;
        const double se = std::sqrt((acc2 / draws - mean * mean) / draws);
        const double model = s2 * s2 * mu(k) * mu(k) * mu(l) * mu(l);
        const double jakes = jake(k, l) * jake(k, l);
        MESSAGE("|C|^2 estimate " << mean - s2 * s2 << ", mu model " << model << ", Jake " << jakes);
        CHECK(std::fabs(mean - s2 * s2 - model) < 4.0 * se);
        CHECK(std::fabs(mean - s2 * s2 - jakes) > 10.0 * se);

        // With two ports the only pair involves the reference port, so it is exact.
        const SpectralModel two = make_spectral_model({2, 0.4, s2, 0.0});
        const ChannelSampleBatch b2 = sample_reference_fas1(two, draws, 22);
        acc = acc2 = 0.0;
        for (std::size_t s = 0; s < draws; ++s) {
            const double v = b2.at(s, 0) * b2.at(s, 0) * b2.at(s, 1) * b2.at(s, 1);
            acc += v;
            acc2 += v * v;
        }
        const double m2 = acc / draws;
        const double se2 = std::sqrt((acc2 / draws - m2 * m2) / draws);
        const double j = oracle::j0_series(2.0 * std::numbers::pi * 0.4);
        CHECK(std::fabs(m2 - 1.0 - j * j) < 4.0 * se2);
    }

    TEST_CASE("G-hat with one column is a stage-1 draw")
    {
        const Stage2Model model = make_stage2_model(make_stage1_model(spectral(8, 1.0, 1.0), 3), 1);
        const std::size_t draws = 200000;
        const MatrixSampleBatch g = sample_ghat_matrix(model, draws, 31);
        const ChannelSampleBatch s1 = sample_stage1(model.stage1, draws, 32);
        const double band = 1.63 * std::sqrt(2.0 / draws);  // two-sample KS, 1%
        for (std::size_t k = 0; k < 8; ++k) {
            std::vector<double> a(draws), b(draws);
            for (std::size_t s = 0; s < draws; ++s) {
                a[s] = g.magnitude(s, k, 0);
                b[s] = s1.at(s, k);
            }
            CAPTURE(k);
            CHECK(ks_two_sample(a, b) < band);
        }
    }

    TEST_CASE("G-hat and G-tilde block structure")
    {
        const double s2 = 1.0;
        const std::size_t n = 6, r = 3, draws = 100000;
        const Stage2Model model = make_stage2_model(make_stage1_model(spectral(6, 1.0, s2), 3), 3);
        const Stage1Model& m = model.stage1;
        const double noise = 3.0 * s2 / std::sqrt(static_cast<double>(draws));

        // Entry (k, q) sits at index k R + q within a draw.
        const MatrixSampleBatch gh = sample_ghat_matrix(model, draws, 41);
        const Eigen::MatrixXcd ch = sample_covariance(gh.values, draws, n * r);
        double within = 0.0, cross = 0.0;
        for (std::size_t i = 0; i < n * r; ++i)
            for (std::size_t j = 0; j < n * r; ++j) {
                const std::size_t ki = i / r, qi = i % r, kj = j / r, qj = j % r;
                if (qi == qj) {
                    double want = ki == kj ? s2 : 0.0;
                    if (ki != kj)
                        for (int l = 0; l < m.eps_rank; ++l)
                            want += m.loadings(ki, l) * m.loadings(kj, l);
                    within = std::max(within, std::abs(ch(i, j) - want));
                } else {
                    cross = std::max(cross, std::abs(ch(i, j)));
                }
            }
        CHECK(within < 0.02 * s2);
        CHECK(cross < 2.0 * noise);

        const MatrixSampleBatch gt = sample_gtilde_matrix(model, draws, 42);
        const Eigen::MatrixXcd ct = sample_covariance(gt.values, draws, n * r);
        double row_within = 0.0, row_cross = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < n * r; ++i)
            for (std::size_t j = 0; j < n * r; ++j) {
                const std::size_t ki = i / r, kj = j / r;
                if (i == j) {
                    diag = std::max(diag, std::fabs(ct(i, j).real() / s2 - 1.0));
                } else if (ki == kj) {
                    row_within = std::max(row_within, std::abs(ct(i, j) - m.port_mixture_power[ki]));
                } else {
                    row_cross = std::max(row_cross, std::abs(ct(i, j)));
                }
            }
        CHECK(row_within < 0.02 * s2);
        CHECK(row_cross < 2.0 * noise);
        CHECK(diag < 0.02);
    }

    TEST_CASE("Monte Carlo error halves when draws quadruple")
    {
        const SpectralModel sp = make_spectral_model({4, 0.5, 1.0, 0.0});
        auto spread = [&](std::size_t draws) {
            std::vector<double> est;
            for (std::uint64_t seed = 100; seed < 160; ++seed)
                est.push_back(EmpiricalCdf::from_samples(sample_exact_max(sp, draws, seed, 1))(1.0));
            double mean = 0.0, var = 0.0;
            for (double e : est)
                mean += e / est.size();
            for (double e : est)
                var += (e - mean) * (e - mean) / (est.size() - 1);
            return std::sqrt(var);
        };
        const double ratio = spread(2000) / spread(8000);
        MESSAGE("spread ratio " << ratio);
        CHECK(ratio == doctest::Approx(2.0).epsilon(0.35));
    }
}

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "fas/channel.hpp"
#include "fas/errors.hpp"
#include "fas/outage.hpp"
#include "oracles.hpp"

using namespace fas;

namespace {

std::shared_ptr<const SpectralModel> spectral(int n, double w, double sigma2)
{
    return std::make_shared<const SpectralModel>(make_spectral_model({n, w, sigma2, 0.0}));
}

// Brute-force sup |F_a - F_b| over the pooled samples, both one-sided limits.
double ks_brute(const std::vector<double>& a, const std::vector<double>& b)
{
    auto frac = [](const std::vector<double>& v, double x, bool strict) {
        std::size_t c = 0;
        for (double s : v)
            c += strict ? s < x : s <= x;
        return static_cast<double>(c) / v.size();
    };
    double d = 0.0;
    for (const auto* v : {&a, &b})
        for (double x : *v) {
            d = std::max(d, std::fabs(frac(a, x, false) - frac(b, x, false)));
            d = std::max(d, std::fabs(frac(a, x, true) - frac(b, x, true)));
        }
    return d;
}

OutageQuery query(int n, double w, double sigma2, double db)
{
    return OutageQuery::from_config({n, w, sigma2, db});
}

}  // namespace

TEST_SUITE("outage")
{
    TEST_CASE("empirical CDF evaluation")
    {
        const EmpiricalCdf e = EmpiricalCdf::from_samples({3.0, 1.0, 2.0, 2.0});
        CHECK(e.sorted_samples == std::vector<double>{1.0, 2.0, 2.0, 3.0});
        CHECK(e(0.5) == 0.0);
        CHECK(e(2.0) == 0.75);
        CHECK(e.left(2.0) == 0.25);
        CHECK(e(3.0) == 1.0);
        CHECK(e.quantile(0.5) == 2.0);
        CHECK(e.quantile(0.76) == 3.0);
        CHECK(e.quantile(0.0) == 1.0);
        CHECK_THROWS_AS(e.quantile(1.5), DomainError);
    }

    TEST_CASE("KS distances against brute force")
    {
        std::vector<double> a, b;
        for (int i = 0; i < 300; ++i) {
            a.push_back(std::fmod(i * 0.6180339887, 1.0));
            b.push_back(std::pow(std::fmod(i * 0.4142135623 + 0.1, 1.0), 1.3));
        }
        b[5] = b[6];  // a tie
        const EmpiricalCdf ea = EmpiricalCdf::from_samples(a), eb = EmpiricalCdf::from_samples(b);
        CHECK(ks_distance(ea, eb) == doctest::Approx(ks_brute(a, b)).epsilon(1e-15));
        CHECK(ks_distance(ea, ea) == 0.0);

        const std::vector<double> fa{0.1, 0.5, 0.9}, fb{0.2, 0.45, 0.9};
        CHECK(ks_distance(fa, fb) == doctest::Approx(0.1));
        CHECK(ks_distance(fa, fa) == 0.0);
    }

    TEST_CASE("KS against an analytic curve on a grid")
    {
        const SpectralModel sp = make_spectral_model({1, 1.0, 1.0, 0.0});
        const std::size_t draws = 1000000;
        const EmpiricalCdf e = EmpiricalCdf::from_samples(sample_exact_max(sp, draws, 17));
        const std::vector<double> grid = ks_grid(e, 4096);
        std::vector<double> f(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j)
            f[j] = rayleigh_max_cdf(grid[j], 1.0);
        const double d = ks_distance(e, grid, f);
        const double exact = oracle::ks_sorted(e.sorted_samples, [](double r) { return -std::expm1(-r * r); });
        CHECK(d < oracle::dkw(draws, 0.01));
        CHECK(d == doctest::Approx(exact).epsilon(0.02));
    }

    TEST_CASE("grid and DKW helpers")
    {
        const EmpiricalCdf e = EmpiricalCdf::from_samples({0.5, 1.0, 4.0});
        const std::vector<double> g = ks_grid(e, 5);
        CHECK(g.size() == 5);
        CHECK(g.front() == 0.0);
        CHECK(g.back() == e.quantile(0.9999));
        CHECK(dkw_bound(1000000, 0.01) == doctest::Approx(std::sqrt(std::log(200.0) / 2e6)));
        CHECK_THROWS_AS(dkw_bound(0, 0.01), DomainError);
        CHECK_THROWS_AS(ks_grid(e, 1), DomainError);
    }

    TEST_CASE("threshold conversion")
    {
        CHECK(query(4, 1.0, 10.0, 0.0).threshold_magnitude == doctest::Approx(std::sqrt(10.0)));
        CHECK(query(4, 1.0, 4.0, 20.0).threshold_magnitude == doctest::Approx(20.0));
        CHECK(query(4, 1.0, 4.0, -std::numeric_limits<double>::infinity()).threshold_magnitude == 0.0);
        CHECK(rayleigh_max_cdf(1.0, 2.0, 3) == doctest::Approx(std::pow(1.0 - std::exp(-0.5), 3)));
    }

    TEST_CASE("stage-1 estimator limits and consistency")
    {
        const Stage1Model m = make_stage1_model(spectral(20, 1.0, 2.0), 3);
        CHECK(stage1_cdf(m, 0.0, 1000, 1).estimate == 0.0);
        CHECK(stage1_cdf(m, 50.0, 1000, 1).estimate == doctest::Approx(1.0).epsilon(1e-12));

        const std::vector<double> grid{0.3, 0.8, 1.2, 1.6, 2.5};
        const auto curve = stage1_cdf_curve(m, grid, 4000, 9, 1);
        const auto curve3 = stage1_cdf_curve(m, grid, 4000, 9, 3);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const McEstimate p = stage1_cdf(m, grid[j], 4000, 9);
            CHECK(curve[j].estimate == doctest::Approx(p.estimate).epsilon(1e-12));
            CHECK(curve[j].std_error == doctest::Approx(p.std_error).epsilon(1e-9));
            CHECK(curve3[j].estimate == curve[j].estimate);
            if (j > 0)
                CHECK(curve[j].estimate >= curve[j - 1].estimate);
        }
        const FasConfig c{20, 1.0, 2.0, 1.5};
        const OutageQuery q = OutageQuery::from_config(c);
        CHECK(stage1_outage(m, q, 4000, 9).estimate == stage1_cdf(m, q.threshold_magnitude, 4000, 9).estimate);
        const OutageQuery never = OutageQuery::from_config({20, 1.0, 2.0, -std::numeric_limits<double>::infinity()});
        CHECK(stage1_outage(m, never, 1000, 9).estimate == 0.0);
        CHECK_THROWS_AS(stage1_cdf_curve(m, grid, 100, 1, 0, 1.0), DomainError);
    }

    TEST_CASE("stage-1 integral agrees with its own sampler")
    {
        const Stage1Model m = make_stage1_model(spectral(20, 1.0, 1.0), 3);
        const std::size_t draws = 200000;
        const EmpiricalCdf e = EmpiricalCdf::from_samples(sample_stage1_max(m, draws, 5));
        const double band = oracle::dkw(draws, 0.01);
        for (double r : {0.6, 0.9, 1.2, 1.5, 2.0}) {
            const McEstimate p = stage1_cdf(m, r, 20000, 6);
            CAPTURE(r);
            CHECK(std::fabs(p.estimate - e(r)) < 3.0 * p.std_error + band);
        }
        const Stage1Model big = make_stage1_model(spectral(100, 1.0, 10.0), 4);
        const OutageQuery q = query(100, 1.0, 10.0, 0.0);
        const McEstimate p = stage1_outage(big, q, 100000, 7);
        const double emp = EmpiricalCdf::from_samples(sample_stage1_max(big, 100000, 8))(q.threshold_magnitude);
        const double se = std::hypot(p.std_error, std::sqrt(emp * (1.0 - emp) / 1e5));
        CHECK(std::fabs(p.estimate - emp) < 3.0 * se);
    }

    TEST_CASE("stage-1 at eps_rank 5 tracks the exact model")
    {
        auto sp = spectral(100, 1.0, 10.0);
        const Stage1Model m = make_stage1_model(sp, 5);
        const std::size_t draws = 200000;
        const EmpiricalCdf e = EmpiricalCdf::from_samples(sample_exact_max(*sp, draws, 10));
        const double band = oracle::dkw(draws, 0.01);
        const std::vector<double> grid{2.0, 3.0, 3.5, 4.0, 4.5, 5.0, 6.0};
        const auto curve = stage1_cdf_curve(m, grid, 20000, 11);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            CAPTURE(grid[j]);
            CHECK(std::fabs(curve[j].estimate - e(grid[j])) < 3.0 * curve[j].std_error + band);
        }
    }

    TEST_CASE("stage-2 limits and the one-column closed form")
    {
        const Stage1Model s1 = make_stage1_model(spectral(15, 1.0, 3.0), 3);
        const Stage2Model m1 = make_stage2_model(s1, 1);
        CHECK(stage2_cdf(m1, 0.0) == 0.0);
        CHECK(stage2_cdf(m1, 100.0) == doctest::Approx(1.0).epsilon(1e-12));
        // Mixing the exponential latent into the Rician kernel gives back the
        // Rayleigh marginal, so R=1 is the independent-ports product.
        for (double r : {0.5, 1.0, 1.7, 2.5, 4.0})
            CHECK(stage2_cdf(m1, r) == doctest::Approx(rayleigh_max_cdf(r, 3.0, 15)).epsilon(1e-7));

        const Stage2Model m5 = make_stage2_model(s1, 5);
        const std::vector<double> grid{0.5, 1.0, 1.7, 2.5, 4.0};
        const int reps[] = {1, 5};
        const auto curves = stage2_cdf_curves(s1, reps, grid);
        double prev = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double v = stage2_cdf(m5, grid[j]);
            CHECK(curves[1][j] == doctest::Approx(v).epsilon(1e-12));
            CHECK(curves[0][j] == doctest::Approx(stage2_cdf(m1, grid[j])).epsilon(1e-12));
            CHECK(v >= prev);
            CHECK(v <= 1.0);
            prev = v;
        }
        CHECK(stage2_cdf(m5, 1.3) == stage2_cdf(m5, 1.3));
        const OutageQuery never = OutageQuery::from_config({15, 1.0, 3.0, -std::numeric_limits<double>::infinity()});
        CHECK(stage2_outage(m5, never) == 0.0);
        QuadratureSpec bad;
        bad.nodes = 4;
        CHECK_THROWS_AS(stage2_cdf(m5, 1.0, bad), DomainError);
    }

    TEST_CASE("stage-2 outage is near 0.1 and flat in N at 0 dB")
    {
        double lo = 1.0, hi = 0.0;
        for (int n : {40, 100, 200}) {
            const FasConfig c{n, 1.0, 10.0, 0.0};
            const Stage2Model m = make_stage2_model(
                make_stage1_model(spectral(n, 1.0, 10.0), epsilon_rank_formula(c)), select_replication(c));
            const double p = stage2_outage(m, OutageQuery::from_config(c));
            MESSAGE("N=" << n << " stage-2 outage " << p);
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        CHECK(lo > 0.05);
        CHECK(hi < 0.2);
        CHECK(hi / lo < 2.0);
    }

    TEST_CASE("outage drops when the aperture widens")
    {
        double prev_s2 = 1.0, prev_emp = 1.0;
        for (double w : {0.5, 1.0}) {
            const FasConfig c{50, w, 10.0, 0.0};
            auto sp = spectral(50, w, 10.0);
            const Stage2Model m = make_stage2_model(make_stage1_model(sp, epsilon_rank_formula(c)), select_replication(c));
            const OutageQuery q = OutageQuery::from_config(c);
            const double s2 = stage2_outage(m, q);
            const double emp = EmpiricalCdf::from_samples(sample_exact_max(*sp, 200000, 3))(q.threshold_magnitude);
            MESSAGE("W=" << w << " stage-2 " << s2 << " empirical " << emp);
            CHECK(s2 < prev_s2);
            CHECK(emp < prev_emp);
            prev_s2 = s2;
            prev_emp = emp;
        }
    }

    TEST_CASE("curves barely move with N and shift with W")
    {
        const std::size_t draws = 200000;
        auto empirical = [&](int n, double w) {
            return EmpiricalCdf::from_samples(sample_exact_max(*spectral(n, w, 10.0), draws, 4));
        };
        const EmpiricalCdf e40 = empirical(40, 1.0), e200 = empirical(200, 1.0), e200w4 = empirical(200, 4.0);
        CHECK(ks_distance(e40, e200) < 0.02);
        CHECK(ks_distance(e200, e200w4) > 0.2);

        const std::vector<double> grid = ks_grid(e200, 128);
        auto stage2_curve = [&](int n) {
            const FasConfig c{n, 1.0, 10.0, 0.0};
            const int reps[] = {select_replication(c)};
            return stage2_cdf_curves(make_stage1_model(spectral(n, 1.0, 10.0), epsilon_rank_formula(c)), reps, grid)[0];
        };
        CHECK(ks_distance(stage2_curve(40), stage2_curve(200)) < 0.02);
    }

    TEST_CASE("reference model against its sampler")
    {
        const FasConfig c{6, 1.0, 2.0, 0.0};
        const SpectralModel sp = make_spectral_model(c);
        const std::size_t draws = 300000;
        const EmpiricalCdf e = EmpiricalCdf::from_samples(sample_reference_max(sp, draws, 13));
        for (double r : {0.5, 1.0, 1.5, 2.0, 3.0}) {
            const double f = reference_cdf_fas1(c, r);
            CAPTURE(r);
            CHECK(std::fabs(f - e(r)) < oracle::dkw(draws, 0.01));
            CHECK(std::log(f) == doctest::Approx(reference_log_cdf_fas1(c, r)).epsilon(1e-9));
        }
        CHECK(reference_cdf_fas1(c, 0.0) == 0.0);
        CHECK(reference_cdf_fas1(c, 60.0) == doctest::Approx(1.0).epsilon(1e-10));
    }

    TEST_CASE("reference model is exact for two ports")
    {
        const FasConfig c{2, 0.3, 1.0, 0.0};
        const OutageQuery q = OutageQuery::from_config(c);
        const std::size_t draws = 1000000;
        const double emp = EmpiricalCdf::from_samples(sample_exact_max(make_spectral_model(c), draws, 14))(
            q.threshold_magnitude);
        const double ref = reference_outage_fas1(c, q);
        CHECK(std::fabs(ref - emp) < 3.0 * std::sqrt(emp * (1.0 - emp) / draws));
    }

    TEST_CASE("reference model tail values")
    {
        const double p10 = reference_outage_fas1({10, 1.0, 1.0, 0.0}, query(10, 1.0, 1.0, 0.0));
        const double p150 = reference_outage_fas1({150, 1.0, 1.0, 0.0}, query(150, 1.0, 1.0, 0.0));
        MESSAGE("N=10: " << p10 << ", N=150: " << p150);
        CHECK(std::fabs(std::log10(p10 / 1e-2)) <= 0.3);
        CHECK(std::fabs(std::log10(p150 / 1.52e-23)) <= 0.5);
        CHECK(reference_outage_fas1({10, 1.0, 1.0, -std::numeric_limits<double>::infinity()},
                                    query(10, 1.0, 1.0, -std::numeric_limits<double>::infinity())) == 0.0);
    }

    TEST_CASE("reference model rejects fully correlated ports")
    {
        // J0 of a 6e-10 argument rounds to exactly 1.
        CHECK_THROWS_AS(reference_cdf_fas1({2, 1e-10, 1.0, 0.0}, 1.0), DomainError);
    }

    TEST_CASE("power identity for the replicated max")
    {
        // The max over the N x R matrix G-hat has CDF F_max(r)^R.
        const Stage2Model m = make_stage2_model(make_stage1_model(spectral(5, 1.0, 1.0), 2), 2);
        const std::size_t draws = 200000;
        const EmpiricalCdf big = EmpiricalCdf::from_samples(sample_ghat_matrix(m, draws, 1).draw_max());
        const EmpiricalCdf one = EmpiricalCdf::from_samples(sample_stage1_max(m.stage1, draws, 2));
        for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const double r = big.quantile(p);
            const double f = one(r), g = big(r);
            const double se = std::sqrt(g * (1 - g) / draws + 4.0 * f * f * f * (1 - f) / draws);
            CAPTURE(p);
            CHECK(std::fabs(g - f * f) < 3.0 * se);
        }
    }
}

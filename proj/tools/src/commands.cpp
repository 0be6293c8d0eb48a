#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "fas/channel.hpp"
#include "fas/outage.hpp"

namespace fas::cli {

namespace {

int resolve_eps_rank(const CommonOptions& opt, const FasConfig& c)
{
    return opt.eps_rank ? *opt.eps_rank : epsilon_rank_formula(c);
}

int resolve_replication(const CommonOptions& opt, const FasConfig& c)
{
    return opt.replication ? *opt.replication : select_replication(c);
}

QuadratureSpec quad_spec(const CommonOptions& opt)
{
    QuadratureSpec q;
    q.nodes = opt.quad_nodes;
    q.validate();
    return q;
}

nlohmann::json base_params(const CommonOptions& opt)
{
    return {{"quad_nodes", opt.quad_nodes}, {"threads", opt.threads}};
}

}  // namespace

CommandResult cmd_eigencdf(const CommonOptions& opt, const std::vector<double>& thresholds)
{
    const FasConfig& c = opt.config;
    c.validate();
    const auto ev = jake_eigenvalues(c);
    const bool with_limit = c.n_ports >= 2 && c.spacing_below_half();

    Table t{"eigencdf", {"x", "fraction_above"}, {}};
    if (with_limit)
        t.columns.push_back("limit_fraction_above");
    for (double x : thresholds) {
        const auto above = std::count_if(ev.begin(), ev.end(), [x](long double s) { return s > x; });
        std::vector<Cell> row{x, static_cast<double>(above) / static_cast<double>(ev.size())};
        if (with_limit)
            row.emplace_back(1.0 - limiting_eigen_cdf(x, c.spacing(), c.sigma2));
        t.rows.push_back(std::move(row));
    }
    CommandResult out{{"eigencdf", {std::move(t)}, {}}, c, {}, {}};
    out.evaluator_params = {{"thresholds", thresholds}, {"limit_column", with_limit}};
    return out;
}

CommandResult cmd_cdf_compare(const CommonOptions& opt)
{
    const FasConfig& c = opt.config;
    c.validate();
    const int eps = resolve_eps_rank(opt, c);
    const int rep = resolve_replication(opt, c);
    const QuadratureSpec quad = quad_spec(opt);
    constexpr double kNegligible = 1e-12;

    auto spectral = std::make_shared<const SpectralModel>(make_spectral_model(c));
    const Stage1Model stage1 = make_stage1_model(spectral, eps);
    const EmpiricalCdf exact =
        EmpiricalCdf::from_samples(sample_exact_max(*spectral, opt.exact_draws, opt.seed, opt.threads));
    const std::vector<double> grid = ks_grid(exact, opt.grid_points);

    const auto s1 = stage1_cdf_curve(stage1, grid, opt.mc_draws, opt.seed, opt.threads, kNegligible);
    const int reps[1] = {rep};
    const std::vector<double> s2 = stage2_cdf_curves(stage1, reps, grid, quad, opt.threads)[0];
    std::vector<double> ref(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
        ref[j] = reference_cdf_fas1(c, grid[j], quad);

    Table curves{"curves", {"r", "empirical", "stage1", "stage1_stderr", "stage2", "reference"}, {}};
    std::vector<double> s1_values(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        s1_values[j] = s1[j].estimate;
        curves.rows.push_back({grid[j], exact(grid[j]), s1[j].estimate, s1[j].std_error, s2[j], ref[j]});
    }
    Table ks{"ks", {"model", "ks_distance"}, {}};
    ks.rows.push_back({std::string("stage1"), ks_distance(exact, grid, s1_values)});
    ks.rows.push_back({std::string("stage2"), ks_distance(exact, grid, s2)});
    ks.rows.push_back({std::string("reference"), ks_distance(exact, grid, ref)});

    CommandResult out{{"cdf-compare", {std::move(curves), std::move(ks)}, {}}, c, {opt.seed}, base_params(opt)};
    out.evaluator_params.update({{"eps_rank", eps},
                                 {"replication", rep},
                                 {"mc_draws", opt.mc_draws},
                                 {"exact_draws", opt.exact_draws},
                                 {"grid_points", opt.grid_points},
                                 {"stage1_negligible", kNegligible}});
    out.report.fields = {{"eps_rank", eps}, {"replication", rep}};
    return out;
}

CommandResult cmd_outage_sweep(const CommonOptions& opt, const SweepLists& lists)
{
    const FasConfig& base = opt.config;
    base.validate();
    const std::vector<int> ns = lists.n_list.empty() ? std::vector<int>{base.n_ports} : lists.n_list;
    const std::vector<double> ws = lists.w_list.empty() ? std::vector<double>{base.width} : lists.w_list;
    const std::vector<double> dbs =
        lists.snr_db_list.empty() ? std::vector<double>{base.snr_target_db} : lists.snr_db_list;
    const QuadratureSpec quad = quad_spec(opt);

    Table t{"outage",
            {"n_ports", "width", "snr_db", "eps_rank", "replication", "empirical", "empirical_stderr", "stage2",
             "reference", "log10_empirical", "log10_stage2", "log10_reference"},
            {}};
    for (int n : ns)
        for (double w : ws) {
            FasConfig c = base;
            c.n_ports = n;
            c.width = w;
            c.validate();
            const SpectralModel spectral = make_spectral_model(c);
            const EmpiricalCdf exact =
                EmpiricalCdf::from_samples(sample_exact_max(spectral, opt.mc_draws, opt.seed, opt.threads));
            std::shared_ptr<const SpectralModel> shared;
            std::optional<Stage2Model> model;
            int eps = 0, rep = 1;
            if (n >= 2) {
                shared = std::make_shared<const SpectralModel>(spectral);
                eps = resolve_eps_rank(opt, c);
                rep = resolve_replication(opt, c);
                model = make_stage2_model(make_stage1_model(shared, eps), rep);
            }
            for (double db : dbs) {
                c.snr_target_db = db;
                const OutageQuery q = OutageQuery::from_config(c);
                const double emp = exact.left(q.threshold_magnitude);
                const double se = std::sqrt(emp * (1.0 - emp) / static_cast<double>(opt.mc_draws));
                // A single port has no correlation structure: both models are the Rayleigh CDF.
                const double s2 = model ? stage2_outage(*model, q, quad)
                                        : rayleigh_max_cdf(q.threshold_magnitude, c.sigma2, 1);
                const double ref = n >= 2 ? reference_outage_fas1(c, q, quad)
                                          : rayleigh_max_cdf(q.threshold_magnitude, c.sigma2, 1);
                t.rows.push_back({static_cast<long long>(n), w, db, static_cast<long long>(eps),
                                  static_cast<long long>(rep), emp, se, s2, ref, std::log10(emp), std::log10(s2),
                                  std::log10(ref)});
            }
        }

    CommandResult out{{"outage-sweep", {std::move(t)}, {}}, base, {opt.seed}, base_params(opt)};
    out.evaluator_params.update({{"mc_draws", opt.mc_draws},
                                 {"n_list", ns},
                                 {"w_list", ws},
                                 {"snr_db_list", dbs},
                                 {"eps_rank_override", opt.eps_rank ? nlohmann::json(*opt.eps_rank) : nullptr},
                                 {"replication_override",
                                  opt.replication ? nlohmann::json(*opt.replication) : nullptr}});
    return out;
}

CommandResult cmd_fit_a(const FitArgs& args)
{
    const bool default_grid = args.n_list.empty() && args.w_list.empty();
    const std::vector<int> ns = args.n_list.empty() ? default_fit_n_grid() : args.n_list;
    const std::vector<double> ws = args.w_list.empty() ? default_fit_w_grid() : args.w_list;
    FitOptions fo;
    fo.a_step = args.a_step;
    fo.skip_invalid = args.skip_invalid || default_grid;
    const FitResult fit = fit_a_constant(ns, ws, fo);

    Table cells{"cells", {"n_ports", "width", "numeric_rank", "formula_rank", "residual"}, {}};
    for (const FitCell& cell : fit.cells) {
        const int formula = epsilon_rank_formula_raw(cell.n_ports, cell.width, fit.a);
        cells.rows.push_back({static_cast<long long>(cell.n_ports), cell.width,
                              static_cast<long long>(cell.numeric_rank), static_cast<long long>(formula),
                              static_cast<long long>(formula - cell.numeric_rank)});
    }
    Table summary{"fit", {"a", "interval_lo", "interval_hi", "interval_width", "mse", "skipped_pairs"}, {}};
    summary.rows.push_back({fit.a, fit.interval_lo, fit.interval_hi, fit.interval_hi - fit.interval_lo, fit.mse,
                            static_cast<long long>(fit.skipped.size())});

    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& [n, w] : fit.skipped)
        skipped.push_back({n, w});
    CommandResult out{{"fit-a", {std::move(summary), std::move(cells)}, {}}, FasConfig{}, {}, {}};
    out.report.fields = {{"a", fit.a},
                         {"interval", {fit.interval_lo, fit.interval_hi}},
                         {"interval_width", fit.interval_hi - fit.interval_lo},
                         {"mse", fit.mse},
                         {"grid", {{"n", ns}, {"w", ws}}},
                         {"skipped", skipped}};
    out.evaluator_params = {{"a_step", args.a_step}, {"skip_invalid", fo.skip_invalid}, {"default_grid", default_grid}};
    return out;
}

}  // namespace fas::cli

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "fas/covariance.hpp"
#include "output.hpp"

namespace fas::cli {

struct CommonOptions {
    FasConfig config;
    std::optional<int> eps_rank;     // default: epsilon_rank_formula(config)
    std::optional<int> replication;  // default: select_replication(config)
    std::size_t mc_draws = 100000;
    std::size_t exact_draws = 1000000;
    std::uint64_t seed = 1;
    int quad_nodes = 96;
    unsigned threads = 0;
    std::size_t grid_points = 512;
};

struct CommandResult {
    Report report;
    FasConfig config;
    std::vector<std::uint64_t> seeds;
    nlohmann::json evaluator_params = nlohmann::json::object();
};

CommandResult cmd_eigencdf(const CommonOptions& opt, const std::vector<double>& thresholds);

CommandResult cmd_cdf_compare(const CommonOptions& opt);

struct SweepLists {
    std::vector<int> n_list;        // empty: config.n_ports only
    std::vector<double> w_list;     // empty: config.width only
    std::vector<double> snr_db_list; // empty: config.snr_target_db only
};

CommandResult cmd_outage_sweep(const CommonOptions& opt, const SweepLists& lists);

struct FitArgs {
    std::vector<int> n_list;     // empty: default grid
    std::vector<double> w_list;  // empty: default grid
    double a_step = 1e-4;
    bool skip_invalid = false;   // implied for the default grid
};

CommandResult cmd_fit_a(const FitArgs& args);

}  // namespace fas::cli

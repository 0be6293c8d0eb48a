#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fas::validation {

struct Check {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::string detail;  // what was compared, and which inputs it depends on
};

enum class Level { quick, full };

struct Options {
    Level level = Level::quick;
    // J0 under test. Empty means fas::bessel_j0. A faulty callable here makes
    // the specfun checks fail and the Jake-entry check cascade.
    std::function<double(double)> j0;
    unsigned threads = 0;
    std::uint64_t seed = 20240601;
    // Called after each check, for streaming progress.
    std::function<void(const Check&)> on_check;
};

// quick: special functions, covariance identities, small-N channel and outage
// checks (seconds). full: adds the Monte Carlo and figure-level checks (minutes).
std::vector<Check> run(const Options& options);

bool all_passed(const std::vector<Check>& checks);

}  // namespace fas::validation

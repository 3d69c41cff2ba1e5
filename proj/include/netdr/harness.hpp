#ifndef NETDR_HARNESS_HPP
#define NETDR_HARNESS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netdr/estimator.hpp"
#include "netdr/inference.hpp"
#include "netdr/sim.hpp"

namespace netdr {

enum class Scenario { BothCorrect, MisspecifiedOutcome, MisspecifiedPropensity };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

struct TruthControls {
    int replications = 512;       // allocation/covariate draws
    int l_burn_in = 400;          // covariate-chain burn-in sweeps
    int l_stride = 4;             // covariate sweeps between draws
    GibbsControls gibbs{40, 40};  // outcome-chain controls per draw
};

struct TruthResult {
    std::map<Estimand, double> value;
    std::map<Estimand, double> mc_error;  // batch-means standard error
};

// Table-1 estimands under the true parameters: averages over covariate-layer
// draws and Bernoulli(alpha) allocations, pinned arms by indicator weighting.
TruthResult compute_truth(const Network& net, const SimParams& params, double alpha,
                          double alpha_prime, const TruthControls& controls, std::uint64_t seed);

struct ScenarioConfig {
    int n = 800;
    int m = 1;
    int max_degree = 2;
    Scenario scenario = Scenario::BothCorrect;
    double alpha = 0.7;
    double alpha_prime = 0.3;
    std::vector<Estimand> estimands{Estimand::Gamma, Estimand::DE, Estimand::IE, Estimand::IE2};
    int replicates = 500;
    int burn_in = 2000;
    int thin = 1;
    std::uint64_t seed = 20240817;
    int K = 1;
    double clip_floor = 2e-3;
    int enumeration_cap = kDefaultEnumerationCap;
    EstimandRequest::Mode mode = EstimandRequest::Mode::Exact;
    int mc_draws = 200;
    KernelSpec kernel{};
    double ci_level = 0.95;
    bool run_auto_g = true;
    AutoGControls auto_g{};
    TruthControls truth{};
    bool redraw_network = false;  // one fixed graph per cell by default
    SimParams base_params;        // theta[1], theta[2] rescaled by m unless customized
    bool custom_params = false;

    SimParams params() const;
};

struct EstimandStats {
    double truth = 0.0;
    double truth_mc_error = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double coverage = 0.0;
    double mean_ci_halfwidth = 0.0;
    double auto_g_bias = 0.0;
    double auto_g_rmse = 0.0;
    long clipped_total = 0;
    std::vector<double> trace;         // per-replicate estimates
    std::vector<double> auto_g_trace;  // empty when Auto-G disabled
};

struct MCResult {
    ScenarioConfig config;
    std::map<Estimand, EstimandStats> stats;
    int completed_replicates = 0;
    int failed_replicates = 0;
};

MCResult run_experiment(const ScenarioConfig& config);

// Table-shaped emission keyed by (estimand, scenario, m, max_degree).
void write_mc_csv(const std::vector<MCResult>& results, const std::string& path);
nlohmann::json mc_results_json(const std::vector<MCResult>& results);

} // namespace netdr

#endif

#ifndef NETDR_IO_HPP
#define NETDR_IO_HPP

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netdr/estimator.hpp"
#include "netdr/graph.hpp"
#include "netdr/harness.hpp"
#include "netdr/inference.hpp"
#include "netdr/sim.hpp"

namespace netdr {

// Edge list with arbitrary string node ids; ids are mapped to dense integers
// in first-appearance order.
struct NamedNetwork {
    Network net;
    std::vector<std::string> names;  // dense id -> external id
};

NamedNetwork read_named_edge_list(const std::string& path);

// Node CSV: header "id,y,a,l1,l2,...". Outcome/treatment must be 0/1;
// covariates may be arbitrary reals. Rows are matched to the network by id;
// isolated nodes are permitted (present in the CSV, absent from edges).
Dataset read_node_csv(const std::string& path, NamedNetwork& named);
void write_node_csv(const Dataset& data, const std::vector<std::string>& names,
                    const std::string& path);

struct EstimandRequestConfig {
    Estimand kind = Estimand::Gamma;
    double alpha = 0.5;
    double alpha_prime = 0.2;
};

struct AnalysisConfig {
    std::string edge_list;
    std::string nodes_csv;
    std::vector<EstimandRequestConfig> estimands;
    int K = 1;
    KernelSpec kernel{};
    double ci_level = 0.95;
    double clip_floor = 2e-3;
    int enumeration_cap = kDefaultEnumerationCap;
    EstimandRequest::Mode mode = EstimandRequest::Mode::Exact;
    int mc_draws = 200;
    bool run_auto_g = true;
    AutoGControls auto_g{};
    std::uint64_t seed = 1;
    std::string output;

    static AnalysisConfig from_json(const nlohmann::json& j);
};

// Per-estimand report rows plus nuisance summaries and diagnostics.
nlohmann::json analyze(const AnalysisConfig& config);

struct SimulateConfig {
    int n = 800;
    int m = 1;
    int max_degree = 2;
    SimParams params;      // table defaults for m unless overridden
    bool custom_params = false;
    int n_iter = 10000;
    int burn_in = 2000;
    int thin = 1;
    int take = 1;          // how many final retained snapshots to write
    std::uint64_t seed = 20240817;
    std::string output_dir = ".";

    static SimulateConfig from_json(const nlohmann::json& j);
};

std::vector<std::string> run_simulate(const SimulateConfig& config);

struct McCliConfig {
    std::vector<std::pair<int, int>> cells{{1, 2}};
    std::vector<Scenario> scenarios{Scenario::MisspecifiedOutcome};
    ScenarioConfig base;  // shared knobs (n, replicates, seeds, estimands, ...)
    std::string output_prefix = "mc";

    static McCliConfig from_json(const nlohmann::json& j);
};

std::vector<std::string> run_mc(const McCliConfig& config);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);

} // namespace netdr

#endif

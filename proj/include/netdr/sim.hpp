#ifndef NETDR_SIM_HPP
#define NETDR_SIM_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netdr/graph.hpp"

namespace netdr {

inline double expit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Aligned per-node outcome/treatment/covariate data. The simulator produces
// three binary covariate columns; ingested data may have any width.
struct Dataset {
    std::vector<int> y;
    std::vector<int> a;
    std::vector<std::vector<double>> l;  // n rows, covariate_count() columns

    int n() const { return static_cast<int>(y.size()); }
    int covariate_count() const { return l.empty() ? 0 : static_cast<int>(l[0].size()); }
};

// Chain-graph generative parameters. tau/rho/nu drive the covariate layer,
// eta the treatment conditional (eta[7] is the pairwise interaction), theta
// the outcome conditional (theta[9] is the pairwise interaction). K is the
// interference radius: neighbor sums run over N(i,K) \ {i}.
struct SimParams {
    std::array<double, 3> tau{};
    double rho12 = 0, rho13 = 0, rho23 = 0;
    std::array<std::array<double, 3>, 3> nu{};
    std::array<double, 8> eta{};
    std::array<double, 10> theta{};
    int K = 1;

    // Table-layout defaults; theta[1] = -m and theta[2] = -2m scale with the
    // BA density parameter m.
    static SimParams table_defaults(int m);
};

void to_json(nlohmann::json& j, const SimParams& p);
void from_json(const nlohmann::json& j, const SimParams& p) = delete;
SimParams sim_params_from_json(const nlohmann::json& j);

struct GibbsControls {
    int burn_in = 30;
    int keep = 40;
};

// Sequential-scan Gibbs sampler for the three-layer DGP. One iteration is a
// full covariate sweep, then a treatment sweep, then an outcome sweep, each
// in ascending node order.
class ChainGraphSimulator {
public:
    ChainGraphSimulator(const Network& net, SimParams params, std::uint64_t seed);

    void sweep_covariates();
    void sweep_treatments();
    void sweep_outcomes();
    void iterate();
    Dataset snapshot() const;

    // Full conditionals (probability the site is 1 given the current state).
    double covariate_conditional(int i, int k) const;
    double treatment_conditional(int i) const;
    double outcome_conditional(int i) const;

    const std::vector<std::vector<int>>& interaction_neighbors() const { return nbrs_; }
    std::mt19937_64& rng() { return rng_; }

private:
    const Network& net_;
    SimParams params_;
    std::vector<std::vector<int>> nbrs_;  // N(i,K) \ {i}
    std::vector<std::array<double, 3>> l_;
    std::vector<int> a_, y_;
    std::mt19937_64 rng_;
};

// Streams one Dataset per retained iteration (post burn-in, stride `thin`).
// All states initialize as fair coin flips; deterministic given seed.
void simulate_stream(const Network& net, const SimParams& params, int n_iter, int burn_in,
                     int thin, std::uint64_t seed,
                     const std::function<void(int, const Dataset&)>& sink);

// Logistic outcome conditional in reduced form:
//   P(Y_i = 1 | .) = expit(offset_i + own * a_i + nbr * sum_{j in N_i^-} a_j
//                            + lag * sum_{j in N_i^-} y_j).
// Covers both the true DGP (offset built from theta and L) and any fitted
// auto-model whose non-treatment features are fixed per node.
struct OutcomeField {
    std::vector<double> offset;
    double own = 0.0;
    double nbr = 0.0;
    double lag = 0.0;
};

OutcomeField make_outcome_field(const Network& net, int K, const std::array<double, 10>& theta,
                                const std::vector<std::vector<double>>& l);

// Stationary mean of Y_i under a fixed treatment vector: Gibbs with burn-in
// then sweep-averaging; exact closed form when lag == 0.
std::vector<double> stationary_outcome_means(const Network& net, int K, const OutcomeField& field,
                                             const std::vector<int>& a, const GibbsControls& gc,
                                             std::mt19937_64& rng);

struct AllocationPolicy;  // defined in propensity.hpp

// Per-node mean of Y_i(a) across `replications` allocation draws from the
// policy (and retained sweeps within each draw).
std::vector<double> counterfactual_outcome_mean(const Network& net, int K, const OutcomeField& field,
                                                const AllocationPolicy& policy, const GibbsControls& gc,
                                                int replications, std::uint64_t seed);

// Allocation-arm responses under iid Bernoulli(alpha) draws, all from shared
// chains: value_i estimates E[Y_i(a)], treated_i estimates E[Y_i(a_{-i}, 1)]
// via the indicator-weight identity E[1{a_i=1}/alpha * m_i(a)], and likewise
// control_i for a_i = 0.
struct ArmMeans {
    std::vector<double> value;
    std::vector<double> treated;
    std::vector<double> control;
};

ArmMeans allocation_response(const Network& net, int K, const OutcomeField& field, double alpha,
                             int replications, const GibbsControls& gc, std::uint64_t seed);

} // namespace netdr

#endif

#ifndef NETDR_PROPENSITY_HPP
#define NETDR_PROPENSITY_HPP

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "netdr/graph.hpp"
#include "netdr/model.hpp"

namespace netdr {

// Chain-graph treatment energy restricted to per-node main effects plus a
// single pairwise coefficient on unit-weight interactions:
//   U(a) = sum_i a_i field[i] + pair_coef * sum_{d(i,j)<=K, i<j} a_i a_j.
struct EnergySpec {
    std::vector<double> field;
    double pair_coef = 0.0;
    int K = 1;
};

// Main-effect field and pairwise coefficient implied by a fitted treatment
// model; requires the spec to carry exactly one NeighborTreatmentSum feature.
EnergySpec energy_from_nuisance(const Network& net, const Dataset& data, const FittedNuisance& fit);

// The neighborhood N(i,K) in local index order (own unit first), its internal
// interaction pairs, and main effects with the clamped boundary treatments
// folded in.
struct LocalNeighborhood {
    std::vector<int> nodes;                      // nodes[0] == i
    std::vector<std::pair<int, int>> pairs;      // local index pairs, d(u,v) <= K
    std::vector<double> eff_field;               // field + pair_coef * clamped boundary
    std::vector<double> boundary_treated;        // per local node: sum of clamped A_j
    std::uint32_t observed_mask = 0;

    static LocalNeighborhood build(const Network& net, const EnergySpec& energy,
                                   const std::vector<int>& a_obs, int i);
    int size() const { return static_cast<int>(nodes.size()); }
};

inline constexpr int kDefaultEnumerationCap = 20;

// Exact chain-graph neighborhood propensity: exp{U restricted}/sum over all
// 2^|N(i,K)| configurations, boundary treatments held at observed values.
// Throws std::runtime_error when |N(i,K)| exceeds the cap.
double joint_propensity_exact(const Network& net, const EnergySpec& energy,
                              const std::vector<int>& a_obs, int i,
                              const std::map<int, int>& a_target,
                              int enumeration_cap = kDefaultEnumerationCap);

// As above for the observed configuration itself (the AAIPW denominator).
double observed_joint_propensity(const Network& net, const EnergySpec& energy,
                                 const std::vector<int>& a_obs, int i,
                                 int enumeration_cap = kDefaultEnumerationCap);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    bool reliable = false;
};

// Gibbs approximation of the same conditional probability; boundary clamped,
// batch-means standard error (autocorrelation-inflated).
McEstimate joint_propensity_mc(const Network& net, const EnergySpec& energy,
                               const std::vector<int>& a_obs, int i,
                               const std::map<int, int>& a_target, int sweeps,
                               std::mt19937_64& rng);

// Exposure mappings over the local configuration. Values are encoded as
// integer keys so they can index accumulators.
struct ExposureMap {
    enum class Kind { OwnTreatment, OwnAndNeighborCount, FullConfig };
    Kind kind = Kind::OwnAndNeighborCount;

    std::uint64_t key(std::uint32_t local_mask, int local_size) const;
};

std::uint64_t observed_exposure(const Network& net, const EnergySpec& energy,
                                const std::vector<int>& a_obs, int i, const ExposureMap& map);

// P(T_i = t | boundary) = sum of joint propensities over configurations with
// T(a) = t. Returns 0 for unattainable t (positivity violation upstream).
double exposure_propensity(const Network& net, const EnergySpec& energy,
                           const std::vector<int>& a_obs, int i, const ExposureMap& map,
                           std::uint64_t t, int enumeration_cap = kDefaultEnumerationCap);

// Full exposure distribution (keys ascending; probabilities sum to 1).
std::vector<std::pair<std::uint64_t, double>> exposure_distribution(
    const Network& net, const EnergySpec& energy, const std::vector<int>& a_obs, int i,
    const ExposureMap& map, int enumeration_cap = kDefaultEnumerationCap);

// Hypothetical allocation regime pi(.; alpha): iid Bernoulli(alpha) with
// optional pinned coordinates, or a fixed vector.
struct AllocationPolicy {
    enum class Kind { Bernoulli, FixedVector, BernoulliWithPins };
    Kind kind = Kind::Bernoulli;
    double alpha = 0.5;
    std::vector<int> fixed;
    std::map<int, int> pins;

    static AllocationPolicy bernoulli(double alpha);
    static AllocationPolicy fixed_vector(std::vector<int> a);
    static AllocationPolicy bernoulli_with_pins(double alpha, std::map<int, int> pins);

    std::vector<int> draw(int n, std::mt19937_64& rng) const;
};

// Probability the policy assigns to a_local (node -> value): product of
// alpha^{a_j}(1-alpha)^{1-a_j} over unpinned nodes times pin indicators.
double allocation_weight(const std::map<int, int>& a_local, const AllocationPolicy& policy);

} // namespace netdr

#endif

#ifndef NETDR_ESTIMATOR_HPP
#define NETDR_ESTIMATOR_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netdr/graph.hpp"
#include "netdr/model.hpp"
#include "netdr/propensity.hpp"
#include "netdr/sim.hpp"

namespace netdr {

enum class Estimand { Gamma, DE, IE, IE2 };

std::string estimand_name(Estimand e);
Estimand estimand_from_name(const std::string& name);

struct EstimandRequest {
    Estimand kind = Estimand::Gamma;
    double alpha = 0.7;
    double alpha_prime = 0.3;  // IE2 only
    int K = 1;
    enum class Mode { Exact, MC } mode = Mode::Exact;
    int mc_draws = 200;
    int enumeration_cap = kDefaultEnumerationCap;
    double clip_floor = 2e-3;  // pi_hat below this is clipped before inversion
};

struct UnitScore {
    int node = 0;
    double w = 0.0;
    double ipw_part = 0.0;
    double reg_part = 0.0;
    bool clipped = false;
};

// Single-unit AAIPW score at a fixed neighborhood assignment:
//   W_i = 1{A_Ni = a_local}/pi_hat * (Y_i - beta_hat_{a_local}) + beta_hat_{a_local}.
UnitScore aaipw_score(const Network& net, const Dataset& data, const FittedNuisance& fit, int i,
                      const std::map<int, int>& a_local, double clip_floor = 2e-3,
                      int enumeration_cap = kDefaultEnumerationCap);

// Exposure-mapped variant: indicator and propensity are marginalized over the
// exposure class of t; the regression part is evaluated at a_ref.
UnitScore exposure_aaipw_score(const Network& net, const Dataset& data, const FittedNuisance& fit,
                               int i, const ExposureMap& map, std::uint64_t t,
                               const std::map<int, int>& a_ref, double clip_floor = 2e-3,
                               int enumeration_cap = kDefaultEnumerationCap);

struct EstimandEstimate {
    double point = 0.0;
    std::vector<double> scores;  // per-unit allocation-averaged scores
    long clipped_count = 0;
    int mc_propensity_units = 0;  // units whose neighborhood exceeded the cap
    // Influence-function ingredients (filled when requested): per-unit rows of
    // d(score)/d(theta) and of the propensity-direction term
    // Q(obs)/pi * resid * dlog pi/d(eta).
    Eigen::MatrixXd h_outcome;
    Eigen::MatrixXd h_treatment;
    bool has_if_terms = false;
};

// Allocation-averaged AAIPW point estimate with per-unit scores. Exact mode
// integrates the Bernoulli(alpha) allocation analytically (with the estimand's
// own-unit pins); MC mode averages over mc_draws shared allocation draws.
EstimandEstimate estimate(const Network& net, const Dataset& data, const FittedNuisance& fit,
                          const EstimandRequest& request, std::uint64_t seed,
                          bool with_if_terms = false);

struct AutoGControls {
    int replications = 16;
    GibbsControls gibbs{20, 40};
};

// Auto-G baseline: Gibbs-simulates counterfactual outcomes from the fitted
// outcome model (observed covariates/noise held fixed) and applies the
// estimand arithmetic.
double auto_g_estimate(const Network& net, const Dataset& data, const FittedNuisance& fit,
                       const EstimandRequest& request, const AutoGControls& controls,
                       std::uint64_t seed);

// Reduced outcome conditional implied by a fitted outcome model.
OutcomeField outcome_field_from_nuisance(const Network& net, const Dataset& data,
                                         const FittedNuisance& fit);

} // namespace netdr

#endif

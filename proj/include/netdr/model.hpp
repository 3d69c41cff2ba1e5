#ifndef NETDR_MODEL_HPP
#define NETDR_MODEL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netdr/graph.hpp"
#include "netdr/sim.hpp"

namespace netdr {

// Feature generators over (net, data, i). Neighbor sums run over N(i,K)\{i}.
enum class FeatureKind {
    Intercept,
    OwnCovariate,          // index = covariate column
    NeighborCovariateSum,  // index = covariate column
    OwnTreatment,
    NeighborTreatmentSum,
    NeighborOutcomeSum,
    Noise,                 // index = noise column, iid Bernoulli(0.5) per replicate
};

struct Feature {
    FeatureKind kind;
    int index = -1;
};

struct ModelSpec {
    enum class Target { Outcome, Treatment };
    Target target = Target::Outcome;
    std::vector<Feature> features;
    int K = 1;

    int feature_count() const { return static_cast<int>(features.size()); }
    int noise_count() const;
    std::string describe() const;

    // Outcome: intercept, A_i, sum A_j, per-covariate own/sum pairs, sum Y_j.
    static ModelSpec canonical_outcome(int covariate_count, int K);
    // Treatment: intercept, per-covariate own/sum pairs, sum A_j (last).
    static ModelSpec canonical_treatment(int covariate_count, int K);
    // Adversarial variant: every non-treatment input (covariate features and,
    // for the outcome model, the neighbor-outcome sum) becomes a fresh noise
    // column; intercept and treatment features are kept.
    ModelSpec misspecified() const;
};

// Realized design context for one dataset: neighbor lists at radius K plus
// any noise columns drawn for this replicate.
struct DesignContext {
    std::vector<std::vector<int>> nbrs;  // N(i,K) \ {i}
    Eigen::MatrixXd noise;               // n x noise_count

    static DesignContext make(const Network& net, const ModelSpec& spec, int n,
                              std::uint64_t noise_seed);
};

Eigen::VectorXd build_features(const Network& net, const Dataset& data, const ModelSpec& spec,
                               const DesignContext& ctx, int i);
Eigen::MatrixXd build_design(const Network& net, const Dataset& data, const ModelSpec& spec,
                             const DesignContext& ctx);

struct LogisticFit {
    Eigen::VectorXd coef;
    bool converged = false;
    bool separation = false;
    bool ridged = false;
    double max_grad = 0.0;
    int iterations = 0;
};

// Damped-Newton maximizer of the logistic pseudo-likelihood
// sum_i y_i log p_i + (1-y_i) log(1-p_i). Converged when max |gradient|
// < 1e-8 (at most 100 iterations); rank-deficient designs fall back to a
// 1e-8 ridge and are flagged; perfect separation returns the best iterate
// with converged = false.
LogisticFit fit_logistic_pl(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct FittedNuisance {
    ModelSpec outcome_spec, treatment_spec;
    DesignContext outcome_ctx, treatment_ctx;
    Eigen::VectorXd theta_hat, eta_hat;
    LogisticFit outcome_fit, treatment_fit;
    Eigen::MatrixXd outcome_scores, treatment_scores;      // per-node score rows
    Eigen::MatrixXd outcome_jacobian, treatment_jacobian;  // mean d(score)/d(coef)
};

// Pooled pseudo-likelihood fits of both nuisance models on one dataset.
// noise_seed drives any noise columns in misspecified specs.
FittedNuisance fit_nuisances(const Network& net, const Dataset& data, const ModelSpec& outcome_spec,
                             const ModelSpec& treatment_spec, std::uint64_t noise_seed);

// beta_{a_local}(X_i^y; theta_hat): expit over the outcome features with
// treatment entries replaced by a_local (node -> 0/1 over N(i,K)) and
// covariates/neighbor outcomes at observed values.
double eval_outcome_mean(const Network& net, const Dataset& data, const FittedNuisance& fit, int i,
                         const std::map<int, int>& a_local);

} // namespace netdr

#endif

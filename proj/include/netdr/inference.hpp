#ifndef NETDR_INFERENCE_HPP
#define NETDR_INFERENCE_HPP

#include <utility>
#include <vector>

#include "netdr/estimator.hpp"
#include "netdr/graph.hpp"
#include "netdr/model.hpp"

namespace netdr {

struct KernelSpec {
    enum class Kind { Bartlett, Truncated } kind = Kind::Bartlett;
    double bandwidth = 5.0;  // default 2(K+1)+1 for K=1

    // weight(0) = 1; zero for s >= bandwidth. Bartlett: max(0, 1 - s/b).
    double weight(int s) const;
    static double default_bandwidth(int K) { return 2.0 * (K + 1) + 1.0; }
};

struct HacResult {
    double lambda = 0.0;
    std::vector<double> per_lag;  // Omega_hat(s) for s = 0..max lag
    bool floored = false;         // negative estimate floored at the s=0 term
};

// Network HAC: Lambda_hat = sum_s w(s) * Omega_hat(s) with
// Omega_hat(s) = n^-1 sum_i sum_{j: d(i,j)=s} (W_i - mu)(W_j - mu).
HacResult hac_variance(const std::vector<double>& scores, const Network& net,
                       const KernelSpec& kernel);
// Variant with precomputed shells: shells[i][s] lists nodes at distance s from i.
HacResult hac_variance(const std::vector<double>& scores,
                       const std::vector<std::vector<std::vector<int>>>& shells,
                       const KernelSpec& kernel);

std::vector<std::vector<std::vector<int>>> all_shells(const Network& net, int smax);

// Normal-approximation interval mu_hat +/- z_{(1+level)/2} sqrt(lambda/n).
std::pair<double, double> confidence_interval(double mu_hat, double lambda_hat, int n,
                                              double level);

struct IfCorrection {
    std::vector<double> scores;  // corrected per-unit W values
    Eigen::RowVectorXd m1, m2;   // sample means of the H rows
    bool applied = false;        // false when a score Jacobian was singular
};

// Influence-function correction of Theorem-5 form: subtracts the estimated
// nuisance-estimation contribution from each unit score. Requires the
// estimate to carry IF ingredients (with_if_terms = true).
IfCorrection if_corrected_scores(const FittedNuisance& fit, const EstimandEstimate& est);

} // namespace netdr

#endif

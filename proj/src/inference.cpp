#include "netdr/inference.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace netdr {

double KernelSpec::weight(int s) const {
    if (s == 0) return 1.0;
    if (bandwidth <= 0.0) return 0.0;
    switch (kind) {
        case Kind::Bartlett:
            return std::max(0.0, 1.0 - s / bandwidth);
        case Kind::Truncated:
            return s < bandwidth ? 1.0 : 0.0;
    }
    return 0.0;
}

std::vector<std::vector<std::vector<int>>> all_shells(const Network& net, int smax) {
    std::vector<std::vector<std::vector<int>>> out(net.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < net.size(); ++i) out[i] = net.shells(i, smax);
    return out;
}

HacResult hac_variance(const std::vector<double>& scores,
                       const std::vector<std::vector<std::vector<int>>>& shells,
                       const KernelSpec& kernel) {
    const int n = static_cast<int>(scores.size());
    if (n == 0) throw std::invalid_argument("empty scores");
    double mu = 0.0;
    for (double w : scores) mu += w;
    mu /= n;

    int max_lag = 0;
    while (kernel.weight(max_lag + 1) > 0.0) ++max_lag;

    HacResult out;
    out.per_lag.assign(max_lag + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        double ei = scores[i] - mu;
        out.per_lag[0] += ei * ei;
        const auto& sh = shells[i];
        for (int s = 1; s <= max_lag && s < static_cast<int>(sh.size()); ++s)
            for (int j : sh[s]) out.per_lag[s] += ei * (scores[j] - mu);
    }
    for (auto& v : out.per_lag) v /= n;

    double lambda = 0.0;
    for (int s = 0; s <= max_lag; ++s) lambda += kernel.weight(s) * out.per_lag[s];
    if (lambda < 0.0) {
        out.floored = true;
        lambda = out.per_lag[0];
    }
    out.lambda = lambda;
    return out;
}

HacResult hac_variance(const std::vector<double>& scores, const Network& net,
                       const KernelSpec& kernel) {
    if (static_cast<int>(scores.size()) != net.size())
        throw std::invalid_argument("scores not aligned to network");
    int max_lag = 0;
    while (kernel.weight(max_lag + 1) > 0.0) ++max_lag;
    return hac_variance(scores, all_shells(net, max_lag), kernel);
}

std::pair<double, double> confidence_interval(double mu_hat, double lambda_hat, int n,
                                              double level) {
    if (lambda_hat < 0.0) throw std::invalid_argument("negative variance");
    if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("level must lie in (0,1)");
    boost::math::normal_distribution<double> norm;
    double z = boost::math::quantile(norm, 0.5 * (1.0 + level));
    double half = z * std::sqrt(lambda_hat / n);
    return {mu_hat - half, mu_hat + half};
}

IfCorrection if_corrected_scores(const FittedNuisance& fit, const EstimandEstimate& est) {
    if (!est.has_if_terms)
        throw std::invalid_argument("estimate lacks influence-function ingredients");
    const int n = static_cast<int>(est.scores.size());
    IfCorrection out;
    out.scores = est.scores;
    // M1: propensity direction (mean of H2 rows); M2: outcome direction (mean
    // of H1 rows); M3/M4: score Jacobians from the pseudo-likelihood fits.
    out.m1 = est.h_treatment.colwise().mean();
    out.m2 = est.h_outcome.colwise().mean();

    Eigen::FullPivLU<Eigen::MatrixXd> lu3(fit.outcome_jacobian);
    Eigen::FullPivLU<Eigen::MatrixXd> lu4(fit.treatment_jacobian);
    if (!lu3.isInvertible() || !lu4.isInvertible()) {
        out.applied = false;  // fall back to uncorrected scores
        return out;
    }
    // W_i - M1 IF_eta + M2 IF_theta, with IF = -M^{-1} g_i.
    Eigen::RowVectorXd r_eta = lu4.transpose().solve(out.m1.transpose()).transpose();
    Eigen::RowVectorXd r_theta = lu3.transpose().solve(out.m2.transpose()).transpose();
    for (int i = 0; i < n; ++i) {
        double corr = r_eta.dot(fit.treatment_scores.row(i)) -
                      r_theta.dot(fit.outcome_scores.row(i));
        out.scores[i] += corr;
    }
    out.applied = true;
    return out;
}

} // namespace netdr

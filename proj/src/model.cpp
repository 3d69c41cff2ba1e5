#include "netdr/model.hpp"

#include <cmath>
#include <stdexcept>

#include "netdr/rng.hpp"

namespace netdr {

int ModelSpec::noise_count() const {
    int c = 0;
    for (const auto& f : features)
        if (f.kind == FeatureKind::Noise) ++c;
    return c;
}

std::string ModelSpec::describe() const {
    std::string out;
    for (const auto& f : features) {
        if (!out.empty()) out += "+";
        switch (f.kind) {
            case FeatureKind::Intercept: out += "1"; break;
            case FeatureKind::OwnCovariate: out += "l" + std::to_string(f.index + 1); break;
            case FeatureKind::NeighborCovariateSum: out += "sum_l" + std::to_string(f.index + 1); break;
            case FeatureKind::OwnTreatment: out += "a"; break;
            case FeatureKind::NeighborTreatmentSum: out += "sum_a"; break;
            case FeatureKind::NeighborOutcomeSum: out += "sum_y"; break;
            case FeatureKind::Noise: out += "noise" + std::to_string(f.index + 1); break;
        }
    }
    return out;
}

ModelSpec ModelSpec::canonical_outcome(int covariate_count, int K) {
    ModelSpec s;
    s.target = Target::Outcome;
    s.K = K;
    s.features.push_back({FeatureKind::Intercept});
    s.features.push_back({FeatureKind::OwnTreatment});
    s.features.push_back({FeatureKind::NeighborTreatmentSum});
    for (int c = 0; c < covariate_count; ++c) {
        s.features.push_back({FeatureKind::OwnCovariate, c});
        s.features.push_back({FeatureKind::NeighborCovariateSum, c});
    }
    s.features.push_back({FeatureKind::NeighborOutcomeSum});
    return s;
}

ModelSpec ModelSpec::canonical_treatment(int covariate_count, int K) {
    ModelSpec s;
    s.target = Target::Treatment;
    s.K = K;
    s.features.push_back({FeatureKind::Intercept});
    for (int c = 0; c < covariate_count; ++c) {
        s.features.push_back({FeatureKind::OwnCovariate, c});
        s.features.push_back({FeatureKind::NeighborCovariateSum, c});
    }
    s.features.push_back({FeatureKind::NeighborTreatmentSum});
    return s;
}

ModelSpec ModelSpec::misspecified() const {
    ModelSpec s = *this;
    int noise_idx = 0;
    for (auto& f : s.features) {
        switch (f.kind) {
            case FeatureKind::OwnCovariate:
            case FeatureKind::NeighborCovariateSum:
            case FeatureKind::NeighborOutcomeSum:
                f = {FeatureKind::Noise, noise_idx++};
                break;
            default:
                break;
        }
    }
    return s;
}

DesignContext DesignContext::make(const Network& net, const ModelSpec& spec, int n,
                                  std::uint64_t noise_seed) {
    DesignContext ctx;
    ctx.nbrs.resize(n);
    for (int i = 0; i < n; ++i) {
        if (spec.K == 1) {
            ctx.nbrs[i] = net.neighbors(i);
        } else {
            for (int j : net.neighborhood(i, spec.K))
                if (j != i) ctx.nbrs[i].push_back(j);
        }
    }
    const int nc = spec.noise_count();
    ctx.noise.resize(n, nc);
    if (nc > 0) {
        auto rng = make_rng(noise_seed);
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < nc; ++c) ctx.noise(i, c) = bernoulli(rng, 0.5) ? 1.0 : 0.0;
    }
    return ctx;
}

Eigen::VectorXd build_features(const Network& net, const Dataset& data, const ModelSpec& spec,
                               const DesignContext& ctx, int i) {
    if (i < 0 || i >= data.n()) throw std::out_of_range("node id out of range");
    (void)net;
    Eigen::VectorXd x(spec.feature_count());
    const auto& nbr = ctx.nbrs[i];
    for (int f = 0; f < spec.feature_count(); ++f) {
        const auto& ft = spec.features[f];
        double v = 0.0;
        switch (ft.kind) {
            case FeatureKind::Intercept:
                v = 1.0;
                break;
            case FeatureKind::OwnCovariate:
                if (ft.index >= data.covariate_count())
                    throw std::invalid_argument("spec references covariate column beyond data width");
                v = data.l[i][ft.index];
                break;
            case FeatureKind::NeighborCovariateSum:
                if (ft.index >= data.covariate_count())
                    throw std::invalid_argument("spec references covariate column beyond data width");
                for (int j : nbr) v += data.l[j][ft.index];
                break;
            case FeatureKind::OwnTreatment:
                v = data.a[i];
                break;
            case FeatureKind::NeighborTreatmentSum:
                for (int j : nbr) v += data.a[j];
                break;
            case FeatureKind::NeighborOutcomeSum:
                for (int j : nbr) v += data.y[j];
                break;
            case FeatureKind::Noise:
                v = ctx.noise(i, ft.index);
                break;
        }
        x(f) = v;
    }
    return x;
}

Eigen::MatrixXd build_design(const Network& net, const Dataset& data, const ModelSpec& spec,
                             const DesignContext& ctx) {
    Eigen::MatrixXd X(data.n(), spec.feature_count());
    for (int i = 0; i < data.n(); ++i) X.row(i) = build_features(net, data, spec, ctx, i);
    return X;
}

LogisticFit fit_logistic_pl(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (n < p) throw std::invalid_argument("need at least one row per coefficient");
    for (int i = 0; i < n; ++i)
        if (y(i) != 0.0 && y(i) != 1.0) throw std::invalid_argument("labels must be binary");

    LogisticFit fit;
    fit.coef = Eigen::VectorXd::Zero(p);
    auto loglik = [&](const Eigen::VectorXd& b) {
        double ll = 0.0;
        Eigen::VectorXd z = X * b;
        for (int i = 0; i < n; ++i) {
            // y*z - log(1+e^z), stable for both signs
            double zi = z(i);
            ll += y(i) * zi - (zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi)));
        }
        return ll;
    };

    double ll = loglik(fit.coef);
    constexpr double kGradTol = 1e-8;
    constexpr int kMaxIter = 100;
    for (fit.iterations = 0; fit.iterations < kMaxIter; ++fit.iterations) {
        Eigen::VectorXd z = X * fit.coef;
        Eigen::VectorXd prob = z.unaryExpr([](double v) { return expit(v); });
        Eigen::VectorXd grad = X.transpose() * (y - prob);
        fit.max_grad = grad.cwiseAbs().maxCoeff();
        if (fit.max_grad < kGradTol) {
            fit.converged = true;
            break;
        }
        Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
        Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
            ldlt.vectorD().minCoeff() > 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
            step = ldlt.solve(grad);
        } else {
            fit.ridged = true;
            Eigen::MatrixXd Hr = H + 1e-8 * Eigen::MatrixXd::Identity(p, p);
            step = Hr.ldlt().solve(grad);
        }
        // step halving on the pseudo-likelihood
        double t = 1.0;
        Eigen::VectorXd cand = fit.coef + step;
        double ll_new = loglik(cand);
        int halvings = 0;
        while (!(ll_new >= ll) && halvings < 40) {
            t *= 0.5;
            cand = fit.coef + t * step;
            ll_new = loglik(cand);
            ++halvings;
        }
        fit.coef = cand;
        ll = ll_new;
    }
    if (!fit.converged) {
        Eigen::VectorXd z = X * fit.coef;
        fit.max_grad = (X.transpose() * (y - z.unaryExpr([](double v) { return expit(v); })))
                           .cwiseAbs()
                           .maxCoeff();
        if (z.cwiseAbs().maxCoeff() > 30.0) fit.separation = true;
    }
    return fit;
}

namespace {

void fill_scores(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& coef,
                 Eigen::MatrixXd& scores, Eigen::MatrixXd& jacobian) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    Eigen::VectorXd prob = (X * coef).unaryExpr([](double v) { return expit(v); });
    scores = X.array().colwise() * (y - prob).array();
    Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
    jacobian = -(X.transpose() * w.asDiagonal() * X) / n;
    (void)p;
}

} // namespace

FittedNuisance fit_nuisances(const Network& net, const Dataset& data, const ModelSpec& outcome_spec,
                             const ModelSpec& treatment_spec, std::uint64_t noise_seed) {
    FittedNuisance out;
    out.outcome_spec = outcome_spec;
    out.treatment_spec = treatment_spec;
    out.outcome_ctx = DesignContext::make(net, outcome_spec, data.n(), noise_seed);
    out.treatment_ctx = DesignContext::make(net, treatment_spec, data.n(), noise_seed ^ 0x5bd1e9955bd1e995ull);

    Eigen::VectorXd yv(data.n()), av(data.n());
    for (int i = 0; i < data.n(); ++i) {
        yv(i) = data.y[i];
        av(i) = data.a[i];
    }
    Eigen::MatrixXd Xo = build_design(net, data, outcome_spec, out.outcome_ctx);
    out.outcome_fit = fit_logistic_pl(Xo, yv);
    out.theta_hat = out.outcome_fit.coef;
    fill_scores(Xo, yv, out.theta_hat, out.outcome_scores, out.outcome_jacobian);

    Eigen::MatrixXd Xt = build_design(net, data, treatment_spec, out.treatment_ctx);
    out.treatment_fit = fit_logistic_pl(Xt, av);
    out.eta_hat = out.treatment_fit.coef;
    fill_scores(Xt, av, out.eta_hat, out.treatment_scores, out.treatment_jacobian);
    return out;
}

double eval_outcome_mean(const Network& net, const Dataset& data, const FittedNuisance& fit, int i,
                         const std::map<int, int>& a_local) {
    const auto& spec = fit.outcome_spec;
    const auto& ctx = fit.outcome_ctx;
    auto treated = [&](int j) {
        auto it = a_local.find(j);
        if (it == a_local.end())
            throw std::invalid_argument("a_local must assign every node of N(i,K)");
        return it->second;
    };
    (void)net;
    double z = 0.0;
    const auto& nbr = ctx.nbrs[i];
    for (int f = 0; f < spec.feature_count(); ++f) {
        const auto& ft = spec.features[f];
        double v = 0.0;
        switch (ft.kind) {
            case FeatureKind::Intercept: v = 1.0; break;
            case FeatureKind::OwnCovariate: v = data.l[i][ft.index]; break;
            case FeatureKind::NeighborCovariateSum:
                for (int j : nbr) v += data.l[j][ft.index];
                break;
            case FeatureKind::OwnTreatment: v = treated(i); break;
            case FeatureKind::NeighborTreatmentSum:
                for (int j : nbr) v += treated(j);
                break;
            case FeatureKind::NeighborOutcomeSum:
                for (int j : nbr) v += data.y[j];
                break;
            case FeatureKind::Noise: v = ctx.noise(i, ft.index); break;
        }
        z += fit.theta_hat(f) * v;
    }
    return expit(z);
}

} // namespace netdr

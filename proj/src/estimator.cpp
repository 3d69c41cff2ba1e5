#include "netdr/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "netdr/rng.hpp"

namespace netdr {

std::string estimand_name(Estimand e) {
    switch (e) {
        case Estimand::Gamma: return "gamma";
        case Estimand::DE: return "de";
        case Estimand::IE: return "ie";
        case Estimand::IE2: return "ie2";
    }
    return "?";
}

Estimand estimand_from_name(const std::string& name) {
    if (name == "gamma") return Estimand::Gamma;
    if (name == "de") return Estimand::DE;
    if (name == "ie") return Estimand::IE;
    if (name == "ie2") return Estimand::IE2;
    throw std::invalid_argument("unknown estimand: " + name);
}

namespace {

// Binomial(d, alpha) pmf by Pascal recursion; exact for the sizes in play.
std::vector<double> binom_pmf(int d, double alpha) {
    std::vector<double> pmf(d + 1, 0.0);
    pmf[0] = 1.0;
    for (int t = 0; t < d; ++t)
        for (int s = t + 1; s >= 0; --s) {
            double stay = (s <= t ? pmf[s] : 0.0) * (1.0 - alpha);
            double up = (s > 0 ? pmf[s - 1] : 0.0) * alpha;
            pmf[s] = stay + up;
        }
    return pmf;
}

// One allocation arm: own unit pinned to `pin` (or Bernoulli(alpha) when
// pin < 0), neighbors iid Bernoulli(alpha); `zero` marks the all-zero
// point-mass arm.
struct Arm {
    int pin = -1;
    double alpha = 0.7;
    bool zero = false;
    double sign = 1.0;
};

std::vector<Arm> arms_for(const EstimandRequest& r) {
    switch (r.kind) {
        case Estimand::Gamma:
            return {{-1, r.alpha, false, +1.0}};
        case Estimand::DE:
            return {{1, r.alpha, false, +1.0}, {0, r.alpha, false, -1.0}};
        case Estimand::IE:
            return {{0, r.alpha, false, +1.0}, {0, 0.0, true, -1.0}};
        case Estimand::IE2:
            return {{0, r.alpha, false, +1.0}, {0, r.alpha_prime, false, -1.0}};
    }
    return {};
}

struct OutcomePieces {
    double c = 0.0;       // non-treatment linear part at observed data
    double b_own = 0.0;
    double b_nbr = 0.0;
    int idx_own = -1;
    int idx_nbr = -1;
};

OutcomePieces outcome_pieces(const ModelSpec& spec, const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& x_obs, int v_obs, int s_obs) {
    OutcomePieces p;
    for (int f = 0; f < spec.feature_count(); ++f) {
        if (spec.features[f].kind == FeatureKind::OwnTreatment) p.idx_own = f;
        if (spec.features[f].kind == FeatureKind::NeighborTreatmentSum) p.idx_nbr = f;
    }
    if (p.idx_own < 0 || p.idx_nbr < 0)
        throw std::invalid_argument("outcome spec must carry own-treatment and neighbor-treatment-sum features");
    p.b_own = theta(p.idx_own);
    p.b_nbr = theta(p.idx_nbr);
    p.c = theta.dot(x_obs) - p.b_own * v_obs - p.b_nbr * s_obs;
    return p;
}

struct PropensityEval {
    double raw = 0.0;
    double clipped_value = 0.0;
    bool clipped = false;
    bool mc_fallback = false;
};

PropensityEval eval_observed_propensity(const Network& net, const EnergySpec& energy,
                                        const std::vector<int>& a_obs, int i,
                                        const EstimandRequest& req, std::uint64_t seed) {
    PropensityEval out;
    auto loc = LocalNeighborhood::build(net, energy, a_obs, i);
    if (loc.size() <= req.enumeration_cap) {
        out.raw = observed_joint_propensity(net, energy, a_obs, i, req.enumeration_cap);
    } else {
        out.mc_fallback = true;
        std::map<int, int> target;
        for (int u : loc.nodes) target[u] = a_obs[u];
        auto rng = make_rng(seed, 0x70000000ull + static_cast<std::uint64_t>(i));
        out.raw = joint_propensity_mc(net, energy, a_obs, i, target, 4000, rng).value;
    }
    out.clipped = out.raw < req.clip_floor;
    out.clipped_value = std::max(out.raw, req.clip_floor);
    return out;
}

// d log pi_hat(observed | boundary) / d eta via the exponential-family
// identity: features(observed) - E_pi[features].
Eigen::VectorXd grad_log_propensity(const Network& net, const Dataset& data,
                                    const FittedNuisance& fit, const LocalNeighborhood& loc,
                                    double pair_coef) {
    const auto& spec = fit.treatment_spec;
    const int p = spec.feature_count();
    int pair_feature = -1;
    for (int f = 0; f < p; ++f)
        if (spec.features[f].kind == FeatureKind::NeighborTreatmentSum) pair_feature = f;

    const int d = loc.size();
    // per-local-node treatment design rows (pair feature handled separately)
    Eigen::MatrixXd rows(d, p);
    for (int t = 0; t < d; ++t)
        rows.row(t) = build_features(net, data, spec, fit.treatment_ctx, loc.nodes[t]);

    auto features_of = [&](std::uint32_t mask) {
        Eigen::VectorXd F = Eigen::VectorXd::Zero(p);
        for (int t = 0; t < d; ++t)
            if (mask & (1u << t)) {
                for (int f = 0; f < p; ++f)
                    if (f != pair_feature) F(f) += rows(t, f);
                F(pair_feature) += loc.boundary_treated[t];
            }
        for (auto [t1, t2] : loc.pairs)
            if ((mask & (1u << t1)) && (mask & (1u << t2))) F(pair_feature) += 1.0;
        return F;
    };

    const std::uint32_t count = 1u << d;
    std::vector<double> energy(count);
    double max_u = -std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < count; ++c) {
        double u = 0.0;
        for (int t = 0; t < d; ++t)
            if (c & (1u << t)) u += loc.eff_field[t];
        for (auto [t1, t2] : loc.pairs)
            if ((c & (1u << t1)) && (c & (1u << t2))) u += pair_coef;
        energy[c] = u;
        max_u = std::max(max_u, u);
    }
    double z = 0.0;
    Eigen::VectorXd mean_F = Eigen::VectorXd::Zero(p);
    for (std::uint32_t c = 0; c < count; ++c) {
        double w = std::exp(energy[c] - max_u);
        z += w;
        mean_F += w * features_of(c);
    }
    mean_F /= z;
    return features_of(loc.observed_mask) - mean_F;
}

} // namespace

OutcomeField outcome_field_from_nuisance(const Network& net, const Dataset& data,
                                         const FittedNuisance& fit) {
    const auto& spec = fit.outcome_spec;
    OutcomeField field;
    field.offset.assign(data.n(), 0.0);
    int idx_own = -1, idx_nbr = -1, idx_lag = -1;
    for (int f = 0; f < spec.feature_count(); ++f) {
        switch (spec.features[f].kind) {
            case FeatureKind::OwnTreatment: idx_own = f; break;
            case FeatureKind::NeighborTreatmentSum: idx_nbr = f; break;
            case FeatureKind::NeighborOutcomeSum: idx_lag = f; break;
            default: break;
        }
    }
    if (idx_own < 0 || idx_nbr < 0)
        throw std::invalid_argument("outcome spec must carry treatment features");
    field.own = fit.theta_hat(idx_own);
    field.nbr = fit.theta_hat(idx_nbr);
    field.lag = idx_lag >= 0 ? fit.theta_hat(idx_lag) : 0.0;
    for (int i = 0; i < data.n(); ++i) {
        Eigen::VectorXd x = build_features(net, data, spec, fit.outcome_ctx, i);
        double z = 0.0;
        for (int f = 0; f < spec.feature_count(); ++f)
            if (f != idx_own && f != idx_nbr && f != idx_lag) z += fit.theta_hat(f) * x(f);
        field.offset[i] = z;
    }
    return field;
}

UnitScore aaipw_score(const Network& net, const Dataset& data, const FittedNuisance& fit, int i,
                      const std::map<int, int>& a_local, double clip_floor, int enumeration_cap) {
    UnitScore s;
    s.node = i;
    double beta = eval_outcome_mean(net, data, fit, i, a_local);
    s.reg_part = beta;
    bool matches = true;
    for (auto [node, value] : a_local)
        if (data.a[node] != value) {
            matches = false;
            break;
        }
    if (matches) {
        EnergySpec energy = energy_from_nuisance(net, data, fit);
        double pi = joint_propensity_exact(net, energy, data.a, i, a_local, enumeration_cap);
        s.clipped = pi < clip_floor;
        pi = std::max(pi, clip_floor);
        s.ipw_part = (data.y[i] - beta) / pi;
    }
    s.w = s.ipw_part + s.reg_part;
    return s;
}

UnitScore exposure_aaipw_score(const Network& net, const Dataset& data, const FittedNuisance& fit,
                               int i, const ExposureMap& map, std::uint64_t t,
                               const std::map<int, int>& a_ref, double clip_floor,
                               int enumeration_cap) {
    UnitScore s;
    s.node = i;
    double beta = eval_outcome_mean(net, data, fit, i, a_ref);
    s.reg_part = beta;
    EnergySpec energy = energy_from_nuisance(net, data, fit);
    std::uint64_t t_obs = observed_exposure(net, energy, data.a, i, map);
    if (t_obs == t) {
        double pi = exposure_propensity(net, energy, data.a, i, map, t, enumeration_cap);
        if (pi <= 0.0) {
            s.clipped = true;  // positivity violation flag
            pi = clip_floor;
        } else if (pi < clip_floor) {
            s.clipped = true;
            pi = clip_floor;
        }
        s.ipw_part = (data.y[i] - beta) / pi;
    }
    s.w = s.ipw_part + s.reg_part;
    return s;
}

EstimandEstimate estimate(const Network& net, const Dataset& data, const FittedNuisance& fit,
                          const EstimandRequest& request, std::uint64_t seed, bool with_if_terms) {
    const int n = data.n();
    if (request.mode == EstimandRequest::Mode::MC && request.mc_draws <= 0)
        throw std::invalid_argument("mc_draws must be positive in MC mode");
    if (request.kind == Estimand::IE2 &&
        (request.alpha_prime <= 0.0 || request.alpha_prime >= 1.0))
        throw std::invalid_argument("ie2 requires alpha_prime in (0,1)");

    EstimandEstimate out;
    out.scores.assign(n, 0.0);
    EnergySpec energy = energy_from_nuisance(net, data, fit);
    auto arms = arms_for(request);

    const auto& nbrs = fit.outcome_ctx.nbrs;
    Eigen::MatrixXd Xo = build_design(net, data, fit.outcome_spec, fit.outcome_ctx);

    const int p_theta = fit.outcome_spec.feature_count();
    const int p_eta = fit.treatment_spec.feature_count();
    const bool want_if = with_if_terms && request.mode == EstimandRequest::Mode::Exact;
    if (want_if) {
        out.h_outcome = Eigen::MatrixXd::Zero(n, p_theta);
        out.h_treatment = Eigen::MatrixXd::Zero(n, p_eta);
        out.has_if_terms = true;
    }
    // validate the treatment-feature wiring once, outside the parallel region
    if (n > 0) {
        int s0 = 0;
        for (int j : nbrs[0]) s0 += data.a[j];
        (void)outcome_pieces(fit.outcome_spec, fit.theta_hat, Xo.row(0), data.a[0], s0);
    }

    // MC mode: shared allocation draws per alpha level, one stream per draw.
    std::vector<std::vector<std::vector<int>>> draws_by_arm(arms.size());
    if (request.mode == EstimandRequest::Mode::MC) {
        for (std::size_t k = 0; k < arms.size(); ++k) {
            if (arms[k].zero) continue;
            std::uint64_t level_tag =
                (request.kind == Estimand::IE2 && arms[k].alpha == request.alpha_prime) ? 2 : 1;
            draws_by_arm[k].resize(request.mc_draws);
            for (int r = 0; r < request.mc_draws; ++r) {
                auto rng = make_rng(seed, (level_tag << 32) | static_cast<std::uint64_t>(r));
                auto& a = draws_by_arm[k][r];
                a.resize(n);
                for (int i = 0; i < n; ++i) a[i] = bernoulli(rng, arms[k].alpha) ? 1 : 0;
            }
        }
    }

    long clipped_total = 0;
    int mc_units = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : clipped_total, mc_units)
    for (int i = 0; i < n; ++i) {
        const int d = static_cast<int>(nbrs[i].size());
        int s_obs = 0;
        for (int j : nbrs[i]) s_obs += data.a[j];
        const int v_obs = data.a[i];
        OutcomePieces op = outcome_pieces(fit.outcome_spec, fit.theta_hat, Xo.row(i), v_obs, s_obs);
        const double beta_obs = expit(op.c + op.b_own * v_obs + op.b_nbr * s_obs);
        const double resid = data.y[i] - beta_obs;

        PropensityEval pe = eval_observed_propensity(net, energy, data.a, i, request, seed);

        auto beta_at = [&](int v, int s) { return expit(op.c + op.b_own * v + op.b_nbr * s); };

        double score = 0.0;
        double q_over_pi_signed = 0.0;  // for the H2 accumulation
        Eigen::VectorXd h1;
        if (want_if) h1 = Eigen::VectorXd::Zero(p_theta);

        for (std::size_t k = 0; k < arms.size(); ++k) {
            const Arm& arm = arms[k];
            if (request.mode == EstimandRequest::Mode::Exact || arm.zero) {
                double q_obs, reg = 0.0;
                if (arm.zero) {
                    q_obs = (v_obs == 0 && s_obs == 0) ? 1.0 : 0.0;
                    reg = beta_at(0, 0);
                } else {
                    auto pmf = binom_pmf(d, arm.alpha);
                    double q_own_obs =
                        arm.pin >= 0 ? (v_obs == arm.pin ? 1.0 : 0.0)
                                     : (v_obs == 1 ? arm.alpha : 1.0 - arm.alpha);
                    double q_nbr_obs =
                        std::pow(arm.alpha, s_obs) * std::pow(1.0 - arm.alpha, d - s_obs);
                    q_obs = q_own_obs * q_nbr_obs;
                    for (int s = 0; s <= d; ++s) {
                        if (arm.pin >= 0) {
                            reg += pmf[s] * beta_at(arm.pin, s);
                        } else {
                            reg += pmf[s] * (arm.alpha * beta_at(1, s) +
                                             (1.0 - arm.alpha) * beta_at(0, s));
                        }
                    }
                }
                score += arm.sign * (q_obs / pe.clipped_value * resid + reg);
                if (want_if) {
                    q_over_pi_signed += arm.sign * q_obs / pe.clipped_value;
                    auto add_grad = [&](double weight, int v, int s) {
                        double b = beta_at(v, s);
                        double slope = weight * b * (1.0 - b);
                        Eigen::VectorXd x = Xo.row(i);
                        x(op.idx_own) = v;
                        x(op.idx_nbr) = s;
                        h1 += arm.sign * slope * x;
                    };
                    if (arm.zero) {
                        add_grad(1.0, 0, 0);
                    } else {
                        auto pmf = binom_pmf(d, arm.alpha);
                        for (int s = 0; s <= d; ++s) {
                            if (arm.pin >= 0) {
                                add_grad(pmf[s], arm.pin, s);
                            } else {
                                add_grad(pmf[s] * arm.alpha, 1, s);
                                add_grad(pmf[s] * (1.0 - arm.alpha), 0, s);
                            }
                        }
                    }
                    double bo = beta_obs * (1.0 - beta_obs);
                    Eigen::VectorXd x = Xo.row(i);
                    x(op.idx_own) = v_obs;
                    x(op.idx_nbr) = s_obs;
                    h1 -= arm.sign * (q_obs / pe.clipped_value) * bo * x;
                }
            } else {
                // MC mode over shared draws
                double acc = 0.0;
                for (const auto& a : draws_by_arm[k]) {
                    int v = arm.pin >= 0 ? arm.pin : a[i];
                    int s = 0;
                    bool match = (v == v_obs);
                    for (int j : nbrs[i]) {
                        s += a[j];
                        if (a[j] != data.a[j]) match = false;
                    }
                    double w = match ? resid / pe.clipped_value : 0.0;
                    acc += w + beta_at(v, s);
                }
                score += arm.sign * acc / request.mc_draws;
            }
        }
        out.scores[i] = score;

        if (want_if) {
            out.h_outcome.row(i) = h1;
            if (!pe.mc_fallback) {
                auto loc = LocalNeighborhood::build(net, energy, data.a, i);
                Eigen::VectorXd glp = grad_log_propensity(net, data, fit, loc, energy.pair_coef);
                out.h_treatment.row(i) = q_over_pi_signed * resid * glp;
            }
        }
        if (pe.clipped) clipped_total += 1;
        if (pe.mc_fallback) mc_units += 1;
    }
    out.clipped_count = clipped_total;
    out.mc_propensity_units = mc_units;

    double total = 0.0;
    for (double s : out.scores) total += s;
    out.point = total / n;
    return out;
}

double auto_g_estimate(const Network& net, const Dataset& data, const FittedNuisance& fit,
                       const EstimandRequest& request, const AutoGControls& controls,
                       std::uint64_t seed) {
    OutcomeField field = outcome_field_from_nuisance(net, data, fit);
    const int K = fit.outcome_spec.K;
    const int n = data.n();
    auto mean_of = [&](const std::vector<double>& v) {
        double t = 0.0;
        for (double x : v) t += x;
        return t / n;
    };
    switch (request.kind) {
        case Estimand::Gamma: {
            auto r = allocation_response(net, K, field, request.alpha, controls.replications,
                                         controls.gibbs, seed);
            return mean_of(r.value);
        }
        case Estimand::DE: {
            auto r = allocation_response(net, K, field, request.alpha, controls.replications,
                                         controls.gibbs, seed);
            double t = 0.0;
            for (int i = 0; i < n; ++i) t += r.treated[i] - r.control[i];
            return t / n;
        }
        case Estimand::IE: {
            auto r = allocation_response(net, K, field, request.alpha, controls.replications,
                                         controls.gibbs, seed);
            auto zero = counterfactual_outcome_mean(
                net, K, field, AllocationPolicy::fixed_vector(std::vector<int>(n, 0)),
                controls.gibbs, std::max(1, controls.replications / 4), seed ^ 0xabcdef12345ull);
            double t = 0.0;
            for (int i = 0; i < n; ++i) t += r.control[i] - zero[i];
            return t / n;
        }
        case Estimand::IE2: {
            auto r1 = allocation_response(net, K, field, request.alpha, controls.replications,
                                          controls.gibbs, seed);
            auto r2 = allocation_response(net, K, field, request.alpha_prime,
                                          controls.replications, controls.gibbs,
                                          seed ^ 0x5ca1ab1e0ull);
            double t = 0.0;
            for (int i = 0; i < n; ++i) t += r1.control[i] - r2.control[i];
            return t / n;
        }
    }
    return 0.0;
}

} // namespace netdr

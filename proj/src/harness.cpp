#include "netdr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "netdr/rng.hpp"

namespace netdr {

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::BothCorrect: return "both-correct";
        case Scenario::MisspecifiedOutcome: return "misspecified-outcome";
        case Scenario::MisspecifiedPropensity: return "misspecified-propensity";
    }
    return "?";
}

Scenario scenario_from_name(const std::string& name) {
    if (name == "both-correct") return Scenario::BothCorrect;
    if (name == "misspecified-outcome") return Scenario::MisspecifiedOutcome;
    if (name == "misspecified-propensity") return Scenario::MisspecifiedPropensity;
    throw std::invalid_argument("unknown scenario: " + name);
}

SimParams ScenarioConfig::params() const {
    if (custom_params) return base_params;
    return SimParams::table_defaults(m);
}

TruthResult compute_truth(const Network& net, const SimParams& params, double alpha,
                          double alpha_prime, const TruthControls& controls, std::uint64_t seed) {
    const int n = net.size();
    const int R = controls.replications;
    if (R <= 0) throw std::invalid_argument("truth replications must be positive");

    // Covariate chain: one sequential-scan stream, snapshots every l_stride sweeps.
    ChainGraphSimulator lchain(net, params, seed);
    for (int s = 0; s < controls.l_burn_in; ++s) lchain.sweep_covariates();

    // batch means over 16 blocks for the MC error
    const int n_batches = std::min(16, R);
    std::vector<std::map<Estimand, double>> batch_vals(n_batches);
    std::map<Estimand, double> total;
    for (auto e : {Estimand::Gamma, Estimand::DE, Estimand::IE, Estimand::IE2}) total[e] = 0.0;

    for (int r = 0; r < R; ++r) {
        for (int s = 0; s < controls.l_stride; ++s) lchain.sweep_covariates();
        Dataset snap = lchain.snapshot();
        OutcomeField field = make_outcome_field(net, params.K, params.theta, snap.l);
        auto rng = make_rng(seed ^ 0x7472757468ull, static_cast<std::uint64_t>(r));

        std::vector<int> a(n), a2(n);
        for (int i = 0; i < n; ++i) a[i] = bernoulli(rng, alpha) ? 1 : 0;
        for (int i = 0; i < n; ++i) a2[i] = bernoulli(rng, alpha_prime) ? 1 : 0;
        auto m_a = stationary_outcome_means(net, params.K, field, a, controls.gibbs, rng);
        auto m_a2 = stationary_outcome_means(net, params.K, field, a2, controls.gibbs, rng);
        auto m_z = stationary_outcome_means(net, params.K, field, std::vector<int>(n, 0),
                                            controls.gibbs, rng);

        double g = 0, de = 0, ie = 0, ie2 = 0;
        for (int i = 0; i < n; ++i) {
            g += m_a[i];
            double treated = a[i] == 1 ? m_a[i] / alpha : 0.0;
            double control = a[i] == 0 ? m_a[i] / (1.0 - alpha) : 0.0;
            double control2 = a2[i] == 0 ? m_a2[i] / (1.0 - alpha_prime) : 0.0;
            de += treated - control;
            ie += control - m_z[i];
            ie2 += control - control2;
        }
        std::map<Estimand, double> vals{{Estimand::Gamma, g / n},
                                        {Estimand::DE, de / n},
                                        {Estimand::IE, ie / n},
                                        {Estimand::IE2, ie2 / n}};
        int b = r * n_batches / R;
        for (auto& [e, v] : vals) {
            total[e] += v;
            batch_vals[b][e] += v;
        }
    }

    TruthResult out;
    for (auto& [e, v] : total) out.value[e] = v / R;
    const double per_batch = static_cast<double>(R) / n_batches;
    for (auto e : {Estimand::Gamma, Estimand::DE, Estimand::IE, Estimand::IE2}) {
        double var = 0.0;
        for (int b = 0; b < n_batches; ++b) {
            double bm = batch_vals[b][e] / per_batch;
            var += (bm - out.value[e]) * (bm - out.value[e]);
        }
        if (n_batches > 1) var /= (n_batches - 1.0) * n_batches;
        out.mc_error[e] = std::sqrt(var);
    }
    return out;
}

namespace {

struct ReplicateOutput {
    bool ok = false;
    std::map<Estimand, double> estimate;
    std::map<Estimand, double> ci_lo, ci_hi;
    std::map<Estimand, long> clipped;
    std::map<Estimand, double> auto_g;
};

} // namespace

MCResult run_experiment(const ScenarioConfig& config) {
    MCResult result;
    result.config = config;

    SimParams params = config.params();
    params.K = config.K;
    Network net = generate_ba_capped(config.n, config.m, config.max_degree, config.seed);

    TruthResult truth =
        compute_truth(net, params, config.alpha, config.alpha_prime, config.truth,
                      config.seed ^ 0x123456789abcdefull);

    int max_lag = 0;
    KernelSpec kernel = config.kernel;
    while (kernel.weight(max_lag + 1) > 0.0) ++max_lag;
    auto shells = all_shells(net, max_lag);

    ModelSpec outcome_spec = ModelSpec::canonical_outcome(3, config.K);
    ModelSpec treatment_spec = ModelSpec::canonical_treatment(3, config.K);
    if (config.scenario == Scenario::MisspecifiedOutcome) outcome_spec = outcome_spec.misspecified();
    if (config.scenario == Scenario::MisspecifiedPropensity)
        treatment_spec = treatment_spec.misspecified();

    // materialize the replicate stream (consecutive post-burn-in snapshots)
    std::vector<Dataset> datasets;
    datasets.reserve(config.replicates);
    const int n_iter = config.burn_in + config.replicates * config.thin;
    simulate_stream(net, params, n_iter, config.burn_in, config.thin, config.seed ^ 0x5eed5eedull,
                    [&](int, const Dataset& d) { datasets.push_back(d); });

    std::vector<ReplicateOutput> outputs(datasets.size());
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < static_cast<int>(datasets.size()); ++r) {
        ReplicateOutput& ro = outputs[r];
        try {
            const Dataset& data = datasets[r];
            std::uint64_t rep_seed = config.seed + 0x1000ull * (r + 1);
            FittedNuisance fit =
                fit_nuisances(net, data, outcome_spec, treatment_spec, rep_seed ^ 0x6e6f697365ull);
            for (Estimand e : config.estimands) {
                EstimandRequest req;
                req.kind = e;
                req.alpha = config.alpha;
                req.alpha_prime = config.alpha_prime;
                req.K = config.K;
                req.mode = config.mode;
                req.mc_draws = config.mc_draws;
                req.enumeration_cap = config.enumeration_cap;
                req.clip_floor = config.clip_floor;
                EstimandEstimate est = estimate(net, data, fit, req, rep_seed);
                HacResult hac = hac_variance(est.scores, shells, kernel);
                auto ci = confidence_interval(est.point, hac.lambda, config.n, config.ci_level);
                ro.estimate[e] = est.point;
                ro.ci_lo[e] = ci.first;
                ro.ci_hi[e] = ci.second;
                ro.clipped[e] = est.clipped_count;
                if (config.run_auto_g)
                    ro.auto_g[e] = auto_g_estimate(net, data, fit, req, config.auto_g,
                                                   rep_seed ^ 0xau);
            }
            ro.ok = true;
        } catch (const std::exception&) {
            ro.ok = false;
        }
    }

    for (Estimand e : config.estimands) {
        EstimandStats st;
        st.truth = truth.value[e];
        st.truth_mc_error = truth.mc_error[e];
        result.stats[e] = st;
    }
    int completed = 0, failed = 0;
    for (const auto& ro : outputs) {
        if (!ro.ok) {
            ++failed;
            continue;
        }
        ++completed;
        for (Estimand e : config.estimands) {
            auto& st = result.stats[e];
            st.trace.push_back(ro.estimate.at(e));
            if (config.run_auto_g) st.auto_g_trace.push_back(ro.auto_g.at(e));
            st.clipped_total += ro.clipped.at(e);
            if (ro.ci_lo.at(e) <= st.truth && st.truth <= ro.ci_hi.at(e)) st.coverage += 1.0;
            st.mean_ci_halfwidth += 0.5 * (ro.ci_hi.at(e) - ro.ci_lo.at(e));
        }
    }
    result.completed_replicates = completed;
    result.failed_replicates = failed;
    for (Estimand e : config.estimands) {
        auto& st = result.stats[e];
        if (completed == 0) continue;
        double mean = 0.0, mse = 0.0;
        for (double v : st.trace) {
            mean += v;
            mse += (v - st.truth) * (v - st.truth);
        }
        mean /= completed;
        st.mean_estimate = mean;
        st.bias = mean - st.truth;
        st.rmse = std::sqrt(mse / completed);
        st.coverage /= completed;
        st.mean_ci_halfwidth /= completed;
        if (config.run_auto_g) {
            double am = 0.0, amse = 0.0;
            for (double v : st.auto_g_trace) {
                am += v;
                amse += (v - st.truth) * (v - st.truth);
            }
            st.auto_g_bias = am / completed - st.truth;
            st.auto_g_rmse = std::sqrt(amse / completed);
        }
    }
    return result;
}

void write_mc_csv(const std::vector<MCResult>& results, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write csv: " + path);
    out << "estimand,scenario,m,max_degree,n,replicates,truth,truth_mc_error,mean_estimate,bias,"
           "rmse,coverage,mean_ci_halfwidth,auto_g_bias,auto_g_rmse,clipped_total,failed\n";
    for (const auto& res : results) {
        for (const auto& [e, st] : res.stats) {
            out << estimand_name(e) << ',' << scenario_name(res.config.scenario) << ','
                << res.config.m << ',' << res.config.max_degree << ',' << res.config.n << ','
                << res.completed_replicates << ',' << st.truth << ',' << st.truth_mc_error << ','
                << st.mean_estimate << ',' << st.bias << ',' << st.rmse << ',' << st.coverage
                << ',' << st.mean_ci_halfwidth << ',' << st.auto_g_bias << ',' << st.auto_g_rmse
                << ',' << st.clipped_total << ',' << res.failed_replicates << '\n';
        }
    }
}

nlohmann::json mc_results_json(const std::vector<MCResult>& results) {
    nlohmann::ordered_json root = nlohmann::ordered_json::array();
    for (const auto& res : results) {
        nlohmann::ordered_json cell;
        cell["scenario"] = scenario_name(res.config.scenario);
        cell["m"] = res.config.m;
        cell["max_degree"] = res.config.max_degree;
        cell["n"] = res.config.n;
        cell["replicates"] = res.completed_replicates;
        cell["failed"] = res.failed_replicates;
        cell["seed"] = res.config.seed;
        nlohmann::ordered_json per;
        for (const auto& [e, st] : res.stats) {
            nlohmann::ordered_json js;
            js["truth"] = st.truth;
            js["truth_mc_error"] = st.truth_mc_error;
            js["mean_estimate"] = st.mean_estimate;
            js["bias"] = st.bias;
            js["rmse"] = st.rmse;
            js["coverage"] = st.coverage;
            js["mean_ci_halfwidth"] = st.mean_ci_halfwidth;
            js["auto_g_bias"] = st.auto_g_bias;
            js["auto_g_rmse"] = st.auto_g_rmse;
            js["clipped_total"] = st.clipped_total;
            per[estimand_name(e)] = js;
        }
        cell["estimands"] = per;
        root.push_back(cell);
    }
    return root;
}

} // namespace netdr

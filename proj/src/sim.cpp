#include "netdr/sim.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "netdr/propensity.hpp"
#include "netdr/rng.hpp"

namespace netdr {

SimParams SimParams::table_defaults(int m) {
    SimParams p;
    p.tau = {-1.0, 0.5, -0.5};
    p.rho12 = 0.1;
    p.rho13 = 0.2;
    p.rho23 = 0.1;
    p.nu = {{{0.1, 0.0, 0.0}, {0.1, 0.0, 0.0}, {0.1, 0.0, 0.0}}};
    p.eta = {-1.0, 2.0, 0.1, -2.0, 0.1, 2.0, 0.1, 0.1};
    const double md = static_cast<double>(m);
    p.theta = {-md, -2.0 * md, 2.0, 2.0, 0.1, -1.0, 0.1, 2.0, 0.1, 0.0};
    p.K = 1;
    return p;
}

void to_json(nlohmann::json& j, const SimParams& p) {
    j = nlohmann::json::object();
    for (int k = 0; k < 3; ++k) j["tau" + std::to_string(k + 1)] = p.tau[k];
    j["rho12"] = p.rho12;
    j["rho13"] = p.rho13;
    j["rho23"] = p.rho23;
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
            j["nu" + std::to_string(k + 1) + std::to_string(l + 1)] = p.nu[k][l];
    for (int k = 0; k < 8; ++k) j["eta" + std::to_string(k)] = p.eta[k];
    for (int k = 0; k < 10; ++k) j["theta" + std::to_string(k)] = p.theta[k];
    j["K"] = p.K;
}

SimParams sim_params_from_json(const nlohmann::json& j) {
    SimParams p;
    auto get = [&](const std::string& key, double fallback) {
        return j.contains(key) ? j.at(key).get<double>() : fallback;
    };
    for (int k = 0; k < 3; ++k) p.tau[k] = get("tau" + std::to_string(k + 1), 0.0);
    p.rho12 = get("rho12", 0.0);
    p.rho13 = get("rho13", 0.0);
    p.rho23 = get("rho23", 0.0);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
            p.nu[k][l] = get("nu" + std::to_string(k + 1) + std::to_string(l + 1), 0.0);
    for (int k = 0; k < 8; ++k) p.eta[k] = get("eta" + std::to_string(k), 0.0);
    for (int k = 0; k < 10; ++k) p.theta[k] = get("theta" + std::to_string(k), 0.0);
    p.K = j.contains("K") ? j.at("K").get<int>() : 1;
    return p;
}

namespace {

std::vector<std::vector<int>> radius_neighbors(const Network& net, int K) {
    std::vector<std::vector<int>> out(net.size());
    for (int i = 0; i < net.size(); ++i) {
        if (K == 1) {
            out[i] = net.neighbors(i);
        } else {
            for (int j : net.neighborhood(i, K))
                if (j != i) out[i].push_back(j);
        }
    }
    return out;
}

} // namespace

ChainGraphSimulator::ChainGraphSimulator(const Network& net, SimParams params, std::uint64_t seed)
    : net_(net), params_(params), nbrs_(radius_neighbors(net, params.K)),
      rng_(make_rng(seed)) {
    const int n = net.size();
    l_.assign(n, {});
    a_.assign(n, 0);
    y_.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) l_[i][k] = bernoulli(rng_, 0.5) ? 1.0 : 0.0;
        a_[i] = bernoulli(rng_, 0.5) ? 1 : 0;
        y_[i] = bernoulli(rng_, 0.5) ? 1 : 0;
    }
}

double ChainGraphSimulator::covariate_conditional(int i, int k) const {
    const auto& p = params_;
    double z = p.tau[k];
    // within-node cross terms; the third covariate's conditional uses
    // rho23 * L2 (resolving the printed L3-in-its-own-conditional slip)
    if (k == 0)
        z += p.rho12 * l_[i][1] + p.rho13 * l_[i][2];
    else if (k == 1)
        z += p.rho12 * l_[i][0] + p.rho23 * l_[i][2];
    else
        z += p.rho13 * l_[i][0] + p.rho23 * l_[i][1];
    double s[3] = {0, 0, 0};
    for (int j : nbrs_[i])
        for (int c = 0; c < 3; ++c) s[c] += l_[j][c];
    for (int c = 0; c < 3; ++c) z += p.nu[k][c] * s[c];
    return expit(z);
}

double ChainGraphSimulator::treatment_conditional(int i) const {
    const auto& e = params_.eta;
    double sl[3] = {0, 0, 0};
    double sa = 0;
    for (int j : nbrs_[i]) {
        for (int c = 0; c < 3; ++c) sl[c] += l_[j][c];
        sa += a_[j];
    }
    double z = e[0] + e[1] * l_[i][0] + e[2] * sl[0] + e[3] * l_[i][1] + e[4] * sl[1] +
               e[5] * l_[i][2] + e[6] * sl[2] + e[7] * sa;
    return expit(z);
}

double ChainGraphSimulator::outcome_conditional(int i) const {
    const auto& t = params_.theta;
    double sl[3] = {0, 0, 0};
    double sa = 0, sy = 0;
    for (int j : nbrs_[i]) {
        for (int c = 0; c < 3; ++c) sl[c] += l_[j][c];
        sa += a_[j];
        sy += y_[j];
    }
    double z = t[0] + t[1] * a_[i] + t[2] * sa + t[3] * l_[i][0] + t[4] * sl[0] +
               t[5] * l_[i][1] + t[6] * sl[1] + t[7] * l_[i][2] + t[8] * sl[2] + t[9] * sy;
    return expit(z);
}

void ChainGraphSimulator::sweep_covariates() {
    for (int i = 0; i < net_.size(); ++i)
        for (int k = 0; k < 3; ++k)
            l_[i][k] = bernoulli(rng_, covariate_conditional(i, k)) ? 1.0 : 0.0;
}

void ChainGraphSimulator::sweep_treatments() {
    for (int i = 0; i < net_.size(); ++i)
        a_[i] = bernoulli(rng_, treatment_conditional(i)) ? 1 : 0;
}

void ChainGraphSimulator::sweep_outcomes() {
    for (int i = 0; i < net_.size(); ++i)
        y_[i] = bernoulli(rng_, outcome_conditional(i)) ? 1 : 0;
}

void ChainGraphSimulator::iterate() {
    sweep_covariates();
    sweep_treatments();
    sweep_outcomes();
}

Dataset ChainGraphSimulator::snapshot() const {
    Dataset d;
    const int n = net_.size();
    d.y = y_;
    d.a = a_;
    d.l.assign(n, std::vector<double>(3));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) d.l[i][k] = l_[i][k];
    return d;
}

void simulate_stream(const Network& net, const SimParams& params, int n_iter, int burn_in,
                     int thin, std::uint64_t seed,
                     const std::function<void(int, const Dataset&)>& sink) {
    if (burn_in >= n_iter) throw std::invalid_argument("burn_in must be < n_iter");
    if (thin < 1) throw std::invalid_argument("thin must be >= 1");
    ChainGraphSimulator sim(net, params, seed);
    int emitted = 0;
    for (int it = 0; it < n_iter; ++it) {
        sim.iterate();
        if (it >= burn_in && (it - burn_in) % thin == 0) sink(emitted++, sim.snapshot());
    }
}

OutcomeField make_outcome_field(const Network& net, int K, const std::array<double, 10>& theta,
                                const std::vector<std::vector<double>>& l) {
    OutcomeField f;
    f.own = theta[1];
    f.nbr = theta[2];
    f.lag = theta[9];
    auto nbrs = radius_neighbors(net, K);
    f.offset.assign(net.size(), 0.0);
    for (int i = 0; i < net.size(); ++i) {
        double sl[3] = {0, 0, 0};
        for (int j : nbrs[i])
            for (int c = 0; c < 3; ++c) sl[c] += l[j][c];
        f.offset[i] = theta[0] + theta[3] * l[i][0] + theta[4] * sl[0] + theta[5] * l[i][1] +
                      theta[6] * sl[1] + theta[7] * l[i][2] + theta[8] * sl[2];
    }
    return f;
}

std::vector<double> stationary_outcome_means(const Network& net, int K, const OutcomeField& field,
                                             const std::vector<int>& a, const GibbsControls& gc,
                                             std::mt19937_64& rng) {
    const int n = net.size();
    auto nbrs = radius_neighbors(net, K);
    std::vector<double> base(n);
    for (int i = 0; i < n; ++i) {
        double sa = 0;
        for (int j : nbrs[i]) sa += a[j];
        base[i] = field.offset[i] + field.own * a[i] + field.nbr * sa;
    }
    std::vector<double> mean(n);
    if (field.lag == 0.0) {
        for (int i = 0; i < n; ++i) mean[i] = expit(base[i]);
        return mean;
    }
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) y[i] = bernoulli(rng, 0.5) ? 1 : 0;
    auto sweep = [&]() {
        for (int i = 0; i < n; ++i) {
            double sy = 0;
            for (int j : nbrs[i]) sy += y[j];
            y[i] = bernoulli(rng, expit(base[i] + field.lag * sy)) ? 1 : 0;
        }
    };
    for (int s = 0; s < gc.burn_in; ++s) sweep();
    std::vector<double> acc(n, 0.0);
    for (int s = 0; s < gc.keep; ++s) {
        sweep();
        for (int i = 0; i < n; ++i) acc[i] += y[i];
    }
    for (int i = 0; i < n; ++i) mean[i] = acc[i] / gc.keep;
    return mean;
}

std::vector<double> counterfactual_outcome_mean(const Network& net, int K, const OutcomeField& field,
                                                const AllocationPolicy& policy, const GibbsControls& gc,
                                                int replications, std::uint64_t seed) {
    if (replications <= 0) throw std::invalid_argument("replications must be positive");
    const int n = net.size();
    std::vector<double> acc(n, 0.0);
    for (int r = 0; r < replications; ++r) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(r));
        std::vector<int> a = policy.draw(n, rng);
        auto m = stationary_outcome_means(net, K, field, a, gc, rng);
        for (int i = 0; i < n; ++i) acc[i] += m[i];
    }
    for (auto& v : acc) v /= replications;
    return acc;
}

ArmMeans allocation_response(const Network& net, int K, const OutcomeField& field, double alpha,
                             int replications, const GibbsControls& gc, std::uint64_t seed) {
    if (replications <= 0) throw std::invalid_argument("replications must be positive");
    const int n = net.size();
    ArmMeans out;
    out.value.assign(n, 0.0);
    out.treated.assign(n, 0.0);
    out.control.assign(n, 0.0);
    for (int r = 0; r < replications; ++r) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(r));
        std::vector<int> a(n);
        for (int i = 0; i < n; ++i) a[i] = bernoulli(rng, alpha) ? 1 : 0;
        auto m = stationary_outcome_means(net, K, field, a, gc, rng);
        for (int i = 0; i < n; ++i) {
            out.value[i] += m[i];
            if (a[i] == 1)
                out.treated[i] += m[i] / alpha;
            else
                out.control[i] += m[i] / (1.0 - alpha);
        }
    }
    for (int i = 0; i < n; ++i) {
        out.value[i] /= replications;
        out.treated[i] /= replications;
        out.control[i] /= replications;
    }
    return out;
}

} // namespace netdr

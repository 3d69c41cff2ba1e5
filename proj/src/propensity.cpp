#include "netdr/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "netdr/rng.hpp"

namespace netdr {

EnergySpec energy_from_nuisance(const Network& net, const Dataset& data, const FittedNuisance& fit) {
    const auto& spec = fit.treatment_spec;
    EnergySpec e;
    e.K = spec.K;
    int pair_feature = -1;
    for (int f = 0; f < spec.feature_count(); ++f)
        if (spec.features[f].kind == FeatureKind::NeighborTreatmentSum) {
            if (pair_feature >= 0)
                throw std::invalid_argument("treatment spec must have a single neighbor-treatment-sum feature");
            pair_feature = f;
        }
    if (pair_feature < 0)
        throw std::invalid_argument("treatment spec lacks the neighbor-treatment-sum feature");
    e.pair_coef = fit.eta_hat(pair_feature);
    e.field.assign(data.n(), 0.0);
    for (int i = 0; i < data.n(); ++i) {
        Eigen::VectorXd x = build_features(net, data, spec, fit.treatment_ctx, i);
        double g = 0.0;
        for (int f = 0; f < spec.feature_count(); ++f)
            if (f != pair_feature) g += fit.eta_hat(f) * x(f);
        e.field[i] = g;
    }
    return e;
}

LocalNeighborhood LocalNeighborhood::build(const Network& net, const EnergySpec& energy,
                                           const std::vector<int>& a_obs, int i) {
    LocalNeighborhood loc;
    loc.nodes.push_back(i);
    for (int j : net.neighborhood(i, energy.K))
        if (j != i) loc.nodes.push_back(j);

    std::vector<int> local_index(net.size(), -1);
    for (int t = 0; t < loc.size(); ++t) local_index[loc.nodes[t]] = t;

    loc.eff_field.resize(loc.size());
    loc.boundary_treated.assign(loc.size(), 0.0);
    for (int t = 0; t < loc.size(); ++t) {
        int u = loc.nodes[t];
        // interaction partners of u: distance <= K in the full graph
        std::vector<int> partners;
        if (energy.K == 1) {
            partners = net.neighbors(u);
        } else {
            for (int j : net.neighborhood(u, energy.K))
                if (j != u) partners.push_back(j);
        }
        for (int j : partners) {
            int tj = local_index[j];
            if (tj < 0) {
                loc.boundary_treated[t] += a_obs[j];  // clamped boundary treatment
            } else if (tj > t) {
                loc.pairs.emplace_back(t, tj);
            }
        }
        loc.eff_field[t] = energy.field[u] + energy.pair_coef * loc.boundary_treated[t];
        if (a_obs[u]) loc.observed_mask |= (1u << t);
    }
    return loc;
}

namespace {

// log-sum-exp normalized probabilities over all local configurations,
// optionally accumulating by exposure class.
double enumerate_mass(const LocalNeighborhood& loc, double pair_coef, std::uint32_t target_mask,
                      const ExposureMap* map, std::vector<std::pair<std::uint64_t, double>>* classes) {
    const int d = loc.size();
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
    for (std::uint32_t c = 0; c < count; ++c) z += std::exp(energy[c] - max_u);

    if (map != nullptr && classes != nullptr) {
        std::map<std::uint64_t, double> acc;
        for (std::uint32_t c = 0; c < count; ++c)
            acc[map->key(c, d)] += std::exp(energy[c] - max_u) / z;
        classes->assign(acc.begin(), acc.end());
    }
    return std::exp(energy[target_mask] - max_u) / z;
}

std::uint32_t mask_from_target(const LocalNeighborhood& loc, const std::map<int, int>& a_target) {
    std::uint32_t mask = 0;
    for (int t = 0; t < loc.size(); ++t) {
        auto it = a_target.find(loc.nodes[t]);
        if (it == a_target.end())
            throw std::invalid_argument("a_target must assign every node of N(i,K)");
        if (it->second) mask |= (1u << t);
    }
    return mask;
}

void check_cap(const LocalNeighborhood& loc, int cap) {
    if (loc.size() > cap)
        throw std::runtime_error("neighborhood exceeds enumeration cap; use the MC variant");
}

} // namespace

double joint_propensity_exact(const Network& net, const EnergySpec& energy,
                              const std::vector<int>& a_obs, int i,
                              const std::map<int, int>& a_target, int enumeration_cap) {
    auto loc = LocalNeighborhood::build(net, energy, a_obs, i);
    check_cap(loc, enumeration_cap);
    return enumerate_mass(loc, energy.pair_coef, mask_from_target(loc, a_target), nullptr, nullptr);
}

double observed_joint_propensity(const Network& net, const EnergySpec& energy,
                                 const std::vector<int>& a_obs, int i, int enumeration_cap) {
    auto loc = LocalNeighborhood::build(net, energy, a_obs, i);
    check_cap(loc, enumeration_cap);
    return enumerate_mass(loc, energy.pair_coef, loc.observed_mask, nullptr, nullptr);
}

McEstimate joint_propensity_mc(const Network& net, const EnergySpec& energy,
                               const std::vector<int>& a_obs, int i,
                               const std::map<int, int>& a_target, int sweeps,
                               std::mt19937_64& rng) {
    if (sweeps <= 0) throw std::invalid_argument("sweeps must be positive");
    auto loc = LocalNeighborhood::build(net, energy, a_obs, i);
    const int d = loc.size();
    std::uint32_t target = mask_from_target(loc, a_target);

    // neighbor lists inside the local graph
    std::vector<std::vector<int>> local_adj(d);
    for (auto [t1, t2] : loc.pairs) {
        local_adj[t1].push_back(t2);
        local_adj[t2].push_back(t1);
    }
    std::uint32_t state = 0;
    for (int t = 0; t < d; ++t)
        if (bernoulli(rng, 0.5)) state |= (1u << t);

    const int burn = std::max(10, sweeps / 10);
    for (int s = 0; s < burn; ++s)
        for (int t = 0; t < d; ++t) {
            double z = loc.eff_field[t];
            for (int u : local_adj[t])
                if (state & (1u << u)) z += energy.pair_coef;
            if (bernoulli(rng, expit(z)))
                state |= (1u << t);
            else
                state &= ~(1u << t);
        }

    const int n_batches = std::min(20, std::max(1, sweeps / 10));
    const int batch_len = sweeps / n_batches;
    std::vector<double> batch_mean;
    long hits = 0;
    for (int b = 0; b < n_batches; ++b) {
        long bh = 0;
        for (int s = 0; s < batch_len; ++s) {
            for (int t = 0; t < d; ++t) {
                double z = loc.eff_field[t];
                for (int u : local_adj[t])
                    if (state & (1u << u)) z += energy.pair_coef;
                if (bernoulli(rng, expit(z)))
                    state |= (1u << t);
                else
                    state &= ~(1u << t);
            }
            if (state == target) ++bh;
        }
        hits += bh;
        batch_mean.push_back(static_cast<double>(bh) / batch_len);
    }
    McEstimate out;
    const double total = static_cast<double>(n_batches) * batch_len;
    out.value = static_cast<double>(hits) / total;
    double var = 0.0;
    for (double bm : batch_mean) var += (bm - out.value) * (bm - out.value);
    if (n_batches > 1) var /= (n_batches - 1.0) * n_batches;
    out.std_error = std::sqrt(var);
    out.reliable = hits > 0 && n_batches > 1;
    return out;
}

std::uint64_t ExposureMap::key(std::uint32_t local_mask, int local_size) const {
    const std::uint64_t own = local_mask & 1u;
    switch (kind) {
        case Kind::OwnTreatment:
            return own;
        case Kind::OwnAndNeighborCount: {
            std::uint32_t rest = local_mask >> 1;
            int count = 0;
            for (int t = 0; t + 1 < local_size; ++t)
                if (rest & (1u << t)) ++count;
            return (own << 32) | static_cast<std::uint32_t>(count);
        }
        case Kind::FullConfig:
            return local_mask;
    }
    return 0;
}

std::uint64_t observed_exposure(const Network& net, const EnergySpec& energy,
                                const std::vector<int>& a_obs, int i, const ExposureMap& map) {
    auto loc = LocalNeighborhood::build(net, energy, a_obs, i);
    return map.key(loc.observed_mask, loc.size());
}

double exposure_propensity(const Network& net, const EnergySpec& energy,
                           const std::vector<int>& a_obs, int i, const ExposureMap& map,
                           std::uint64_t t, int enumeration_cap) {
    auto dist = exposure_distribution(net, energy, a_obs, i, map, enumeration_cap);
    for (auto& [key, p] : dist)
        if (key == t) return p;
    return 0.0;
}

std::vector<std::pair<std::uint64_t, double>> exposure_distribution(
    const Network& net, const EnergySpec& energy, const std::vector<int>& a_obs, int i,
    const ExposureMap& map, int enumeration_cap) {
    auto loc = LocalNeighborhood::build(net, energy, a_obs, i);
    check_cap(loc, enumeration_cap);
    std::vector<std::pair<std::uint64_t, double>> classes;
    enumerate_mass(loc, energy.pair_coef, loc.observed_mask, &map, &classes);
    return classes;
}

AllocationPolicy AllocationPolicy::bernoulli(double alpha) {
    if (alpha < 0 || alpha > 1) throw std::invalid_argument("alpha must lie in [0,1]");
    AllocationPolicy p;
    p.kind = Kind::Bernoulli;
    p.alpha = alpha;
    return p;
}

AllocationPolicy AllocationPolicy::fixed_vector(std::vector<int> a) {
    AllocationPolicy p;
    p.kind = Kind::FixedVector;
    p.fixed = std::move(a);
    return p;
}

AllocationPolicy AllocationPolicy::bernoulli_with_pins(double alpha, std::map<int, int> pins) {
    if (alpha < 0 || alpha > 1) throw std::invalid_argument("alpha must lie in [0,1]");
    AllocationPolicy p;
    p.kind = Kind::BernoulliWithPins;
    p.alpha = alpha;
    p.pins = std::move(pins);
    return p;
}

std::vector<int> AllocationPolicy::draw(int n, std::mt19937_64& rng) const {
    std::vector<int> a(n, 0);
    switch (kind) {
        case Kind::FixedVector:
            if (static_cast<int>(fixed.size()) != n)
                throw std::invalid_argument("fixed allocation length mismatch");
            return fixed;
        case Kind::Bernoulli:
            for (int i = 0; i < n; ++i) a[i] = bernoulli(rng, alpha) ? 1 : 0;
            return a;
        case Kind::BernoulliWithPins:
            for (int i = 0; i < n; ++i) a[i] = bernoulli(rng, alpha) ? 1 : 0;
            for (auto [node, value] : pins) {
                if (node < 0 || node >= n) throw std::out_of_range("pinned node out of range");
                a[node] = value;
            }
            return a;
    }
    return a;
}

double allocation_weight(const std::map<int, int>& a_local, const AllocationPolicy& policy) {
    double w = 1.0;
    for (auto [node, value] : a_local) {
        switch (policy.kind) {
            case AllocationPolicy::Kind::FixedVector:
                if (policy.fixed[node] != value) return 0.0;
                break;
            case AllocationPolicy::Kind::Bernoulli:
                w *= value ? policy.alpha : 1.0 - policy.alpha;
                break;
            case AllocationPolicy::Kind::BernoulliWithPins: {
                auto pin = policy.pins.find(node);
                if (pin != policy.pins.end()) {
                    if (pin->second != value) return 0.0;
                } else {
                    w *= value ? policy.alpha : 1.0 - policy.alpha;
                }
                break;
            }
        }
    }
    return w;
}

} // namespace netdr

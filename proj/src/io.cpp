#include "netdr/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace netdr {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

NamedNetwork read_named_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list: " + path);
    NamedNetwork out;
    std::unordered_map<std::string, int> index;
    auto id_of = [&](const std::string& name) {
        auto it = index.find(name);
        if (it != index.end()) return it->second;
        int id = static_cast<int>(out.names.size());
        index.emplace(name, id);
        out.names.push_back(name);
        return id;
    };
    std::vector<std::pair<int, int>> edges;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string u, v;
        if (!(ls >> u)) continue;
        if (!(ls >> v)) throw std::runtime_error("malformed edge line: " + line);
        edges.emplace_back(id_of(u), id_of(v));
    }
    out.net = Network::from_edges(static_cast<int>(out.names.size()), std::move(edges));
    return out;
}

Dataset read_node_csv(const std::string& path, NamedNetwork& named) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open node csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("node csv is empty: " + path);
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "id")
        throw std::runtime_error("node csv header must start with: id,y,a");
    for (const std::string& required : {std::string("y"), std::string("a")}) {
        if (std::find(header.begin(), header.end(), required) == header.end())
            throw std::runtime_error("missing required column: " + required);
    }
    int y_col = static_cast<int>(std::find(header.begin(), header.end(), "y") - header.begin());
    int a_col = static_cast<int>(std::find(header.begin(), header.end(), "a") - header.begin());
    std::vector<int> l_cols;
    for (int c = 1; c < static_cast<int>(header.size()); ++c)
        if (c != y_col && c != a_col) l_cols.push_back(c);

    std::unordered_map<std::string, int> index;
    for (int i = 0; i < static_cast<int>(named.names.size()); ++i) index[named.names[i]] = i;

    struct Row {
        int y, a;
        std::vector<double> l;
    };
    std::unordered_map<int, Row> rows;
    auto edges = named.net.edges();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() < header.size())
            throw std::runtime_error("missing covariate column: " + header[fields.size()] +
                                     " in row '" + line + "'");
        const std::string& id = fields[0];
        int dense;
        auto it = index.find(id);
        if (it == index.end()) {
            dense = static_cast<int>(named.names.size());  // isolated node
            index.emplace(id, dense);
            named.names.push_back(id);
        } else {
            dense = it->second;
        }
        Row row;
        auto parse_binary = [&](int col, const char* what) {
            double v = std::stod(fields[col]);
            if (v != 0.0 && v != 1.0)
                throw std::runtime_error(std::string(what) + " must be 0 or 1; got '" +
                                         fields[col] + "' for id " + id);
            return static_cast<int>(v);
        };
        row.y = parse_binary(y_col, "outcome y");
        row.a = parse_binary(a_col, "treatment a");
        for (int c : l_cols) row.l.push_back(std::stod(fields[c]));
        rows.emplace(dense, std::move(row));
    }
    const int n = static_cast<int>(named.names.size());
    named.net = Network::from_edges(n, std::move(edges));
    Dataset data;
    data.y.resize(n);
    data.a.resize(n);
    data.l.assign(n, std::vector<double>(l_cols.size(), 0.0));
    for (int i = 0; i < n; ++i) {
        auto it = rows.find(i);
        if (it == rows.end())
            throw std::runtime_error("node " + named.names[i] + " appears in the edge list but has no csv row");
        data.y[i] = it->second.y;
        data.a[i] = it->second.a;
        data.l[i] = it->second.l;
    }
    return data;
}

void write_node_csv(const Dataset& data, const std::vector<std::string>& names,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write node csv: " + path);
    out << "id,y,a";
    for (int c = 0; c < data.covariate_count(); ++c) out << ",l" << (c + 1);
    out << '\n';
    for (int i = 0; i < data.n(); ++i) {
        out << (i < static_cast<int>(names.size()) ? names[i] : std::to_string(i)) << ','
            << data.y[i] << ',' << data.a[i];
        for (int c = 0; c < data.covariate_count(); ++c) out << ',' << data.l[i][c];
        out << '\n';
    }
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << j.dump(2) << '\n';
}

AnalysisConfig AnalysisConfig::from_json(const nlohmann::json& j) {
    AnalysisConfig c;
    c.edge_list = j.at("edge_list").get<std::string>();
    c.nodes_csv = j.at("nodes_csv").get<std::string>();
    if (j.contains("estimands")) {
        for (const auto& e : j.at("estimands")) {
            EstimandRequestConfig rc;
            rc.kind = estimand_from_name(e.at("kind").get<std::string>());
            rc.alpha = e.value("alpha", 0.5);
            rc.alpha_prime = e.value("alpha_prime", 0.2);
            c.estimands.push_back(rc);
        }
    } else {
        for (auto k : {Estimand::Gamma, Estimand::DE, Estimand::IE, Estimand::IE2})
            c.estimands.push_back({k, 0.5, 0.2});
    }
    c.K = j.value("K", 1);
    c.kernel.bandwidth = j.value("bandwidth", KernelSpec::default_bandwidth(c.K));
    if (j.value("kernel", std::string("bartlett")) == "truncated")
        c.kernel.kind = KernelSpec::Kind::Truncated;
    c.ci_level = j.value("ci_level", 0.95);
    c.clip_floor = j.value("clip_floor", 2e-3);
    c.enumeration_cap = j.value("enumeration_cap", kDefaultEnumerationCap);
    c.mode = j.value("mode", std::string("exact")) == "mc" ? EstimandRequest::Mode::MC
                                                           : EstimandRequest::Mode::Exact;
    c.mc_draws = j.value("mc_draws", 200);
    c.run_auto_g = j.value("run_auto_g", true);
    c.auto_g.replications = j.value("auto_g_replications", 16);
    c.seed = j.value("seed", 1ull);
    c.output = j.value("output", std::string());
    return c;
}

nlohmann::json analyze(const AnalysisConfig& config) {
    NamedNetwork named = read_named_edge_list(config.edge_list);
    Dataset data = read_node_csv(config.nodes_csv, named);
    const Network& net = named.net;

    ModelSpec outcome_spec = ModelSpec::canonical_outcome(data.covariate_count(), config.K);
    ModelSpec treatment_spec = ModelSpec::canonical_treatment(data.covariate_count(), config.K);
    FittedNuisance fit = fit_nuisances(net, data, outcome_spec, treatment_spec, config.seed);

    nlohmann::ordered_json report;
    report["n"] = net.size();
    report["edges"] = net.edge_count();
    report["covariates"] = data.covariate_count();
    report["K"] = config.K;
    report["kernel"] = config.kernel.kind == KernelSpec::Kind::Bartlett ? "bartlett" : "truncated";
    report["bandwidth"] = config.kernel.bandwidth;
    report["clip_floor"] = config.clip_floor;
    report["seed"] = config.seed;

    nlohmann::ordered_json nuis;
    auto coef_block = [&](const ModelSpec& spec, const Eigen::VectorXd& coef,
                          const LogisticFit& lf) {
        nlohmann::ordered_json b;
        b["formula"] = spec.describe();
        nlohmann::ordered_json coefs = nlohmann::ordered_json::array();
        for (int f = 0; f < spec.feature_count(); ++f) coefs.push_back(coef(f));
        b["coefficients"] = coefs;
        b["converged"] = lf.converged;
        b["separation"] = lf.separation;
        b["ridged"] = lf.ridged;
        b["max_gradient"] = lf.max_grad;
        return b;
    };
    nuis["outcome"] = coef_block(outcome_spec, fit.theta_hat, fit.outcome_fit);
    nuis["treatment"] = coef_block(treatment_spec, fit.eta_hat, fit.treatment_fit);
    report["nuisance"] = nuis;

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& rc : config.estimands) {
        EstimandRequest req;
        req.kind = rc.kind;
        req.alpha = rc.alpha;
        req.alpha_prime = rc.alpha_prime;
        req.K = config.K;
        req.mode = config.mode;
        req.mc_draws = config.mc_draws;
        req.enumeration_cap = config.enumeration_cap;
        req.clip_floor = config.clip_floor;
        EstimandEstimate est = estimate(net, data, fit, req, config.seed);
        HacResult hac = hac_variance(est.scores, net, config.kernel);
        auto ci = confidence_interval(est.point, hac.lambda, net.size(), config.ci_level);
        nlohmann::ordered_json row;
        row["estimand"] = estimand_name(rc.kind);
        row["alpha"] = rc.alpha;
        if (rc.kind == Estimand::IE2) row["alpha_prime"] = rc.alpha_prime;
        row["point"] = est.point;
        row["lambda_hat"] = hac.lambda;
        row["ci_level"] = config.ci_level;
        row["ci_lo"] = ci.first;
        row["ci_hi"] = ci.second;
        row["hac_floored"] = hac.floored;
        row["clipped_units"] = est.clipped_count;
        row["mc_propensity_units"] = est.mc_propensity_units;
        if (config.run_auto_g)
            row["auto_g_point"] =
                auto_g_estimate(net, data, fit, req, config.auto_g, config.seed ^ 0xa9u);
        rows.push_back(row);
    }
    report["estimates"] = rows;
    if (!config.output.empty()) write_json_file(report, config.output);
    return report;
}

SimulateConfig SimulateConfig::from_json(const nlohmann::json& j) {
    SimulateConfig c;
    c.n = j.value("n", 800);
    c.m = j.value("m", 1);
    c.max_degree = j.value("max_degree", 2);
    if (j.contains("params")) {
        c.params = sim_params_from_json(j.at("params"));
        c.custom_params = true;
    }
    c.n_iter = j.value("n_iter", 10000);
    c.burn_in = j.value("burn_in", 2000);
    c.thin = j.value("thin", 1);
    c.take = j.value("take", 1);
    c.seed = j.value("seed", 20240817ull);
    c.output_dir = j.value("output_dir", std::string("."));
    return c;
}

std::vector<std::string> run_simulate(const SimulateConfig& config) {
    if (config.burn_in >= config.n_iter)
        throw std::invalid_argument("burn_in must be < n_iter");
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    Network net = generate_ba_capped(config.n, config.m, config.max_degree, config.seed);
    SimParams params = config.custom_params ? config.params : SimParams::table_defaults(config.m);

    std::vector<std::string> written;
    std::string net_path = (fs::path(config.output_dir) / "network.edges").string();
    write_edge_list(net, net_path);
    written.push_back(net_path);

    const int retained = (config.n_iter - config.burn_in + config.thin - 1) / config.thin;
    const int take = std::min(config.take, retained);
    const int first_written = retained - take;
    std::vector<std::string> names;
    for (int i = 0; i < config.n; ++i) names.push_back(std::to_string(i));
    simulate_stream(net, params, config.n_iter, config.burn_in, config.thin,
                    config.seed ^ 0x5eed5eedull, [&](int idx, const Dataset& d) {
                        if (idx < first_written) return;
                        std::ostringstream name;
                        name << "dataset_" << std::setw(4) << std::setfill('0')
                             << (idx - first_written) << ".csv";
                        std::string p = (fs::path(config.output_dir) / name.str()).string();
                        write_node_csv(d, names, p);
                        written.push_back(p);
                    });
    return written;
}

McCliConfig McCliConfig::from_json(const nlohmann::json& j) {
    McCliConfig c;
    if (j.contains("cells")) {
        c.cells.clear();
        for (const auto& cell : j.at("cells"))
            c.cells.emplace_back(cell.at(0).get<int>(), cell.at(1).get<int>());
    }
    if (j.contains("scenarios")) {
        c.scenarios.clear();
        for (const auto& s : j.at("scenarios"))
            c.scenarios.push_back(scenario_from_name(s.get<std::string>()));
    }
    auto& b = c.base;
    b.n = j.value("n", 800);
    b.replicates = j.value("replicates", 500);
    b.burn_in = j.value("burn_in", 2000);
    b.thin = j.value("thin", 1);
    b.seed = j.value("seed", 20240817ull);
    b.alpha = j.value("alpha", 0.7);
    b.alpha_prime = j.value("alpha_prime", 0.3);
    b.K = j.value("K", 1);
    b.clip_floor = j.value("clip_floor", 2e-3);
    b.kernel.bandwidth = j.value("bandwidth", KernelSpec::default_bandwidth(b.K));
    b.run_auto_g = j.value("run_auto_g", true);
    b.auto_g.replications = j.value("auto_g_replications", 16);
    b.truth.replications = j.value("truth_replications", 512);
    if (j.contains("estimands")) {
        b.estimands.clear();
        for (const auto& e : j.at("estimands"))
            b.estimands.push_back(estimand_from_name(e.get<std::string>()));
    }
    if (j.contains("params")) {
        b.base_params = sim_params_from_json(j.at("params"));
        b.custom_params = true;
    }
    c.output_prefix = j.value("output_prefix", std::string("mc"));
    return c;
}

std::vector<std::string> run_mc(const McCliConfig& config) {
    std::vector<MCResult> results;
    for (auto scenario : config.scenarios) {
        for (auto [m, cap] : config.cells) {
            ScenarioConfig sc = config.base;
            sc.m = m;
            sc.max_degree = cap;
            sc.scenario = scenario;
            results.push_back(run_experiment(sc));
        }
    }
    std::vector<std::string> written;
    std::string csv = config.output_prefix + ".csv";
    write_mc_csv(results, csv);
    written.push_back(csv);
    std::string js = config.output_prefix + ".json";
    write_json_file(mc_results_json(results), js);
    written.push_back(js);
    return written;
}

} // namespace netdr

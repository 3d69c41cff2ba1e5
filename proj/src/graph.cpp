#include "netdr/graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "netdr/rng.hpp"

namespace netdr {

Network Network::from_edges(int n, std::vector<std::pair<int, int>> edges) {
    if (n < 0) throw std::invalid_argument("node count must be nonnegative");
    Network net;
    net.n_ = n;
    net.adjacency_.assign(n, {});
    for (auto& [u, v] : edges) {
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw std::out_of_range("edge endpoint out of range");
        if (u == v) throw std::invalid_argument("self-loops are not allowed");
        if (u > v) std::swap(u, v);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (auto [u, v] : edges) {
        net.adjacency_[u].push_back(v);
        net.adjacency_[v].push_back(u);
    }
    for (auto& a : net.adjacency_) std::sort(a.begin(), a.end());
    net.edges_ = std::move(edges);
    return net;
}

void Network::check_node(int i) const {
    if (i < 0 || i >= n_) throw std::out_of_range("node id out of range");
}

const std::vector<int>& Network::neighbors(int i) const {
    check_node(i);
    return adjacency_[i];
}

int Network::degree(int i) const {
    check_node(i);
    return static_cast<int>(adjacency_[i].size());
}

std::vector<std::vector<int>> Network::shells(int i, int smax) const {
    check_node(i);
    if (smax < 0) throw std::invalid_argument("radius must be nonnegative");
    std::vector<std::vector<int>> out(smax + 1);
    std::vector<int> dist(n_, -1);
    dist[i] = 0;
    out[0] = {i};
    std::vector<int> frontier{i};
    for (int s = 1; s <= smax && !frontier.empty(); ++s) {
        std::vector<int> next;
        for (int u : frontier)
            for (int v : adjacency_[u])
                if (dist[v] < 0) {
                    dist[v] = s;
                    next.push_back(v);
                }
        std::sort(next.begin(), next.end());
        out[s] = next;
        frontier = std::move(next);
    }
    return out;
}

std::vector<int> Network::neighborhood(int i, int s) const {
    auto sh = shells(i, s);
    std::vector<int> out;
    for (auto& shell : sh) out.insert(out.end(), shell.begin(), shell.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> Network::boundary(int i, int s) const {
    return shells(i, s)[s];
}

Network generate_ba_capped(int n, int m, int max_degree, std::uint64_t seed) {
    if (m < 1 || m >= n) throw std::invalid_argument("require 1 <= m < n");
    if (max_degree < m) throw std::invalid_argument("require max_degree >= m");
    auto rng = make_rng(seed);
    std::vector<int> degree(n, 0);
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(n - m) * m);
    std::vector<int> eligible;
    std::vector<double> weight;
    for (int v = m; v < n; ++v) {
        eligible.clear();
        weight.clear();
        for (int u = 0; u < v; ++u)
            if (degree[u] < max_degree) {
                eligible.push_back(u);
                weight.push_back(degree[u] + 1.0);
            }
        if (static_cast<int>(eligible.size()) < m)
            throw std::runtime_error("capped BA generation infeasible: fewer than m eligible targets; re-seed");
        // m distinct targets, weight proportional to degree + 1
        for (int e = 0; e < m; ++e) {
            double total = std::accumulate(weight.begin(), weight.end(), 0.0);
            double r = uniform01(rng) * total;
            std::size_t pick = eligible.size();
            std::size_t last_nonzero = eligible.size();
            double acc = 0.0;
            for (std::size_t k = 0; k < eligible.size(); ++k) {
                if (weight[k] == 0.0) continue;
                last_nonzero = k;
                acc += weight[k];
                if (r < acc) {
                    pick = k;
                    break;
                }
            }
            if (pick == eligible.size()) pick = last_nonzero;  // fp rounding at the top end
            int u = eligible[pick];
            edges.emplace_back(u, v);
            degree[u] += 1;
            degree[v] += 1;
            weight[pick] = 0.0;  // without replacement
        }
    }
    return Network::from_edges(n, std::move(edges));
}

Network read_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list: " + path);
    std::vector<std::pair<int, int>> edges;
    int max_id = -1;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        long long u, v;
        if (!(ls >> u)) continue;  // blank or comment-only line
        if (!(ls >> v)) throw std::runtime_error("malformed edge line: " + line);
        edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
        max_id = std::max({max_id, static_cast<int>(u), static_cast<int>(v)});
    }
    return Network::from_edges(max_id + 1, std::move(edges));
}

void write_edge_list(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write edge list: " + path);
    out << "# " << net.size() << " nodes, " << net.edge_count() << " edges\n";
    for (auto [u, v] : net.edges()) out << u << ' ' << v << '\n';
}

} // namespace netdr

#ifndef NETDR_GRAPH_HPP
#define NETDR_GRAPH_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace netdr {

// Undirected simple graph with dense integer node ids in [0, n).
// Immutable after construction; safe for concurrent read-only queries.
class Network {
public:
    Network() = default;
    static Network from_edges(int n, std::vector<std::pair<int, int>> edges);

    int size() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int i) const;
    int degree(int i) const;

    // {j : d(i,j) <= s}, always contains i. BFS, stopping at radius s.
    std::vector<int> neighborhood(int i, int s) const;
    // {j : d(i,j) == s}; boundary(i,0) = {i}.
    std::vector<int> boundary(int i, int s) const;
    // shells[s] = boundary(i,s) for s = 0..smax, from a single BFS.
    std::vector<std::vector<int>> shells(int i, int smax) const;

private:
    void check_node(int i) const;
    int n_ = 0;
    std::vector<std::pair<int, int>> edges_;      // canonical u < v
    std::vector<std::vector<int>> adjacency_;     // sorted per node
};

// Capped Barabasi-Albert: starts from m isolated nodes; each new node attaches
// to m distinct existing nodes drawn with probability proportional to
// (degree + 1) among nodes whose degree is below max_degree. Throws
// std::runtime_error if fewer than m eligible targets exist at some step.
Network generate_ba_capped(int n, int m, int max_degree, std::uint64_t seed);

// Edge-list text format: one "u v" pair per line, '#' starts a comment.
Network read_edge_list(const std::string& path);
void write_edge_list(const Network& net, const std::string& path);

} // namespace netdr

#endif

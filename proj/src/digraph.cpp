#include "fovctl/digraph.hpp"

#include <algorithm>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>

#include "fovctl/errors.hpp"

namespace fovctl {

Topology::Topology(int node_count, std::vector<std::pair<int, int>> edges)
    : n_(node_count), edges_(std::move(edges)) {
    if (n_ < 0) throw validation_error("topology: negative node count");
    std::sort(edges_.begin(), edges_.end());
    std::set<std::pair<int, int>> seen;
    for (const auto& [i, j] : edges_) {
        if (i < 0 || i >= n_ || j < 0 || j >= n_)
            throw validation_error("topology: edge (" + std::to_string(i + 1) + "->" +
                                   std::to_string(j + 1) + ") out of range");
        if (i == j)
            throw validation_error("topology: self-loop at robot " + std::to_string(i + 1));
        if (!seen.insert({i, j}).second)
            throw validation_error("topology: duplicate edge (" + std::to_string(i + 1) + "->" +
                                   std::to_string(j + 1) + ")");
    }
    out_.resize(n_);
    in_.resize(n_);
    for (int e = 0; e < edge_count(); ++e) {
        out_[edges_[e].first].push_back(e);
        in_[edges_[e].second].push_back(e);
    }
}

int Topology::edge_index(int i, int j) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(i, j));
    if (it == edges_.end() || *it != std::make_pair(i, j)) return -1;
    return static_cast<int>(it - edges_.begin());
}

IncidencePair build_incidence(const Topology& topology) {
    const int n = topology.node_count();
    const int m = topology.edge_count();
    IncidencePair pair;
    pair.B = Eigen::MatrixXd::Zero(n, m);
    pair.B_plus = Eigen::MatrixXd::Zero(n, m);
    for (int e = 0; e < m; ++e) {
        const auto [i, j] = topology.edge(e);
        pair.B(i, e) = 1.0;
        pair.B(j, e) = -1.0;
        pair.B_plus(i, e) = 1.0;
    }
    return pair;
}

Eigen::MatrixXd edge_laplacian(const IncidencePair& pair) {
    return pair.B.transpose() * pair.B_plus;
}

BigLaplacian build_big_laplacian(const IncidencePair& pair) {
    const int m = static_cast<int>(pair.B.cols());
    BigLaplacian out;
    out.L_bar = Eigen::MatrixXd::Zero(3 * m, 3 * m);
    const Eigen::MatrixXd edge_lap = edge_laplacian(pair);
    // xy block: (B^T B+) (x) I2
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            out.L_bar(2 * r, 2 * c) = edge_lap(r, c);
            out.L_bar(2 * r + 1, 2 * c + 1) = edge_lap(r, c);
        }
    // theta block: B+^T B+
    out.L_bar.block(2 * m, 2 * m, m, m) = pair.B_plus.transpose() * pair.B_plus;
    out.L_bar_sym = 0.5 * (out.L_bar + out.L_bar.transpose());
    return out;
}

bool is_stability_certified(const BigLaplacian& laplacian, double tol) {
    if (laplacian.L_bar_sym.rows() == 0) return true;  // empty edge set
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian.L_bar_sym,
                                                          Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw solver_error("stability certificate: eigen decomposition failed");
    return solver.eigenvalues().minCoeff() >= -tol;
}

bool has_spanning_tree(const Topology& topology, int root) {
    const int n = topology.node_count();
    if (root < 0 || root >= n) throw validation_error("spanning tree: root out of range");
    // BFS from the root along reversed edges: (i,j) traversed j -> i.
    std::vector<char> reached(n, 0);
    std::vector<int> stack{root};
    reached[root] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int e : topology.in_edges(v)) {
            const int u = topology.edge(e).first;
            if (!reached[u]) {
                reached[u] = 1;
                stack.push_back(u);
            }
        }
    }
    return std::all_of(reached.begin(), reached.end(), [](char c) { return c != 0; });
}

}  // namespace fovctl

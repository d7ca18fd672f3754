#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fovctl {

/// Directed interaction graph. An edge (i,j) means "robot i observes
/// robot j": j lies inside i's sensing triangle and i carries the control
/// burden of keeping it there.
///
/// Edges are kept in the canonical sort (all edges leaving robot 0 first,
/// ordered by target, then robot 1, ...), and the edge index g(i,j) refers
/// to that ordering. Instances are immutable after construction.
class Topology {
public:
    /// Validates (no self-loops, no duplicate directed edges, ids in range)
    /// and sorts the edge list. Throws validation_error on bad input.
    Topology(int node_count, std::vector<std::pair<int, int>> edges);

    int node_count() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    std::pair<int, int> edge(int e) const { return edges_[e]; }

    /// g(i,j): index of the directed edge (i,j), or -1 if absent.
    int edge_index(int i, int j) const;

    /// Edge ids leaving / entering robot i.
    const std::vector<int>& out_edges(int i) const { return out_[i]; }
    const std::vector<int>& in_edges(int i) const { return in_[i]; }

    int out_degree(int i) const { return static_cast<int>(out_[i].size()); }
    int in_degree(int i) const { return static_cast<int>(in_[i].size()); }
    int degree(int i) const { return out_degree(i) + in_degree(i); }

private:
    int n_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> out_, in_;
};

/// Incidence matrix B (node x edge, +1 leaving / -1 entering) and its
/// outgoing part B+ (negative entries zeroed).
struct IncidencePair {
    Eigen::MatrixXd B;
    Eigen::MatrixXd B_plus;
};

/// Block matrix certifying stability of the directed potential flow:
///   L = [ (B^T B+) (x) I2       0      ]
///       [        0          B+^T B+   ]
/// together with its symmetric part.
struct BigLaplacian {
    Eigen::MatrixXd L_bar;
    Eigen::MatrixXd L_bar_sym;
};

IncidencePair build_incidence(const Topology& topology);

/// Directed edge Laplacian B^T B+ (edge x edge).
Eigen::MatrixXd edge_laplacian(const IncidencePair& pair);

BigLaplacian build_big_laplacian(const IncidencePair& pair);

/// True iff the symmetric part of L is positive semidefinite up to -tol.
/// Throws solver_error if the eigen decomposition fails.
bool is_stability_certified(const BigLaplacian& laplacian, double tol = 1e-9);

/// Leader-rooted spanning tree check. Edge (i,j) means "i observes j", so
/// the requirement is that every robot can trace a chain of observation
/// edges to the root: reachability is run from the root on the reversed
/// graph.
bool has_spanning_tree(const Topology& topology, int root);

}  // namespace fovctl

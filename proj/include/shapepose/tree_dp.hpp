#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace shapepose {

/// Pairwise score between a child state and its parent's state.
using PairScore = std::function<double(int child, int child_state, int parent_state)>;

/// Two-way max-product tables over a tree whose nodes are numbered in
/// topological order: parent[0] == -1 and parent[i] < i otherwise.
///
/// - subtree[i](s): best score of i's subtree with node i in state s.
/// - up[c](s): message from child c to its parent in parent state s, with
///   up_arg[c](s) the maximizing child state.
/// - down[i](s): best score of everything outside i's subtree (including the
///   edge to i's parent) with node i in state s; down_arg[i](s) is the
///   maximizing parent state. down[0] is zero.
struct TreeTables {
  std::vector<int> parent;
  std::vector<std::vector<int>> children;
  std::vector<Eigen::VectorXd> unary;
  std::vector<Eigen::VectorXd> subtree;
  std::vector<Eigen::VectorXd> up;
  std::vector<Eigen::VectorXi> up_arg;
  std::vector<Eigen::VectorXd> down;
  std::vector<Eigen::VectorXi> down_arg;

  int nodes() const { return int(parent.size()); }
  int states(int node) const { return int(unary[node].size()); }

  /// Best total score over all configurations with `node` in each state.
  Eigen::VectorXd max_marginal(int node) const { return subtree[node] + down[node]; }
};

struct Configuration {
  std::vector<int> states;
  double score = 0;
};

/// Sizes the tables for the given tree and unaries; messages left empty.
TreeTables make_tree_tables(std::vector<int> parent, std::vector<Eigen::VectorXd> unary);

/// Leaf-to-root and root-to-leaf passes with an explicit O(N_child * N_parent)
/// maximization per edge.
void run_two_way(TreeTables& tables, const PairScore& pair);

/// Exact score of a configuration: unaries plus every edge's pairwise term.
double score_configuration(const TreeTables& tables, const PairScore& pair, const std::vector<int>& states);

/// The argmax configuration. Root ties resolve to the smallest state index.
Configuration best_configuration(const TreeTables& tables, const PairScore& pair);

/// Best configuration with `node` clamped to `state`, read off the two-way
/// tables ("considering each node as the root").
std::vector<int> backtrack_from(const TreeTables& tables, int node, int state);

/// Exact M-best configurations by partitioning the solution space in node
/// order (each branch fixes a prefix of nodes and excludes states of the
/// next one), reusing the upward messages to solve every branch in O(N).
/// Sorted by score descending; ties by lexicographic state vector.
std::vector<Configuration> m_best_configurations(const TreeTables& tables, const PairScore& pair, int m);

}  // namespace shapepose

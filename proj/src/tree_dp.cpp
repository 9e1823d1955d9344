#include "shapepose/tree_dp.hpp"

#include "shapepose/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace shapepose {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

TreeTables make_tree_tables(std::vector<int> parent, std::vector<Eigen::VectorXd> unary) {
  const int k = int(parent.size());
  if (k == 0 || int(unary.size()) != k) fail(ErrorKind::DimensionMismatch, "tree and unary sizes differ");
  if (parent[0] != -1) fail(ErrorKind::ConfigError, "node 0 must be the root");
  for (int i = 1; i < k; ++i)
    if (parent[i] < 0 || parent[i] >= i) fail(ErrorKind::ConfigError, "parents must precede their children");

  TreeTables t;
  t.parent = std::move(parent);
  t.unary = std::move(unary);
  t.children.assign(k, {});
  for (int i = 1; i < k; ++i) t.children[t.parent[i]].push_back(i);
  t.subtree.resize(k);
  t.up.resize(k);
  t.up_arg.resize(k);
  t.down.resize(k);
  t.down_arg.resize(k);
  return t;
}

void run_two_way(TreeTables& t, const PairScore& pair) {
  const int k = t.nodes();
  for (int i = k - 1; i >= 0; --i) {
    t.subtree[i] = t.unary[i];
    for (int c : t.children[i]) t.subtree[i] += t.up[c];
    if (i == 0) continue;

    const int p = t.parent[i];
    const int np = t.states(p), nc = t.states(i);
    t.up[i] = Eigen::VectorXd::Constant(np, kNegInf);
    t.up_arg[i] = Eigen::VectorXi::Zero(np);
    for (int sp = 0; sp < np; ++sp)
      for (int sc = 0; sc < nc; ++sc) {
        const double v = t.subtree[i](sc) + pair(i, sc, sp);
        if (v > t.up[i](sp)) {
          t.up[i](sp) = v;
          t.up_arg[i](sp) = sc;
        }
      }
  }

  t.down[0] = Eigen::VectorXd::Zero(t.states(0));
  t.down_arg[0] = Eigen::VectorXi::Constant(t.states(0), -1);
  for (int i = 1; i < k; ++i) {
    const int p = t.parent[i];
    Eigen::VectorXd outside = t.unary[p] + t.down[p];
    for (int c : t.children[p])
      if (c != i) outside += t.up[c];

    const int np = t.states(p), nc = t.states(i);
    t.down[i] = Eigen::VectorXd::Constant(nc, kNegInf);
    t.down_arg[i] = Eigen::VectorXi::Zero(nc);
    for (int sc = 0; sc < nc; ++sc)
      for (int sp = 0; sp < np; ++sp) {
        const double v = outside(sp) + pair(i, sc, sp);
        if (v > t.down[i](sc)) {
          t.down[i](sc) = v;
          t.down_arg[i](sc) = sp;
        }
      }
  }
}

double score_configuration(const TreeTables& t, const PairScore& pair, const std::vector<int>& states) {
  double s = 0;
  for (int i = 0; i < t.nodes(); ++i) {
    s += t.unary[i](states[i]);
    if (i > 0) s += pair(i, states[i], states[t.parent[i]]);
  }
  return s;
}

namespace {

// Fills every node after `from` (in index order) whose state is still unset
// from the upward argmax tables.
void fill_descendants(const TreeTables& t, std::vector<int>& states, int from) {
  for (int j = from + 1; j < t.nodes(); ++j)
    if (states[j] < 0) states[j] = t.up_arg[j](states[t.parent[j]]);
}

}  // namespace

Configuration best_configuration(const TreeTables& t, const PairScore& pair) {
  int best = 0;
  for (int s = 1; s < t.states(0); ++s)
    if (t.subtree[0](s) > t.subtree[0](best)) best = s;
  Configuration c;
  c.states.assign(t.nodes(), -1);
  c.states[0] = best;
  fill_descendants(t, c.states, 0);
  c.score = score_configuration(t, pair, c.states);
  return c;
}

std::vector<int> backtrack_from(const TreeTables& t, int node, int state) {
  std::vector<int> states(t.nodes(), -1);
  states[node] = state;
  // Walk up through the downward argmax tables, then fill the remaining
  // subtrees from the upward ones. Nodes off the root path are filled in
  // index order, after their parent.
  for (int i = node; i > 0; i = t.parent[i]) states[t.parent[i]] = t.down_arg[i](states[i]);
  for (int j = 1; j < t.nodes(); ++j)
    if (states[j] < 0) states[j] = t.up_arg[j](states[t.parent[j]]);
  return states;
}

namespace {

struct Branch {
  int fixed = 0;                 // nodes [0, fixed) pinned to `pinned`
  std::vector<int> pinned;
  std::vector<int> excluded;     // excluded states of node `fixed`
  Configuration solution;

  bool operator<(const Branch& other) const {
    // priority_queue pops the largest: higher score first, then the
    // lexicographically smaller state vector.
    if (solution.score != other.solution.score) return solution.score < other.solution.score;
    return solution.states > other.solution.states;
  }
};

// Best configuration with nodes [0, b.fixed) pinned and node b.fixed outside
// b.excluded. Returns false when no admissible state exists.
bool solve_branch(const TreeTables& t, const PairScore& pair, Branch& b) {
  const int k = b.fixed;
  std::vector<int> states(t.nodes(), -1);
  for (int i = 0; i < k; ++i) states[i] = b.pinned[i];

  const int parent = k > 0 ? t.parent[k] : -1;
  int best = -1;
  double best_v = kNegInf;
  for (int s = 0; s < t.states(k); ++s) {
    if (std::find(b.excluded.begin(), b.excluded.end(), s) != b.excluded.end()) continue;
    double v = t.subtree[k](s);
    if (parent >= 0) v += pair(k, s, states[parent]);
    if (v > best_v) {
      best_v = v;
      best = s;
    }
  }
  if (best < 0 || !std::isfinite(best_v)) return false;

  states[k] = best;
  fill_descendants(t, states, k);
  b.solution.states = std::move(states);
  b.solution.score = score_configuration(t, pair, b.solution.states);
  return std::isfinite(b.solution.score);
}

}  // namespace

std::vector<Configuration> m_best_configurations(const TreeTables& t, const PairScore& pair, int m) {
  std::vector<Configuration> out;
  if (m < 1) return out;

  std::priority_queue<Branch> queue;
  Branch root;
  if (solve_branch(t, pair, root)) queue.push(std::move(root));

  while (!queue.empty() && int(out.size()) < m) {
    Branch b = queue.top();
    queue.pop();
    const auto& sol = b.solution.states;
    for (int j = b.fixed; j < t.nodes(); ++j) {
      Branch child;
      child.fixed = j;
      child.pinned.assign(sol.begin(), sol.begin() + j);
      child.excluded = j == b.fixed ? b.excluded : std::vector<int>{};
      child.excluded.push_back(sol[j]);
      if (solve_branch(t, pair, child)) queue.push(std::move(child));
    }
    out.push_back(std::move(b.solution));
  }
  return out;
}

}  // namespace shapepose

#pragma once

// Hierarchical density-based clustering (HDBSCAN*): mutual-reachability
// distances, minimum spanning tree, condensed cluster tree and
// excess-of-mass extraction over a dense pairwise distance matrix.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace convo::density {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct HdbscanParams {
  int min_cluster_size = 10;
  /// Neighbours (self included) defining the core distance; 0 means min_cluster_size.
  int min_samples = 0;
  bool allow_single_cluster = false;
};

struct HdbscanResult {
  /// Cluster index per point, -1 for noise. Clusters are numbered 0..num_clusters-1.
  std::vector<int> labels;
  int num_clusters = 0;
  /// Stability of each selected cluster, indexed by label.
  std::vector<double> stability;

  std::size_t noise_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
  }
};

/// Row-wise Euclidean distances between the rows of `points`.
template <typename Derived>
Matrix<typename Derived::Scalar> pairwise_euclidean(const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = points.rows();
  Matrix<Scalar> d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = Scalar(0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Scalar v = (points.row(i) - points.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

namespace detail {

struct MstEdge {
  Eigen::Index a;
  Eigen::Index b;
  double weight;
};

struct CondensedEntry {
  std::int64_t parent;
  std::int64_t child;
  double lambda;
  std::int64_t child_size;
};

inline constexpr double kMaxLambda = 1e12;

inline double to_lambda(double dist) { return dist > 1.0 / kMaxLambda ? 1.0 / dist : kMaxLambda; }

template <typename Derived>
std::vector<double> core_distances(const Eigen::MatrixBase<Derived>& dist, int min_samples) {
  const Eigen::Index n = dist.rows();
  const auto k = static_cast<std::size_t>(std::min<Eigen::Index>(min_samples - 1, n - 1));
  std::vector<double> core(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = static_cast<double>(dist(i, j));
    row[static_cast<std::size_t>(i)] = 0.0;
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
    core[static_cast<std::size_t>(i)] = row[k];
  }
  return core;
}

// Prim's algorithm on the dense mutual-reachability graph.
template <typename Derived>
std::vector<MstEdge> mutual_reachability_mst(const Eigen::MatrixBase<Derived>& dist, const std::vector<double>& core) {
  const Eigen::Index n = dist.rows();
  std::vector<MstEdge> edges;
  edges.reserve(static_cast<std::size_t>(n > 0 ? n - 1 : 0));
  std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<Eigen::Index> from(static_cast<std::size_t>(n), -1);
  Eigen::Index current = 0;
  for (Eigen::Index step = 1; step < n; ++step) {
    in_tree[static_cast<std::size_t>(current)] = true;
    Eigen::Index next = -1;
    double next_w = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      if (in_tree[uj]) continue;
      const double mr = std::max({static_cast<double>(dist(current, j)), core[static_cast<std::size_t>(current)], core[uj]});
      if (mr < best[uj]) {
        best[uj] = mr;
        from[uj] = current;
      }
      if (best[uj] < next_w) {
        next_w = best[uj];
        next = j;
      }
    }
    edges.push_back({from[static_cast<std::size_t>(next)], next, next_w});
    current = next;
  }
  std::stable_sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) { return x.weight < y.weight; });
  return edges;
}

struct SingleLinkage {
  std::vector<std::int64_t> left, right, size;
  std::vector<double> dist;
};

inline SingleLinkage single_linkage(const std::vector<MstEdge>& mst, std::int64_t n) {
  SingleLinkage tree;
  std::vector<std::int64_t> parent(static_cast<std::size_t>(2 * n - 1));
  std::iota(parent.begin(), parent.end(), std::int64_t{0});
  std::vector<std::int64_t> comp_size(static_cast<std::size_t>(2 * n - 1), 1);
  auto find = [&](std::int64_t x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  std::int64_t next = n;
  for (const auto& e : mst) {
    const std::int64_t ra = find(e.a);
    const std::int64_t rb = find(e.b);
    tree.left.push_back(ra);
    tree.right.push_back(rb);
    tree.dist.push_back(e.weight);
    const std::int64_t s = comp_size[static_cast<std::size_t>(ra)] + comp_size[static_cast<std::size_t>(rb)];
    tree.size.push_back(s);
    comp_size[static_cast<std::size_t>(next)] = s;
    parent[static_cast<std::size_t>(ra)] = next;
    parent[static_cast<std::size_t>(rb)] = next;
    ++next;
  }
  return tree;
}

inline void collect_leaves(const SingleLinkage& tree, std::int64_t n, std::int64_t node, std::vector<std::int64_t>& out) {
  std::vector<std::int64_t> stack{node};
  while (!stack.empty()) {
    const std::int64_t x = stack.back();
    stack.pop_back();
    if (x < n) {
      out.push_back(x);
    } else {
      stack.push_back(tree.right[static_cast<std::size_t>(x - n)]);
      stack.push_back(tree.left[static_cast<std::size_t>(x - n)]);
    }
  }
}

// Cluster labels in the condensed tree start at n (the root).
inline std::vector<CondensedEntry> condense(const SingleLinkage& tree, std::int64_t n, std::int64_t min_cluster_size) {
  std::vector<CondensedEntry> out;
  const std::int64_t root = 2 * n - 2;
  std::vector<std::int64_t> relabel(static_cast<std::size_t>(2 * n - 1), -1);
  relabel[static_cast<std::size_t>(root)] = n;
  std::int64_t next_label = n + 1;
  auto node_size = [&](std::int64_t x) { return x < n ? std::int64_t{1} : tree.size[static_cast<std::size_t>(x - n)]; };
  std::vector<std::int64_t> queue{root};
  std::vector<std::int64_t> leaves;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const std::int64_t node = queue[qi];
    if (node < n) continue;
    const auto k = static_cast<std::size_t>(node - n);
    const std::int64_t l = tree.left[k];
    const std::int64_t r = tree.right[k];
    const double lambda = to_lambda(tree.dist[k]);
    const std::int64_t ls = node_size(l);
    const std::int64_t rs = node_size(r);
    const std::int64_t label = relabel[static_cast<std::size_t>(node)];
    auto fall_out = [&](std::int64_t sub) {
      leaves.clear();
      collect_leaves(tree, n, sub, leaves);
      for (std::int64_t p : leaves) out.push_back({label, p, lambda, 1});
    };
    if (ls >= min_cluster_size && rs >= min_cluster_size) {
      relabel[static_cast<std::size_t>(l)] = next_label++;
      out.push_back({label, relabel[static_cast<std::size_t>(l)], lambda, ls});
      relabel[static_cast<std::size_t>(r)] = next_label++;
      out.push_back({label, relabel[static_cast<std::size_t>(r)], lambda, rs});
      queue.push_back(l);
      queue.push_back(r);
    } else if (ls < min_cluster_size && rs < min_cluster_size) {
      fall_out(l);
      fall_out(r);
    } else if (ls < min_cluster_size) {
      relabel[static_cast<std::size_t>(r)] = label;
      fall_out(l);
      queue.push_back(r);
    } else {
      relabel[static_cast<std::size_t>(l)] = label;
      fall_out(r);
      queue.push_back(l);
    }
  }
  return out;
}

inline HdbscanResult extract_clusters(const std::vector<CondensedEntry>& tree, std::int64_t n, bool allow_single_cluster) {
  HdbscanResult result;
  result.labels.assign(static_cast<std::size_t>(n), -1);
  std::int64_t max_label = n;
  for (const auto& e : tree) max_label = std::max(max_label, std::max(e.parent, e.child));
  const auto num_nodes = static_cast<std::size_t>(max_label - n + 1);
  std::vector<double> birth(num_nodes, 0.0);
  std::vector<double> stability(num_nodes, 0.0);
  std::vector<std::int64_t> cluster_parent(num_nodes, -1);
  std::vector<std::vector<std::int64_t>> children(num_nodes);
  for (const auto& e : tree) {
    if (e.child >= n) {
      birth[static_cast<std::size_t>(e.child - n)] = e.lambda;
      cluster_parent[static_cast<std::size_t>(e.child - n)] = e.parent;
      children[static_cast<std::size_t>(e.parent - n)].push_back(e.child);
    }
  }
  for (const auto& e : tree) {
    const auto p = static_cast<std::size_t>(e.parent - n);
    stability[p] += (e.lambda - birth[p]) * static_cast<double>(e.child_size);
  }
  std::vector<bool> selected(num_nodes, false);
  std::vector<double> subtree(stability);
  for (std::int64_t c = max_label; c >= n; --c) {
    const auto ci = static_cast<std::size_t>(c - n);
    if (c == n && !allow_single_cluster) break;
    double child_sum = 0.0;
    for (std::int64_t ch : children[ci]) child_sum += subtree[static_cast<std::size_t>(ch - n)];
    if (!children[ci].empty() && child_sum > stability[ci]) {
      subtree[ci] = child_sum;
    } else {
      selected[ci] = true;
      std::vector<std::int64_t> stack(children[ci]);
      while (!stack.empty()) {
        const auto d = static_cast<std::size_t>(stack.back() - n);
        stack.pop_back();
        selected[d] = false;
        for (std::int64_t g : children[d]) stack.push_back(g);
      }
    }
  }
  std::vector<int> dense_label(num_nodes, -1);
  for (std::size_t ci = 0; ci < num_nodes; ++ci) {
    if (selected[ci]) {
      dense_label[ci] = result.num_clusters++;
      result.stability.push_back(stability[ci]);
    }
  }
  for (const auto& e : tree) {
    if (e.child >= n) continue;
    std::int64_t c = e.parent;
    while (c >= n && !selected[static_cast<std::size_t>(c - n)]) c = cluster_parent[static_cast<std::size_t>(c - n)];
    if (c >= n) result.labels[static_cast<std::size_t>(e.child)] = dense_label[static_cast<std::size_t>(c - n)];
  }
  return result;
}

}  // namespace detail

/// HDBSCAN* over a precomputed symmetric distance matrix.
template <typename Derived>
HdbscanResult hdbscan_precomputed(const Eigen::MatrixBase<Derived>& dist, const HdbscanParams& params) {
  if (params.min_cluster_size < 2) throw std::invalid_argument("min_cluster_size must be >= 2");
  if (dist.rows() != dist.cols()) throw std::invalid_argument("distance matrix must be square");
  const std::int64_t n = dist.rows();
  if (n < 2) {
    HdbscanResult r;
    r.labels.assign(static_cast<std::size_t>(n), -1);
    return r;
  }
  const int min_samples = params.min_samples > 0 ? params.min_samples : params.min_cluster_size;
  const auto core = detail::core_distances(dist, min_samples);
  const auto mst = detail::mutual_reachability_mst(dist, core);
  const auto linkage = detail::single_linkage(mst, n);
  const auto condensed = detail::condense(linkage, n, params.min_cluster_size);
  return detail::extract_clusters(condensed, n, params.allow_single_cluster);
}

/// HDBSCAN* over the rows of `points` with Euclidean distance.
template <typename Derived>
HdbscanResult hdbscan(const Eigen::MatrixBase<Derived>& points, const HdbscanParams& params) {
  return hdbscan_precomputed(pairwise_euclidean(points), params);
}

}  // namespace convo::density

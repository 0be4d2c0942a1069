#pragma once

// Neighbourhood-preserving dimensionality reduction in the UMAP family:
// fuzzy k-nearest-neighbour graph from a precomputed distance matrix,
// spectral initialisation, then seeded sequential SGD with negative sampling.
// Every random draw comes from one std::mt19937_64, so a fixed seed gives
// bit-identical output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "convo/error.hpp"

namespace convo::embed {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct UmapParams {
  int target_dim = 5;
  int n_neighbors = 15;
  /// 0 picks 500 epochs for small inputs and 200 above 2000 points.
  int n_epochs = 0;
  double min_dist = 0.1;
  double spread = 1.0;
  double learning_rate = 1.0;
  int negative_sample_rate = 5;
  /// Spectral initialisation is used up to this many points, random beyond.
  int spectral_max_points = 1500;
  std::uint64_t seed = 42;
};

/// Coefficients (a, b) of the smooth curve 1 / (1 + a d^(2b)) used for the
/// low-dimensional similarity, fitted to the piecewise target defined by
/// min_dist and spread.
inline std::pair<double, double> fit_curve_ab(double min_dist, double spread) {
  constexpr int kSamples = 300;
  std::vector<double> xs(kSamples), ys(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    xs[i] = 3.0 * spread * (i + 1) / kSamples;
    ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
  }
  double a = 1.0, b = 1.0;
  double damping = 1e-3;
  auto residual_ss = [&](double ta, double tb) {
    double ss = 0;
    for (int i = 0; i < kSamples; ++i) {
      const double r = 1.0 / (1.0 + ta * std::pow(xs[i], 2 * tb)) - ys[i];
      ss += r * r;
    }
    return ss;
  };
  double current = residual_ss(a, b);
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (int i = 0; i < kSamples; ++i) {
      const double x2b = std::pow(xs[i], 2 * b);
      const double denom = 1.0 + a * x2b;
      const double f = 1.0 / denom;
      const double r = f - ys[i];
      const Eigen::Vector2d g(-x2b / (denom * denom), -a * x2b * 2.0 * std::log(xs[i]) / (denom * denom));
      jtj += g * g.transpose();
      jtr += g * r;
    }
    Eigen::Matrix2d lhs = jtj;
    lhs.diagonal() *= (1.0 + damping);
    const Eigen::Vector2d step = lhs.ldlt().solve(-jtr);
    const double trial = residual_ss(a + step(0), b + step(1));
    if (trial < current) {
      a += step(0);
      b += step(1);
      const bool converged = current - trial < 1e-14;
      current = trial;
      damping = std::max(damping * 0.3, 1e-9);
      if (converged) break;
    } else {
      damping *= 10.0;
    }
  }
  return {a, b};
}

namespace detail {

struct Knn {
  std::vector<std::vector<Eigen::Index>> index;
  std::vector<std::vector<double>> dist;
};

template <typename Derived>
Knn nearest_neighbours(const Eigen::MatrixBase<Derived>& dist, int k) {
  const Eigen::Index n = dist.rows();
  Knn knn;
  knn.index.resize(static_cast<std::size_t>(n));
  knn.dist.resize(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < n; ++i) {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    order.erase(order.begin() + i);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Eigen::Index x, Eigen::Index y) {
      const double dx = static_cast<double>(dist(i, x));
      const double dy = static_cast<double>(dist(i, y));
      return dx < dy || (dx == dy && x < y);
    });
    auto& idx = knn.index[static_cast<std::size_t>(i)];
    auto& ds = knn.dist[static_cast<std::size_t>(i)];
    for (int j = 0; j < k; ++j) {
      idx.push_back(order[static_cast<std::size_t>(j)]);
      ds.push_back(static_cast<double>(dist(i, order[static_cast<std::size_t>(j)])));
    }
  }
  return knn;
}

// Fuzzy union of the per-point local fuzzy simplicial sets.
inline Eigen::SparseMatrix<double> fuzzy_graph(const Knn& knn, int k) {
  const auto n = static_cast<Eigen::Index>(knn.index.size());
  const double target = std::log2(static_cast<double>(k));
  double mean_all = 0.0;
  std::size_t count = 0;
  for (const auto& ds : knn.dist) {
    for (double d : ds) {
      mean_all += d;
      ++count;
    }
  }
  mean_all = count ? mean_all / static_cast<double>(count) : 0.0;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ds = knn.dist[static_cast<std::size_t>(i)];
    double rho = 0.0;
    for (double d : ds) {
      if (d > 0.0) {
        rho = d;
        break;
      }
    }
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), sigma = 1.0;
    for (int it = 0; it < 64; ++it) {
      double psum = 0.0;
      for (double d : ds) {
        const double gap = d - rho;
        psum += gap > 0.0 ? std::exp(-gap / sigma) : 1.0;
      }
      if (std::abs(psum - target) < 1e-5) break;
      if (psum > target) {
        hi = sigma;
        sigma = (lo + hi) / 2.0;
      } else {
        lo = sigma;
        sigma = std::isinf(hi) ? sigma * 2.0 : (lo + hi) / 2.0;
      }
    }
    double mean_i = 0.0;
    for (double d : ds) mean_i += d;
    mean_i /= static_cast<double>(ds.size());
    const double floor_sigma = 1e-3 * (rho > 0.0 ? mean_i : mean_all);
    sigma = std::max(sigma, floor_sigma);
    for (std::size_t j = 0; j < ds.size(); ++j) {
      const double gap = ds[j] - rho;
      const double w = (gap <= 0.0 || sigma <= 0.0) ? 1.0 : std::exp(-gap / sigma);
      trips.emplace_back(i, knn.index[static_cast<std::size_t>(i)][j], w);
    }
  }
  Eigen::SparseMatrix<double> p(n, n);
  p.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseMatrix<double> pt = p.transpose();
  Eigen::SparseMatrix<double> sym = p + pt - Eigen::SparseMatrix<double>(p.cwiseProduct(pt));
  sym.prune(0.0);
  return sym;
}

inline Matrix<double> spectral_init(const Eigen::SparseMatrix<double>& graph, int dim) {
  const Eigen::Index n = graph.rows();
  Matrix<double> w = Matrix<double>(graph);
  Eigen::VectorXd deg = w.rowwise().sum();
  Eigen::VectorXd inv_sqrt = deg.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
  Matrix<double> lap = Matrix<double>::Identity(n, n) - inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix<double>> solver(lap);
  Matrix<double> coords = solver.eigenvectors().middleCols(1, dim);
  const double max_abs = coords.cwiseAbs().maxCoeff();
  if (max_abs > 0.0) coords *= 10.0 / max_abs;
  return coords;
}

inline double clip(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace detail

/// Embeds the points described by the square distance matrix `dist` into
/// `params.target_dim` dimensions. Inputs with fewer than target_dim + 1
/// points are returned as their distance rows padded or truncated.
template <typename Derived>
Matrix<typename Derived::Scalar> reduce_dims(const Eigen::MatrixBase<Derived>& dist, const UmapParams& params) {
  using Scalar = typename Derived::Scalar;
  if (dist.rows() != dist.cols()) throw std::invalid_argument("distance matrix must be square");
  if (params.target_dim < 2) throw std::invalid_argument("target_dim must be >= 2");
  const Eigen::Index n = dist.rows();
  const int dim = params.target_dim;
  if (n < dim + 1) {
    if (n > 1) log::warn("reduce_dims: " + std::to_string(n) + " points cannot be reduced; returning padded input rows");
    Matrix<Scalar> out = Matrix<Scalar>::Zero(n, dim);
    const Eigen::Index cols = std::min<Eigen::Index>(n, dim);
    out.leftCols(cols) = dist.leftCols(cols);
    return out;
  }
  int k = params.n_neighbors;
  if (k >= n) {
    k = static_cast<int>(n - 1);
    log::warn("reduce_dims: n_neighbors clamped to " + std::to_string(k));
  }
  if (k < 1) throw std::invalid_argument("n_neighbors must be >= 1");

  const auto knn = detail::nearest_neighbours(dist, k);
  Eigen::SparseMatrix<double> graph = detail::fuzzy_graph(knn, std::max(k, 2));

  std::mt19937_64 rng(params.seed);
  Matrix<double> y;
  if (n <= params.spectral_max_points) {
    y = detail::spectral_init(graph, dim);
    std::normal_distribution<double> jitter(0.0, 1e-4);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] += jitter(rng);
  } else {
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    y.resize(n, dim);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = u(rng);
  }

  const int n_epochs = params.n_epochs > 0 ? params.n_epochs : (n > 2000 ? 200 : 500);
  const auto [a, b] = fit_curve_ab(params.min_dist, params.spread);

  std::vector<Eigen::Index> head, tail;
  std::vector<double> weight;
  double max_w = 0.0;
  for (Eigen::Index c = 0; c < graph.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph, c); it; ++it) max_w = std::max(max_w, it.value());
  }
  for (Eigen::Index c = 0; c < graph.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph, c); it; ++it) {
      if (it.value() < max_w / n_epochs) continue;
      head.push_back(it.row());
      tail.push_back(it.col());
      weight.push_back(it.value());
    }
  }
  const std::size_t n_edges = head.size();
  std::vector<double> eps(n_edges), next_sample(n_edges), eps_neg(n_edges), next_neg(n_edges);
  for (std::size_t e = 0; e < n_edges; ++e) {
    eps[e] = max_w / weight[e];
    next_sample[e] = eps[e];
    eps_neg[e] = eps[e] / params.negative_sample_rate;
    next_neg[e] = eps_neg[e];
  }
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  for (int epoch = 0; epoch < n_epochs; ++epoch) {
    const double alpha = params.learning_rate * (1.0 - static_cast<double>(epoch) / n_epochs);
    for (std::size_t e = 0; e < n_edges; ++e) {
      if (next_sample[e] > epoch) continue;
      const Eigen::Index i = head[e];
      const Eigen::Index j = tail[e];
      double d2 = (y.row(i) - y.row(j)).squaredNorm();
      if (d2 > 0.0) {
        const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
        for (int d = 0; d < dim; ++d) {
          const double g = detail::clip(coeff * (y(i, d) - y(j, d)));
          y(i, d) += g * alpha;
          y(j, d) -= g * alpha;
        }
      }
      next_sample[e] += eps[e];
      const int n_neg = std::max(0, static_cast<int>((epoch - next_neg[e]) / eps_neg[e]));
      for (int p = 0; p < n_neg; ++p) {
        const Eigen::Index s = pick(rng);
        if (s == i) continue;
        d2 = (y.row(i) - y.row(s)).squaredNorm();
        const double coeff = d2 > 0.0 ? 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0)) : 0.0;
        for (int d = 0; d < dim; ++d) {
          const double g = coeff > 0.0 ? detail::clip(coeff * (y(i, d) - y(s, d))) : 4.0;
          y(i, d) += g * alpha;
        }
      }
      next_neg[e] += n_neg * eps_neg[e];
    }
  }
  return y.template cast<Scalar>();
}

}  // namespace convo::embed

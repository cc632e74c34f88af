#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hellkan/numeric.hpp"

namespace hellkan {

inline constexpr double pi = 3.14159265358979323846;

// ell(d) = log(1 + tan^2 d) = -log cos^2(d) for d < pi/2, +inf beyond
inline double log_cost(double d) {
  if (d < 0.0) throw std::domain_error("log_cost: negative distance");
  if (d >= pi / 2.0) return inf;
  double c = std::cos(d);
  return -2.0 * std::log(c);
}

// inverse of sqrt(ell): g(z) = arccos(e^{-z^2/2}), concave increasing into [0, pi/2)
inline double ghk_ground(double z) {
  if (z < 0.0) throw std::domain_error("ghk_ground: negative argument");
  return std::acos(std::exp(-0.5 * z * z));
}

// Finite point configuration, either Euclidean coordinates or an explicit
// symmetric distance matrix.  Distances are cached densely.
class GroundSpace {
 public:
  static GroundSpace from_points(std::vector<std::vector<double>> pts) {
    GroundSpace g;
    g.n_ = static_cast<int>(pts.size());
    g.points_ = std::move(pts);
    g.dist_.assign(static_cast<std::size_t>(g.n_) * g.n_, 0.0);
    for (int i = 0; i < g.n_; ++i)
      for (int j = i + 1; j < g.n_; ++j) {
        double d = euclidean(g.points_[i], g.points_[j]);
        g.dist_[i * g.n_ + j] = d;
        g.dist_[j * g.n_ + i] = d;
      }
    g.metric_certified_ = true;  // Euclidean metric
    return g;
  }

  static GroundSpace from_distance(std::vector<std::vector<double>> d, bool certify = true) {
    GroundSpace g;
    g.n_ = static_cast<int>(d.size());
    g.dist_.assign(static_cast<std::size_t>(g.n_) * g.n_, 0.0);
    for (int i = 0; i < g.n_; ++i) {
      if (static_cast<int>(d[i].size()) != g.n_)
        throw std::invalid_argument("distance matrix must be square");
      for (int j = 0; j < g.n_; ++j) {
        double v = d[i][j];
        if (v < 0.0) throw std::invalid_argument("distances must be nonnegative");
        g.dist_[i * g.n_ + j] = v;
      }
    }
    for (int i = 0; i < g.n_; ++i) {
      if (g.dist_[i * g.n_ + i] != 0.0)
        throw std::invalid_argument("distance matrix must have zero diagonal");
      for (int j = 0; j < g.n_; ++j)
        if (g.dist_[i * g.n_ + j] != g.dist_[j * g.n_ + i])
          throw std::invalid_argument("distance matrix must be symmetric");
    }
    g.metric_certified_ = certify && g.n_ <= 200 ? g.check_triangle() : false;
    return g;
  }

  int size() const { return n_; }
  bool euclidean() const { return !points_.empty(); }
  bool metric_certified() const { return metric_certified_; }
  const std::vector<double>& point(int i) const { return points_[i]; }
  int dimension() const { return points_.empty() ? 0 : static_cast<int>(points_[0].size()); }

  double dist(int i, int j) const { return dist_[i * n_ + j]; }

  // space with all distances scaled by lambda > 0
  GroundSpace scaled(double lambda) const {
    GroundSpace g(*this);
    for (double& v : g.dist_) v *= lambda;
    for (auto& p : g.points_)
      for (double& c : p) c *= lambda;
    return g;
  }

  static double euclidean(const std::vector<double>& x, const std::vector<double>& y) {
    StableSum s;
    for (std::size_t k = 0; k < x.size(); ++k) {
      double d = x[k] - y[k];
      s.add(d * d);
    }
    return std::sqrt(s.value());
  }

 private:
  bool check_triangle() const {
    for (int i = 0; i < n_; ++i)
      for (int l = 0; l < n_; ++l)
        for (int j = 0; j < n_; ++j)
          if (dist(i, j) > dist(i, l) + dist(l, j) + 1e-12 * (1.0 + dist(i, j))) return false;
    return true;
  }

  std::vector<std::vector<double>> points_;
  std::vector<double> dist_;
  int n_ = 0;
  bool metric_certified_ = false;
};

enum class CostKind { LogCost, SquaredDistance, Explicit };

// n x m nonnegative cost matrix; +inf entries are stored exactly (the log
// cost is infinite precisely where d >= pi/2)
struct CostMatrix {
  int n = 0, m = 0;
  CostKind kind = CostKind::Explicit;
  std::vector<double> v;

  double operator()(int i, int j) const { return v[i * m + j]; }
  double& at(int i, int j) { return v[i * m + j]; }

  static CostMatrix log_cost_on(const GroundSpace& g) {
    CostMatrix c;
    c.n = c.m = g.size();
    c.kind = CostKind::LogCost;
    c.v.resize(static_cast<std::size_t>(c.n) * c.m);
    for (int i = 0; i < c.n; ++i)
      for (int j = 0; j < c.m; ++j) c.at(i, j) = log_cost(g.dist(i, j));
    return c;
  }

  static CostMatrix squared_distance_on(const GroundSpace& g, double truncation = inf) {
    CostMatrix c;
    c.n = c.m = g.size();
    c.kind = CostKind::SquaredDistance;
    c.v.resize(static_cast<std::size_t>(c.n) * c.m);
    for (int i = 0; i < c.n; ++i)
      for (int j = 0; j < c.m; ++j) {
        double d = std::min(g.dist(i, j), truncation);
        c.at(i, j) = d * d;
      }
    return c;
  }

  static CostMatrix explicit_matrix(std::vector<std::vector<double>> rows) {
    CostMatrix c;
    c.n = static_cast<int>(rows.size());
    c.m = c.n > 0 ? static_cast<int>(rows[0].size()) : 0;
    c.kind = CostKind::Explicit;
    c.v.resize(static_cast<std::size_t>(c.n) * c.m);
    for (int i = 0; i < c.n; ++i) {
      if (static_cast<int>(rows[i].size()) != c.m)
        throw std::invalid_argument("ragged cost matrix");
      for (int j = 0; j < c.m; ++j) {
        if (rows[i][j] < 0.0) throw std::invalid_argument("costs must be nonnegative");
        c.at(i, j) = rows[i][j];
      }
    }
    return c;
  }
};

// Point [x, r] of the cone over the ground space.  All points with r = 0 are
// identified with the vertex.
struct ConePoint {
  int x = 0;
  double r = 0.0;
  bool is_vertex() const { return r == 0.0; }
};

enum class Truncation { Pi, HalfPi };

// d_C([x1,r1],[x2,r2])^2 = |r1-r2|^2 + 4 r1 r2 sin^2(d_a(x1,x2)/2), a = pi or pi/2
inline double cone_distance(const GroundSpace& g, ConePoint y1, ConePoint y2,
                            Truncation trunc = Truncation::Pi) {
  double a = trunc == Truncation::Pi ? pi : pi / 2.0;
  double d = (y1.is_vertex() || y2.is_vertex()) ? 0.0 : std::min(g.dist(y1.x, y2.x), a);
  double dr = y1.r - y2.r;
  double s = std::sin(0.5 * d);
  return std::sqrt(dr * dr + 4.0 * y1.r * y2.r * s * s);
}

// A point along a cone geodesic; carries explicit coordinates so that
// interpolants between distinct ground points can be represented.
struct ConePathPoint {
  std::vector<double> coords;
  double r = 0.0;
};

// Constant-speed geodesic between cone points over a Euclidean ground space
// (or any space when the endpoints share the ground point or one is the
// vertex).  For d >= pi the geodesic is the broken path through the vertex.
inline ConePathPoint cone_geodesic(const GroundSpace& g, ConePoint y1, ConePoint y2, double t) {
  if (t < 0.0 || t > 1.0) throw std::domain_error("cone_geodesic: t outside [0,1]");
  auto coords_of = [&](int idx) -> std::vector<double> {
    if (g.euclidean()) return g.point(idx);
    return {};
  };

  if (y2.is_vertex()) {
    return {coords_of(y1.x), (1.0 - t) * y1.r};
  }
  if (y1.is_vertex()) {
    return {coords_of(y2.x), t * y2.r};
  }
  double d = g.dist(y1.x, y2.x);
  if (d == 0.0 || y1.x == y2.x) {
    return {coords_of(y1.x), (1.0 - t) * y1.r + t * y2.r};
  }
  if (d >= pi - 1e-12) {
    // broken geodesic through the vertex, constant speed over length r1 + r2
    double len = y1.r + y2.r;
    double split = y1.r / len;
    if (t <= split) return {coords_of(y1.x), y1.r - t * len};
    return {coords_of(y2.x), (t - split) * len};
  }
  if (!g.euclidean())
    throw std::domain_error("cone_geodesic: non-Euclidean ground space with distinct endpoints");

  double cd = std::cos(d);
  double r1 = y1.r, r2 = y2.r;
  double rt2 = (1.0 - t) * (1.0 - t) * r1 * r1 + t * t * r2 * r2 + 2.0 * t * (1.0 - t) * r1 * r2 * cd;
  double rt = std::sqrt(std::max(rt2, 0.0));
  double theta = std::atan2(t * r2 * std::sin(d), (1.0 - t) * r1 + t * r2 * cd);
  // ground point at arc length theta(t) on the unit-speed segment x1 -> x2
  const auto& p1 = g.point(y1.x);
  const auto& p2 = g.point(y2.x);
  double frac = theta / d;
  std::vector<double> x(p1.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = p1[k] + frac * (p2[k] - p1[k]);
  return {std::move(x), rt};
}

}  // namespace hellkan

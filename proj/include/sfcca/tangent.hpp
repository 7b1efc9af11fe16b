#pragma once

// SPD-valued curves and tangent vector fields along them, observed on a
// shared time grid. Integrals over time use trapezoid quadrature.

#include <memory>
#include <vector>

#include "sfcca/spd.hpp"

namespace sfcca {

/// Strictly increasing time points with trapezoid quadrature weights.
class TimeGrid {
 public:
  TimeGrid() = default;
  /// Requires at least two strictly increasing points.
  explicit TimeGrid(std::vector<double> points);
  /// L equispaced points on [a, b].
  static TimeGrid uniform(double a, double b, std::size_t count);

  std::size_t size() const { return points_.size(); }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  double operator[](std::size_t l) const { return points_[l]; }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) { return a.points_ == b.points_; }

 private:
  std::vector<double> points_;
  std::vector<double> weights_;
};

/// An SPD matrix per grid point.
class SPDCurve {
 public:
  SPDCurve() = default;
  SPDCurve(TimeGrid grid, std::vector<SPDMatrix> values);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<SPDMatrix>& values() const { return values_; }
  const SPDMatrix& operator[](std::size_t l) const { return values_[l]; }
  std::size_t size() const { return values_.size(); }
  Eigen::Index dim() const { return values_.empty() ? 0 : values_.front().dim(); }

 private:
  TimeGrid grid_;
  std::vector<SPDMatrix> values_;
};

/// A symmetric matrix per grid point, with no base curve. Used for the
/// Euclidean treatment of SPD curves.
struct SymCurve {
  TimeGrid grid;
  std::vector<SymMatrix> values;
};

/// Tangent vector field V along a base curve mu: V(t_l) lies in T_{mu(t_l)}.
class TangentField {
 public:
  TangentField() = default;
  TangentField(std::shared_ptr<const SPDCurve> base, std::vector<SymMatrix> values);

  static TangentField zero(std::shared_ptr<const SPDCurve> base);

  const std::shared_ptr<const SPDCurve>& base() const { return base_; }
  const TimeGrid& grid() const { return base_->grid(); }
  const std::vector<SymMatrix>& values() const { return values_; }
  const SymMatrix& operator[](std::size_t l) const { return values_[l]; }
  std::size_t size() const { return values_.size(); }

  TangentField operator+(const TangentField& o) const;
  TangentField operator-(const TangentField& o) const;
  TangentField operator*(double s) const;

 private:
  std::shared_ptr<const SPDCurve> base_;
  std::vector<SymMatrix> values_;
};

inline TangentField operator*(double s, const TangentField& v) { return v * s; }

/// True when both fields live along the same base curve (pointer or value equality).
bool same_base(const TangentField& a, const TangentField& b);

/// t -> Log_{mu(t)} y(t).
TangentField log_curve(const std::shared_ptr<const SPDCurve>& mu, const SPDCurve& y);
/// t -> Exp_{mu(t)} V(t).
SPDCurve exp_curve(const TangentField& v);

/// <<U, V>>_mu = sum_l w_l <U(t_l), V(t_l)>_{mu(t_l)}.
double field_inner(const TangentField& u, const TangentField& v);
double field_norm(const TangentField& v);

/// Pointwise parallel transport of a field along f to a field along h.
TangentField transport_field(const TangentField& u, const std::shared_ptr<const SPDCurve>& h);

}  // namespace sfcca

#include "sfcca/tangent.hpp"

#include <cmath>
#include <sstream>

namespace sfcca {

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw ValidationError("time grid needs at least two points");
  for (std::size_t l = 1; l < points_.size(); ++l) {
    if (!(points_[l] > points_[l - 1])) {
      throw ValidationError("time grid must be strictly increasing");
    }
  }
  weights_.assign(points_.size(), 0.0);
  for (std::size_t l = 0; l + 1 < points_.size(); ++l) {
    const double h = points_[l + 1] - points_[l];
    weights_[l] += 0.5 * h;
    weights_[l + 1] += 0.5 * h;
  }
}

TimeGrid TimeGrid::uniform(double a, double b, std::size_t count) {
  if (count < 2 || !(b > a)) throw ValidationError("invalid uniform grid");
  std::vector<double> pts(count);
  const double h = (b - a) / static_cast<double>(count - 1);
  for (std::size_t l = 0; l < count; ++l) pts[l] = a + h * static_cast<double>(l);
  pts.back() = b;
  return TimeGrid(std::move(pts));
}

SPDCurve::SPDCurve(TimeGrid grid, std::vector<SPDMatrix> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw ValidationError("curve length does not match its time grid");
  }
  for (const auto& v : values_) {
    if (v.dim() != values_.front().dim()) throw ValidationError("curve values differ in dimension");
  }
}

TangentField::TangentField(std::shared_ptr<const SPDCurve> base, std::vector<SymMatrix> values)
    : base_(std::move(base)), values_(std::move(values)) {
  if (!base_) throw ValidationError("tangent field without a base curve");
  if (values_.size() != base_->size()) {
    throw ValidationError("tangent field length does not match its base curve");
  }
  for (const auto& v : values_) {
    if (v.dim() != base_->dim()) throw ValidationError("tangent field dimension mismatch");
  }
}

TangentField TangentField::zero(std::shared_ptr<const SPDCurve> base) {
  const auto m = base->dim();
  std::vector<SymMatrix> vals(base->size(), SymMatrix::zero(m));
  return TangentField(std::move(base), std::move(vals));
}

bool same_base(const TangentField& a, const TangentField& b) {
  if (a.base() == b.base()) return true;
  if (!a.base() || !b.base()) return false;
  const auto& fa = *a.base();
  const auto& fb = *b.base();
  if (!(fa.grid() == fb.grid()) || fa.size() != fb.size()) return false;
  for (std::size_t l = 0; l < fa.size(); ++l) {
    if (fa[l].matrix() != fb[l].matrix()) return false;
  }
  return true;
}

namespace {

void require_same_base(const TangentField& a, const TangentField& b) {
  if (!same_base(a, b)) throw ValidationError("tangent fields live along different base curves");
}

}  // namespace

TangentField TangentField::operator+(const TangentField& o) const {
  require_same_base(*this, o);
  std::vector<SymMatrix> out;
  out.reserve(size());
  for (std::size_t l = 0; l < size(); ++l) out.push_back(values_[l] + o.values_[l]);
  return TangentField(base_, std::move(out));
}

TangentField TangentField::operator-(const TangentField& o) const {
  require_same_base(*this, o);
  std::vector<SymMatrix> out;
  out.reserve(size());
  for (std::size_t l = 0; l < size(); ++l) out.push_back(values_[l] - o.values_[l]);
  return TangentField(base_, std::move(out));
}

TangentField TangentField::operator*(double s) const {
  std::vector<SymMatrix> out;
  out.reserve(size());
  for (const auto& v : values_) out.push_back(v * s);
  return TangentField(base_, std::move(out));
}

TangentField log_curve(const std::shared_ptr<const SPDCurve>& mu, const SPDCurve& y) {
  if (!(mu->grid() == y.grid())) throw ValidationError("curves are on different time grids");
  if (mu->dim() != y.dim()) throw ValidationError("curves differ in matrix dimension");
  std::vector<SymMatrix> vals;
  vals.reserve(y.size());
  for (std::size_t l = 0; l < y.size(); ++l) vals.push_back(riem_log((*mu)[l], y[l]));
  return TangentField(mu, std::move(vals));
}

SPDCurve exp_curve(const TangentField& v) {
  const auto& mu = *v.base();
  std::vector<SPDMatrix> vals;
  vals.reserve(v.size());
  for (std::size_t l = 0; l < v.size(); ++l) vals.push_back(riem_exp(mu[l], v[l]));
  return SPDCurve(mu.grid(), std::move(vals));
}

double field_inner(const TangentField& u, const TangentField& v) {
  require_same_base(u, v);
  const auto& mu = *u.base();
  const auto& w = mu.grid().weights();
  double acc = 0.0;
  for (std::size_t l = 0; l < u.size(); ++l) acc += w[l] * riem_inner(mu[l], u[l], v[l]);
  return acc;
}

double field_norm(const TangentField& v) { return std::sqrt(std::max(0.0, field_inner(v, v))); }

TangentField transport_field(const TangentField& u, const std::shared_ptr<const SPDCurve>& h) {
  const auto& f = *u.base();
  if (!(f.grid() == h->grid())) throw ValidationError("curves are on different time grids");
  if (f.dim() != h->dim()) throw ValidationError("curves differ in matrix dimension");
  std::vector<SymMatrix> vals;
  vals.reserve(u.size());
  for (std::size_t l = 0; l < u.size(); ++l) vals.push_back(parallel_transport(f[l], (*h)[l], u[l]));
  return TangentField(h, std::move(vals));
}

}  // namespace sfcca

#include "semloc/gradcheck.hpp"

#include <cmath>

namespace semloc {

PointMap finite_difference_gradient(
    const std::function<double(const PointMap&)>& f, const PointMap& points,
    double h) {
  PointMap grads;
  PointMap work = points;
  for (const auto& [key, values] : points) {
    Vec g(values.size(), 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      work[key][i] = original + h;
      const double plus = f(work);
      work[key][i] = original - h;
      const double minus = f(work);
      work[key][i] = original;
      g[i] = (plus - minus) / (2.0 * h);
    }
    grads[key] = std::move(g);
  }
  return grads;
}

double max_relative_error(const PointMap& analytic, const PointMap& numeric,
                          double floor) {
  double max_abs_diff = 0.0;
  double max_abs_ref = 0.0;
  for (const auto& [key, ref] : numeric) {
    const auto it = analytic.find(key);
    const Vec zero(ref.size(), 0.0);
    const Vec& got = it == analytic.end() ? zero : it->second;
    if (got.size() != ref.size()) {
      fail(ErrorKind::ShapeMismatch, "gradient shapes differ for " + key.id);
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
      max_abs_diff = std::max(max_abs_diff, std::fabs(got[i] - ref[i]));
      max_abs_ref = std::max(max_abs_ref, std::fabs(ref[i]));
    }
  }
  return max_abs_diff / std::max(max_abs_ref, floor);
}

}  // namespace semloc

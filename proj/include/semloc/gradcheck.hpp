#pragma once

#include <functional>
#include <map>

#include "semloc/losses.hpp"

namespace semloc {

using PointMap = std::map<GradKey, Vec>;

// Central differences per coordinate of every point. h should stay in
// [1e-7, 1e-3]; 1e-5 balances truncation against cancellation in fp64.
PointMap finite_difference_gradient(
    const std::function<double(const PointMap&)>& f, const PointMap& points,
    double h);

// max over coordinates of |a - b| / max(max|b|, floor)
double max_relative_error(const PointMap& analytic, const PointMap& numeric,
                          double floor = 1e-12);

}  // namespace semloc

#include "sdtp/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdtp {

std::vector<double> project_simplex(std::vector<double> v) {
  // Sort-based exact projection (Held et al.): find the support threshold.
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0;
  double theta = 0.0;
  int support = 0;
  for (size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double cand = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - cand > 0.0) {
      support = static_cast<int>(k + 1);
      theta = cand;
    }
  }
  (void)support;
  for (double& x : v) x = std::max(x - theta, 0.0);
  return v;
}

std::vector<double> project_capped_simplex(std::vector<double> v) {
  double s = 0.0;
  bool negative = false;
  for (double x : v) {
    s += std::max(x, 0.0);
    negative |= x < 0.0;
  }
  if (s <= 1.0) {
    if (negative) {
      for (double& x : v) x = std::max(x, 0.0);
    }
    return v;
  }
  return project_simplex(std::move(v));
}

std::vector<double> project_box_capacity(std::vector<double> v,
                                         const std::vector<double>& upper,
                                         double capacity) {
  auto clamp_at = [&](double mu) {
    double total = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
      total += std::clamp(v[i] - mu, 0.0, upper[i]);
    }
    return total;
  };
  if (clamp_at(0.0) <= capacity + 1e-12) {
    for (size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], 0.0, upper[i]);
    return v;
  }
  // The clamped sum is decreasing in mu; bisect for the capacity level.
  double lo = 0.0;
  double hi = 1.0;
  while (clamp_at(hi) > capacity) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (clamp_at(mid) > capacity ? lo : hi) = mid;
  }
  const double mu = 0.5 * (lo + hi);
  for (size_t i = 0; i < v.size(); ++i) {
    v[i] = std::clamp(v[i] - mu, 0.0, upper[i]);
  }
  return v;
}

}  // namespace sdtp

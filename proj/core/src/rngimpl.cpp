#include "sdtp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sdtp {

double Rng::exponential(double rate) {
  if (rate <= 0.0) {
    throw std::domain_error("exponential draw with nonpositive rate");
  }
  double u = uniform();
  return -std::log1p(-u) / rate;
}

int Rng::discrete(const std::vector<double>& probs) {
  double total = 0.0;
  for (double p : probs) total += p;
  const double target = uniform() * total;
  double cum = 0.0;
  for (size_t k = 0; k < probs.size(); ++k) {
    cum += probs[k];
    if (target < cum) return static_cast<int>(k);
  }
  // Fall back to the last positive entry (floating-point edge).
  for (size_t k = probs.size(); k-- > 0;) {
    if (probs[k] > 0.0) return static_cast<int>(k);
  }
  throw std::domain_error("discrete draw from an all-zero row");
}

}  // namespace sdtp

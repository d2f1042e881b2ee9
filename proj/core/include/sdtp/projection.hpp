#pragma once

#include <vector>

namespace sdtp {

// Euclidean projection onto the probability simplex {x >= 0, sum x = 1}.
std::vector<double> project_simplex(std::vector<double> v);

// Euclidean projection onto {x >= 0, sum x <= 1}.
std::vector<double> project_capped_simplex(std::vector<double> v);

// Euclidean projection onto {0 <= x_i <= upper_i, sum x <= capacity}.
std::vector<double> project_box_capacity(std::vector<double> v,
                                         const std::vector<double>& upper,
                                         double capacity);

}  // namespace sdtp

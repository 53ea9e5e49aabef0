#pragma once

#include <vector>

#include "tg/tensor.hpp"

namespace tg {

// Eigenvalues of a symmetric matrix, ascending. Cyclic Jacobi: slow on
// big matrices but dependency-free and accurate to machine precision.
std::vector<double> eig_sym(Tensor a);

}  // namespace tg

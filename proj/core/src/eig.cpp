#include "tg/eig.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tg {

std::vector<double> eig_sym(Tensor a) {
  if (a.rows != a.cols) throw std::invalid_argument("eig_sym: matrix not square");
  int n = a.rows;
  if (n == 0) return {};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(a.at(i, j) - a.at(j, i)) > 1e-12)
        throw std::invalid_argument("eig_sym: matrix not symmetric");

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
    if (off < 1e-26 * n * n) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a.at(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        double app = a.at(p, p), aqq = a.at(q, q);
        double theta = (aqq - app) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;

        a.at(p, p) = app - t * apq;
        a.at(q, q) = aqq + t * apq;
        a.at(p, q) = a.at(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = a.at(p, k) = c * akp - s * akq;
          a.at(k, q) = a.at(q, k) = s * akp + c * akq;
        }
      }
    }
  }

  std::vector<double> eigs(n);
  for (int i = 0; i < n; ++i) eigs[static_cast<size_t>(i)] = a.at(i, i);
  std::sort(eigs.begin(), eigs.end());
  return eigs;
}

}  // namespace tg

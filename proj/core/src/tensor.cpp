#include "tg/tensor.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace tg {

Tensor::Tensor(int r, int c, std::initializer_list<double> vals) : Tensor(r, c) {
  if (vals.size() != data.size()) throw std::invalid_argument("tensor init size mismatch");
  size_t i = 0;
  for (double v : vals) data[i++] = v;
}

Tensor Tensor::full(int r, int c, double v) {
  Tensor t(r, c);
  for (auto& x : t.data) x = v;
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t.data[0] = v;
  return t;
}

Tensor Tensor::row(std::initializer_list<double> vals) {
  Tensor t(1, static_cast<int>(vals.size()));
  size_t i = 0;
  for (double v : vals) t.data[i++] = v;
  return t;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul shape mismatch");
  Tensor out(a.rows, b.cols);
  // ikj order keeps the inner loop contiguous in both b and out
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (int k = 0; k < a.cols; ++k) {
      double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

void add_inplace(Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("add_inplace shape mismatch");
  for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void axpy_inplace(Tensor& a, double s, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("axpy shape mismatch");
  for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += s * b.data[i];
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::fabs(v));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff shape mismatch");
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

}  // namespace tg

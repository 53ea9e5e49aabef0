#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace tg {

// Dense row-major matrix of doubles. All model state and gradients use
// this one type; a row vector is a 1 x c tensor, a scalar is 1 x 1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  Tensor(int r, int c, std::initializer_list<double> vals);

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double v);
  static Tensor scalar(double v);
  static Tensor row(std::initializer_list<double> vals);

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  const double* row_ptr(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
  double* row_ptr(int r) { return data.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
void add_inplace(Tensor& a, const Tensor& b);           // a += b, same shape
void axpy_inplace(Tensor& a, double s, const Tensor& b);  // a += s * b
double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
bool bit_equal(const Tensor& a, const Tensor& b);

}  // namespace tg

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tg/tensor.hpp"

namespace tg {

// Named trainable tensor. Gradients accumulate across backward passes
// until an optimizer step consumes and zeroes them.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols) {}

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

// Constant sparse matrix in CSR form, used for fixed-structure
// aggregation (graph convolutions). Never differentiated through.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;  // rows + 1 entries
  std::vector<int> col_idx;
  std::vector<double> vals;
};

class Tape;

// Handle to a tape node. Valid only for the lifetime of its tape.
struct Value {
  int id = -1;
};

// Eager reverse-mode tape over Tensor. Each op computes its result
// immediately and records enough to run the vector-Jacobian product.
// Nodes are topologically ordered by construction.
class Tape {
 public:
  Value param(Parameter& p);
  Value constant(Tensor t);
  Value input(Tensor t);  // like constant, but its gradient is retained

  Value matmul(Value a, Value b);
  // add/mul broadcast the second operand when it is 1 x c (row),
  // r x 1 (column) or 1 x 1 (scalar)
  Value add(Value a, Value b);
  Value mul(Value a, Value b);
  Value affine(Value a, double scale, double shift);  // scale * a + shift
  Value transpose(Value a);
  Value sigmoid(Value a);
  Value tanh(Value a);
  Value relu(Value a);
  Value leaky_relu(Value a, double slope);
  Value cos(Value a);
  Value concat_cols(const std::vector<Value>& parts);
  Value stack_rows(const std::vector<Value>& parts);
  Value gather_rows(Value a, std::vector<int> idx);
  // rows of `a` are grouped contiguously into segments by `offsets`
  // (offsets.size() == nseg + 1, offsets.front() == 0, offsets.back() == a.rows)
  Value segment_sum(Value a, std::vector<int> offsets);
  Value segment_softmax(Value a, std::vector<int> offsets);  // a is E x 1
  Value segment_max(Value a, std::vector<int> offsets);
  Value spmm(std::shared_ptr<const CsrMatrix> s, Value x);
  Value sum_all(Value a);
  // mean of log(1 + exp(-sign)) style stable binary cross entropy
  Value bce_with_logits_mean(Value logits, const std::vector<double>& labels);

  const Tensor& value(Value v) const { return nodes_[v.id].val; }
  int rows(Value v) const { return nodes_[v.id].val.rows; }
  int cols(Value v) const { return nodes_[v.id].val.cols; }

  // Seeds d(root)/d(root) = 1 (root must be 1 x 1) and accumulates
  // gradients into bound Parameters. Input-leaf gradients are kept and
  // readable via grad_of until the next backward call.
  void backward(Value root);
  const Tensor& grad_of(Value input_leaf) const;

  size_t num_nodes() const { return nodes_.size(); }

 private:
  enum class Op {
    Param, Const, Input,
    MatMul, Add, Mul, Affine, Transpose,
    Sigmoid, Tanh, Relu, LeakyRelu, Cos,
    ConcatCols, StackRows, GatherRows,
    SegmentSum, SegmentSoftmax, SegmentMax,
    Spmm, SumAll, BceMean,
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    std::vector<int> parents;  // n-ary ops
    Tensor val;
    std::vector<int> idx;      // gather indices / segment offsets / argmax routing
    std::vector<double> aux;   // labels for BceMean
    std::shared_ptr<const CsrMatrix> sp;
    Parameter* bound = nullptr;
    double c0 = 0.0, c1 = 0.0;
    bool needs_grad = false;
  };

  int push(Node n);
  bool needs(int id) const { return id >= 0 && nodes_[id].needs_grad; }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool has_grads_ = false;
};

}  // namespace tg

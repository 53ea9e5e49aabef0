#include "tg/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace tg {

namespace {

enum class Bcast { None, Row, Col, Scalar };

Bcast bcast_kind(const Tensor& a, const Tensor& b) {
  if (a.rows == b.rows && a.cols == b.cols) return Bcast::None;
  if (b.rows == 1 && b.cols == 1) return Bcast::Scalar;
  if (b.rows == 1 && b.cols == a.cols) return Bcast::Row;
  if (b.cols == 1 && b.rows == a.rows) return Bcast::Col;
  throw std::invalid_argument("broadcast shape mismatch");
}

double bval(const Tensor& b, Bcast k, int i, int j) {
  switch (k) {
    case Bcast::None: return b.at(i, j);
    case Bcast::Row: return b.at(0, j);
    case Bcast::Col: return b.at(i, 0);
    default: return b.data[0];
  }
}

// reduce a full-shaped gradient down to the broadcast operand's shape
void bcast_accumulate(Tensor& dst, const Tensor& g, Bcast k) {
  switch (k) {
    case Bcast::None:
      add_inplace(dst, g);
      break;
    case Bcast::Row:
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) dst.at(0, j) += g.at(i, j);
      break;
    case Bcast::Col:
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) dst.at(i, 0) += g.at(i, j);
      break;
    case Bcast::Scalar:
      for (double v : g.data) dst.data[0] += v;
      break;
  }
}

void check_offsets(const std::vector<int>& offsets, int rows) {
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != rows)
    throw std::invalid_argument("bad segment offsets");
  for (size_t s = 1; s < offsets.size(); ++s)
    if (offsets[s] < offsets[s - 1]) throw std::invalid_argument("segment offsets not sorted");
}

}  // namespace

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Value Tape::param(Parameter& p) {
  Node n;
  n.op = Op::Param;
  n.val = p.value;
  n.bound = &p;
  n.needs_grad = true;
  return {push(std::move(n))};
}

Value Tape::constant(Tensor t) {
  Node n;
  n.op = Op::Const;
  n.val = std::move(t);
  n.needs_grad = false;
  return {push(std::move(n))};
}

Value Tape::input(Tensor t) {
  Node n;
  n.op = Op::Input;
  n.val = std::move(t);
  n.needs_grad = true;
  return {push(std::move(n))};
}

Value Tape::matmul(Value a, Value b) {
  Node n;
  n.op = Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.val = tg::matmul(nodes_[a.id].val, nodes_[b.id].val);
  n.needs_grad = needs(a.id) || needs(b.id);
  return {push(std::move(n))};
}

Value Tape::add(Value a, Value b) {
  const Tensor& ta = nodes_[a.id].val;
  const Tensor& tb = nodes_[b.id].val;
  Bcast k = bcast_kind(ta, tb);
  Node n;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.val = Tensor(ta.rows, ta.cols);
  for (int i = 0; i < ta.rows; ++i)
    for (int j = 0; j < ta.cols; ++j) n.val.at(i, j) = ta.at(i, j) + bval(tb, k, i, j);
  n.needs_grad = needs(a.id) || needs(b.id);
  return {push(std::move(n))};
}

Value Tape::mul(Value a, Value b) {
  const Tensor& ta = nodes_[a.id].val;
  const Tensor& tb = nodes_[b.id].val;
  Bcast k = bcast_kind(ta, tb);
  Node n;
  n.op = Op::Mul;
  n.a = a.id;
  n.b = b.id;
  n.val = Tensor(ta.rows, ta.cols);
  for (int i = 0; i < ta.rows; ++i)
    for (int j = 0; j < ta.cols; ++j) n.val.at(i, j) = ta.at(i, j) * bval(tb, k, i, j);
  n.needs_grad = needs(a.id) || needs(b.id);
  return {push(std::move(n))};
}

Value Tape::affine(Value a, double scale, double shift) {
  Node n;
  n.op = Op::Affine;
  n.a = a.id;
  n.c0 = scale;
  n.c1 = shift;
  n.val = nodes_[a.id].val;
  for (auto& v : n.val.data) v = scale * v + shift;
  n.needs_grad = needs(a.id);
  return {push(std::move(n))};
}

Value Tape::transpose(Value a) {
  Node n;
  n.op = Op::Transpose;
  n.a = a.id;
  n.val = tg::transpose(nodes_[a.id].val);
  n.needs_grad = needs(a.id);
  return {push(std::move(n))};
}

#define TG_UNARY(NAME, OP, EXPR)                 \
  Value Tape::NAME(Value a) {                    \
    Node n;                                      \
    n.op = Op::OP;                               \
    n.a = a.id;                                  \
    n.val = nodes_[a.id].val;                    \
    for (auto& x : n.val.data) x = (EXPR);       \
    n.needs_grad = needs(a.id);                  \
    return {push(std::move(n))};                 \
  }

TG_UNARY(sigmoid, Sigmoid, 1.0 / (1.0 + std::exp(-x)))
TG_UNARY(tanh, Tanh, std::tanh(x))
TG_UNARY(relu, Relu, x > 0.0 ? x : 0.0)
TG_UNARY(cos, Cos, std::cos(x))
#undef TG_UNARY

Value Tape::leaky_relu(Value a, double slope) {
  Node n;
  n.op = Op::LeakyRelu;
  n.a = a.id;
  n.c0 = slope;
  n.val = nodes_[a.id].val;
  for (auto& x : n.val.data) x = x > 0.0 ? x : slope * x;
  n.needs_grad = needs(a.id);
  return {push(std::move(n))};
}

Value Tape::concat_cols(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  int rows = nodes_[parts[0].id].val.rows;
  int cols = 0;
  for (Value p : parts) {
    if (nodes_[p.id].val.rows != rows) throw std::invalid_argument("concat_cols row mismatch");
    cols += nodes_[p.id].val.cols;
  }
  Node n;
  n.op = Op::ConcatCols;
  n.val = Tensor(rows, cols);
  n.needs_grad = false;
  for (Value p : parts) {
    n.parents.push_back(p.id);
    n.needs_grad = n.needs_grad || needs(p.id);
  }
  int off = 0;
  for (Value p : parts) {
    const Tensor& t = nodes_[p.id].val;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < t.cols; ++j) n.val.at(i, off + j) = t.at(i, j);
    off += t.cols;
  }
  return {push(std::move(n))};
}

Value Tape::stack_rows(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::invalid_argument("stack_rows: empty");
  int cols = nodes_[parts[0].id].val.cols;
  int rows = 0;
  for (Value p : parts) {
    if (nodes_[p.id].val.cols != cols) throw std::invalid_argument("stack_rows col mismatch");
    rows += nodes_[p.id].val.rows;
  }
  Node n;
  n.op = Op::StackRows;
  n.val = Tensor(rows, cols);
  n.needs_grad = false;
  for (Value p : parts) {
    n.parents.push_back(p.id);
    n.needs_grad = n.needs_grad || needs(p.id);
  }
  int off = 0;
  for (Value p : parts) {
    const Tensor& t = nodes_[p.id].val;
    for (int i = 0; i < t.rows; ++i)
      for (int j = 0; j < cols; ++j) n.val.at(off + i, j) = t.at(i, j);
    off += t.rows;
  }
  return {push(std::move(n))};
}

Value Tape::gather_rows(Value a, std::vector<int> idx) {
  const Tensor& t = nodes_[a.id].val;
  Node n;
  n.op = Op::GatherRows;
  n.a = a.id;
  n.val = Tensor(static_cast<int>(idx.size()), t.cols);
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= t.rows) throw std::out_of_range("gather_rows index");
    for (int j = 0; j < t.cols; ++j) n.val.at(static_cast<int>(i), j) = t.at(idx[i], j);
  }
  n.idx = std::move(idx);
  n.needs_grad = needs(a.id);
  return {push(std::move(n))};
}

Value Tape::segment_sum(Value a, std::vector<int> offsets) {
  const Tensor& t = nodes_[a.id].val;
  check_offsets(offsets, t.rows);
  int nseg = static_cast<int>(offsets.size()) - 1;
  Node n;
  n.op = Op::SegmentSum;
  n.a = a.id;
  n.val = Tensor(nseg, t.cols);
  for (int s = 0; s < nseg; ++s)
    for (int r = offsets[s]; r < offsets[s + 1]; ++r)
      for (int j = 0; j < t.cols; ++j) n.val.at(s, j) += t.at(r, j);
  n.idx = std::move(offsets);
  n.needs_grad = needs(a.id);
  return {push(std::move(n))};
}

Value Tape::segment_softmax(Value a, std::vector<int> offsets) {
  const Tensor& t = nodes_[a.id].val;
  if (t.cols != 1) throw std::invalid_argument("segment_softmax expects a column");
  check_offsets(offsets, t.rows);
  int nseg = static_cast<int>(offsets.size()) - 1;
  Node n;
  n.op = Op::SegmentSoftmax;
  n.a = a.id;
  n.val = Tensor(t.rows, 1);
  for (int s = 0; s < nseg; ++s) {
    int lo = offsets[s], hi = offsets[s + 1];
    if (lo == hi) continue;
    double m = t.at(lo, 0);
    for (int r = lo; r < hi; ++r) m = std::max(m, t.at(r, 0));
    double z = 0.0;
    for (int r = lo; r < hi; ++r) z += std::exp(t.at(r, 0) - m);
    for (int r = lo; r < hi; ++r) n.val.at(r, 0) = std::exp(t.at(r, 0) - m) / z;
  }
  n.idx = std::move(offsets);
  n.needs_grad = needs(a.id);
  return {push(std::move(n))};
}

Value Tape::segment_max(Value a, std::vector<int> offsets) {
  const Tensor& t = nodes_[a.id].val;
  check_offsets(offsets, t.rows);
  int nseg = static_cast<int>(offsets.size()) - 1;
  Node n;
  n.op = Op::SegmentMax;
  n.a = a.id;
  n.val = Tensor(nseg, t.cols);
  std::vector<int> arg(static_cast<size_t>(nseg) * t.cols, -1);
  for (int s = 0; s < nseg; ++s) {
    int lo = offsets[s], hi = offsets[s + 1];
    if (lo == hi) throw std::invalid_argument("segment_max: empty segment");
    for (int j = 0; j < t.cols; ++j) {
      double best = t.at(lo, j);
      int bi = lo;
      for (int r = lo + 1; r < hi; ++r)
        if (t.at(r, j) > best) { best = t.at(r, j); bi = r; }
      n.val.at(s, j) = best;
      arg[static_cast<size_t>(s) * t.cols + j] = bi;
    }
  }
  n.idx = std::move(arg);
  n.needs_grad = needs(a.id);
  return {push(std::move(n))};
}

Value Tape::spmm(std::shared_ptr<const CsrMatrix> s, Value x) {
  const Tensor& t = nodes_[x.id].val;
  if (s->cols != t.rows) throw std::invalid_argument("spmm shape mismatch");
  Node n;
  n.op = Op::Spmm;
  n.a = x.id;
  n.sp = s;
  n.val = Tensor(s->rows, t.cols);
  for (int i = 0; i < s->rows; ++i)
    for (int p = s->row_ptr[i]; p < s->row_ptr[i + 1]; ++p) {
      double v = s->vals[p];
      const double* xr = t.row_ptr(s->col_idx[p]);
      double* orow = n.val.row_ptr(i);
      for (int j = 0; j < t.cols; ++j) orow[j] += v * xr[j];
    }
  n.needs_grad = needs(x.id);
  return {push(std::move(n))};
}

Value Tape::sum_all(Value a) {
  Node n;
  n.op = Op::SumAll;
  n.a = a.id;
  double s = 0.0;
  for (double v : nodes_[a.id].val.data) s += v;
  n.val = Tensor::scalar(s);
  n.needs_grad = needs(a.id);
  return {push(std::move(n))};
}

Value Tape::bce_with_logits_mean(Value logits, const std::vector<double>& labels) {
  const Tensor& t = nodes_[logits.id].val;
  if (t.cols != 1 || static_cast<size_t>(t.rows) != labels.size())
    throw std::invalid_argument("bce_with_logits_mean shape mismatch");
  Node n;
  n.op = Op::BceMean;
  n.a = logits.id;
  n.aux = labels;
  double loss = 0.0;
  for (int i = 0; i < t.rows; ++i) {
    double x = t.at(i, 0), y = labels[static_cast<size_t>(i)];
    // log(1 + exp(x)) - y*x, computed stably
    double sp = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    loss += sp - y * x;
  }
  n.val = Tensor::scalar(loss / t.rows);
  n.needs_grad = needs(logits.id);
  return {push(std::move(n))};
}

void Tape::backward(Value root) {
  const Node& rn = nodes_[root.id];
  if (rn.val.rows != 1 || rn.val.cols != 1)
    throw std::invalid_argument("backward root must be scalar");
  grads_.assign(nodes_.size(), Tensor());
  has_grads_ = true;
  grads_[root.id] = Tensor::scalar(1.0);

  auto grab = [&](int id) -> Tensor& {
    if (grads_[id].rows == 0)
      grads_[id] = Tensor(nodes_[id].val.rows, nodes_[id].val.cols);
    return grads_[id];
  };

  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || grads_[id].rows == 0) continue;
    const Tensor& g = grads_[id];
    switch (n.op) {
      case Op::Param:
        add_inplace(n.bound->grad, g);
        break;
      case Op::Const:
      case Op::Input:
        break;
      case Op::MatMul: {
        const Tensor& A = nodes_[n.a].val;
        const Tensor& B = nodes_[n.b].val;
        if (needs(n.a)) add_inplace(grab(n.a), tg::matmul(g, tg::transpose(B)));
        if (needs(n.b)) add_inplace(grab(n.b), tg::matmul(tg::transpose(A), g));
        break;
      }
      case Op::Add: {
        Bcast k = bcast_kind(nodes_[n.a].val, nodes_[n.b].val);
        if (needs(n.a)) add_inplace(grab(n.a), g);
        if (needs(n.b)) bcast_accumulate(grab(n.b), g, k);
        break;
      }
      case Op::Mul: {
        const Tensor& A = nodes_[n.a].val;
        const Tensor& B = nodes_[n.b].val;
        Bcast k = bcast_kind(A, B);
        if (needs(n.a)) {
          Tensor& da = grab(n.a);
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) da.at(i, j) += g.at(i, j) * bval(B, k, i, j);
        }
        if (needs(n.b)) {
          Tensor gb(g.rows, g.cols);
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) gb.at(i, j) = g.at(i, j) * A.at(i, j);
          bcast_accumulate(grab(n.b), gb, k);
        }
        break;
      }
      case Op::Affine:
        if (needs(n.a)) axpy_inplace(grab(n.a), n.c0, g);
        break;
      case Op::Transpose:
        if (needs(n.a)) add_inplace(grab(n.a), tg::transpose(g));
        break;
      case Op::Sigmoid: {
        Tensor& da = grab(n.a);
        for (size_t i = 0; i < g.data.size(); ++i) {
          double y = n.val.data[i];
          da.data[i] += g.data[i] * y * (1.0 - y);
        }
        break;
      }
      case Op::Tanh: {
        Tensor& da = grab(n.a);
        for (size_t i = 0; i < g.data.size(); ++i) {
          double y = n.val.data[i];
          da.data[i] += g.data[i] * (1.0 - y * y);
        }
        break;
      }
      case Op::Relu: {
        const Tensor& x = nodes_[n.a].val;
        Tensor& da = grab(n.a);
        for (size_t i = 0; i < g.data.size(); ++i)
          if (x.data[i] > 0.0) da.data[i] += g.data[i];
        break;
      }
      case Op::LeakyRelu: {
        const Tensor& x = nodes_[n.a].val;
        Tensor& da = grab(n.a);
        for (size_t i = 0; i < g.data.size(); ++i)
          da.data[i] += g.data[i] * (x.data[i] > 0.0 ? 1.0 : n.c0);
        break;
      }
      case Op::Cos: {
        const Tensor& x = nodes_[n.a].val;
        Tensor& da = grab(n.a);
        for (size_t i = 0; i < g.data.size(); ++i)
          da.data[i] -= g.data[i] * std::sin(x.data[i]);
        break;
      }
      case Op::ConcatCols: {
        int off = 0;
        for (int pid : n.parents) {
          const Tensor& t = nodes_[pid].val;
          if (needs(pid)) {
            Tensor& dp = grab(pid);
            for (int i = 0; i < t.rows; ++i)
              for (int j = 0; j < t.cols; ++j) dp.at(i, j) += g.at(i, off + j);
          }
          off += t.cols;
        }
        break;
      }
      case Op::StackRows: {
        int off = 0;
        for (int pid : n.parents) {
          const Tensor& t = nodes_[pid].val;
          if (needs(pid)) {
            Tensor& dp = grab(pid);
            for (int i = 0; i < t.rows; ++i)
              for (int j = 0; j < t.cols; ++j) dp.at(i, j) += g.at(off + i, j);
          }
          off += t.rows;
        }
        break;
      }
      case Op::GatherRows: {
        Tensor& da = grab(n.a);
        for (size_t i = 0; i < n.idx.size(); ++i)
          for (int j = 0; j < g.cols; ++j)
            da.at(n.idx[i], j) += g.at(static_cast<int>(i), j);
        break;
      }
      case Op::SegmentSum: {
        Tensor& da = grab(n.a);
        int nseg = static_cast<int>(n.idx.size()) - 1;
        for (int s = 0; s < nseg; ++s)
          for (int r = n.idx[s]; r < n.idx[s + 1]; ++r)
            for (int j = 0; j < g.cols; ++j) da.at(r, j) += g.at(s, j);
        break;
      }
      case Op::SegmentSoftmax: {
        Tensor& da = grab(n.a);
        int nseg = static_cast<int>(n.idx.size()) - 1;
        for (int s = 0; s < nseg; ++s) {
          int lo = n.idx[s], hi = n.idx[s + 1];
          double dot = 0.0;
          for (int r = lo; r < hi; ++r) dot += n.val.at(r, 0) * g.at(r, 0);
          for (int r = lo; r < hi; ++r)
            da.at(r, 0) += n.val.at(r, 0) * (g.at(r, 0) - dot);
        }
        break;
      }
      case Op::SegmentMax: {
        Tensor& da = grab(n.a);
        int nseg = g.rows;
        for (int s = 0; s < nseg; ++s)
          for (int j = 0; j < g.cols; ++j)
            da.at(n.idx[static_cast<size_t>(s) * g.cols + j], j) += g.at(s, j);
        break;
      }
      case Op::Spmm: {
        Tensor& da = grab(n.a);
        const CsrMatrix& s = *n.sp;
        for (int i = 0; i < s.rows; ++i)
          for (int p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) {
            double v = s.vals[p];
            double* dr = da.row_ptr(s.col_idx[p]);
            const double* gr = g.row_ptr(i);
            for (int j = 0; j < g.cols; ++j) dr[j] += v * gr[j];
          }
        break;
      }
      case Op::SumAll: {
        Tensor& da = grab(n.a);
        double gv = g.data[0];
        for (auto& v : da.data) v += gv;
        break;
      }
      case Op::BceMean: {
        Tensor& da = grab(n.a);
        const Tensor& x = nodes_[n.a].val;
        double gv = g.data[0] / x.rows;
        for (int i = 0; i < x.rows; ++i) {
          double sig = 1.0 / (1.0 + std::exp(-x.at(i, 0)));
          da.at(i, 0) += gv * (sig - n.aux[static_cast<size_t>(i)]);
        }
        break;
      }
    }
  }
}

const Tensor& Tape::grad_of(Value input_leaf) const {
  if (!has_grads_) throw std::logic_error("grad_of before backward");
  return grads_[input_leaf.id];
}

}  // namespace tg

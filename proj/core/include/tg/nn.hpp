#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tg/rng.hpp"
#include "tg/tape.hpp"

namespace tg {

// Symmetric neighbour lists, no self-loops. Layers that need self-loops
// add them internally.
using Adjacency = std::vector<std::vector<int>>;

Tensor glorot_uniform(Rng& rng, int rows, int cols);

struct LinearParams {
  Parameter W;  // in x out
  Parameter b;  // 1 x out
  std::vector<Parameter*> params();
};
LinearParams make_linear(Rng& rng, const std::string& name, int in, int out);
Value linear(Tape& t, Value x, LinearParams& p);

struct Mlp2Params {
  LinearParams l1, l2;  // hidden activation is ReLU
  std::vector<Parameter*> params();
};
Mlp2Params make_mlp2(Rng& rng, const std::string& name, int in, int hidden, int out);
Value mlp2(Tape& t, Value x, Mlp2Params& p);

struct GruCellParams {
  Parameter Wz, Uz, bz;
  Parameter Wr, Ur, br;
  Parameter Wh, Uh, bh;
  std::vector<Parameter*> params();
};
GruCellParams make_gru_cell(Rng& rng, const std::string& name, int in, int hidden);
// h_prev: B x hidden, msg: B x in -> B x hidden
Value gru_cell(Tape& t, Value h_prev, Value msg, GruCellParams& p);

struct TimeEncoderParams {
  Parameter omega;  // 1 x dim, initialised log-uniform in [1e-3, 1]
  Parameter phase;  // 1 x dim, initialised to zero
  std::vector<Parameter*> params();
};
TimeEncoderParams make_time_encoder(Rng& rng, const std::string& name, int dim);
// dt: B x 1 of nonnegative gaps -> B x dim of cos(omega * dt + phase)
Value time_encode(Tape& t, Value dt, TimeEncoderParams& p);

struct GatLayerParams {
  int heads = 1;
  double slope = 0.2;    // leaky-ReLU slope on attention logits
  double dropout = 0.0;  // rate on attention coefficients, training only
  bool add_self_loops = true;
  std::vector<Parameter> W;      // per head: in x head_dim
  std::vector<Parameter> a_dst;  // per head: head_dim x 1, dots the target row
  std::vector<Parameter> a_src;  // per head: head_dim x 1, dots the source row
  std::vector<Parameter*> params();
};
GatLayerParams make_gat_layer(Rng& rng, const std::string& name, int in, int out, int heads,
                              double dropout);
// X: n x in -> n x out (heads concatenated, per-head ReLU).
// dropout_rng must be non-null when training with dropout > 0.
Value gat_layer(Tape& t, Value X, const Adjacency& adj, GatLayerParams& p, bool training = false,
                Rng* dropout_rng = nullptr);

struct GcnLayerParams {
  Parameter W, b;
  std::vector<Parameter*> params();
};
GcnLayerParams make_gcn_layer(Rng& rng, const std::string& name, int in, int out);
Value gcn_layer(Tape& t, Value X, const Adjacency& adj, GcnLayerParams& p);

struct GinLayerParams {
  Parameter eps;  // 1 x 1, the self-weight is (1 + eps)
  LinearParams l1, l2;
  std::vector<Parameter*> params();
};
GinLayerParams make_gin_layer(Rng& rng, const std::string& name, int in, int hidden, int out);
Value gin_layer(Tape& t, Value X, const Adjacency& adj, GinLayerParams& p);

// Adam with bias correction. Gradients are zeroed after each step.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step();
  void zero_grad();
  int steps_taken() const { return t_; }
  double lr;

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_, v_;
  double beta1_, beta2_, eps_;
  int t_ = 0;
};

// Central-difference check. `function` computes the scalar objective
// from the current values of `inputs`; when with_grad is true it must
// also run a backward pass that accumulates into each input's grad.
// Returns the max relative error over every coordinate, with the
// denominator floored at 1 so near-zero gradients are compared
// absolutely.
double grad_check(const std::function<double(bool with_grad)>& function,
                  const std::vector<Parameter*>& inputs, double eps = 1e-5);

// Shared CSR builders for the convolutional layers.
std::shared_ptr<CsrMatrix> normalized_adjacency(const Adjacency& adj);  // D^-1/2 (A+I) D^-1/2
std::shared_ptr<CsrMatrix> plain_adjacency(const Adjacency& adj);

}  // namespace tg

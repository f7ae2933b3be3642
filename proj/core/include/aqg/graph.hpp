#pragma once

#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "aqg/tensor.hpp"

namespace aqg {

// Reverse-mode tape over a small closed op set. Nodes are created in
// topological order; backward() walks the tape in reverse. Each op carries
// an analytic backward; grad_check certifies compositions.
class Graph {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Var constant(Tensor t);
  // Leaf bound to a Parameter; flush_grads() accumulates into p->grad.
  Var param(Parameter* p);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  // C = op(A) * op(B); at most one side transposed.
  Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);   // elementwise
  Var emin(Var a, Var b);  // elementwise min
  // Broadcast a 1 x n row vector over every row of m.
  Var add_rowvec(Var m, Var v);
  // k * a + c, elementwise with constant k, c.
  Var affine(Var a, double k, double c);
  // a scaled by a 1 x 1 graph scalar.
  Var scale_var(Var a, Var s);
  Var sigmoid(Var a);
  Var tanh_(Var a);
  Var relu(Var a);
  Var log_(Var a);
  Var softmax(Var a);  // row-wise, max-subtracted
  Var transpose(Var a);
  Var concat_cols(const std::vector<Var>& parts);
  Var concat_rows(const std::vector<Var>& parts);
  // Row lookup (embedding): rows of m at `ids`, in order.
  Var rows_of(Var m, std::vector<int> ids);
  Var sum_all(Var a);
  Var mean_all(Var a);
  // Picks entries (r, c) into a 1 x k row.
  Var gather(Var a, std::vector<std::pair<int, int>> idx);
  // Row-wise layer normalization with gain/bias (both 1 x n).
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

  // Seeds d(loss) = 1 and propagates. `loss` must be 1 x 1.
  void backward(Var loss);
  // Adds accumulated leaf grads into their Parameters.
  void flush_grads();

  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> back;
    Parameter* bound = nullptr;
  };
  std::vector<Node> nodes_;

  Var push(Tensor value, std::function<void()> back = nullptr);
  Tensor& g(int id);
};

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> params;
  double max_rel_err = 0.0;
  bool ok(double tol) const { return max_rel_err < tol; }
};

// Central-difference check of an analytic gradient.
// `f(with_grads)` must zero param grads, compute the scalar loss, and fill
// param grads when asked. Coordinates are sampled (up to
// max_coords_per_param) for large tensors. Throws NumericError when two
// evaluations of f disagree (non-determinism).
GradCheckReport grad_check(const std::vector<Parameter*>& params,
                           const std::function<double(bool with_grads)>& f,
                           double eps, int max_coords_per_param,
                           std::mt19937& rng);

}  // namespace aqg

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace aqg {

// Dense row-major double tensor. Everything in this project is rank <= 2;
// vectors are stored as 1 x n matrices.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0)
      : shape{r, c}, data(static_cast<size_t>(r) * c, fill) {}

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }
  size_t size() const { return data.size(); }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }

  static Tensor row(const std::vector<double>& v) {
    Tensor t(1, static_cast<int>(v.size()));
    t.data = v;
    return t;
  }
};

// Named trainable tensor with accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor(value.rows(), value.cols());
  }
  void zero_grad() { grad.zero(); }
};

// Xavier-uniform fill: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void xavier_fill(Tensor& t, std::mt19937& rng);
void uniform_fill(Tensor& t, double lo, double hi, std::mt19937& rng);

// Numerically stable softmax over each row.
// Throws NumericError on NaN input.
Tensor softmax_rows(const Tensor& x);

// Mean negative log-probability of targets over non-pad positions.
// `logp` is T x V rows of log-probabilities, targets.size() == T.
// Throws InputError when every position is pad.
double nll_loss(const Tensor& logp, const std::vector<int>& targets, int pad_id);

}  // namespace aqg

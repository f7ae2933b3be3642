#include "aqg/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "aqg/errors.hpp"

namespace aqg {

void xavier_fill(Tensor& t, std::mt19937& rng) {
  double a = std::sqrt(6.0 / (t.rows() + t.cols()));
  uniform_fill(t, -a, a, rng);
}

void uniform_fill(Tensor& t, double lo, double hi, std::mt19937& rng) {
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& x : t.data) x = d(rng);
}

Tensor softmax_rows(const Tensor& x) {
  for (double v : x.data)
    if (std::isnan(v)) throw NumericError("softmax: NaN input");
  Tensor y(x.rows(), x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    double mx = -1e300;
    for (int c = 0; c < x.cols(); ++c) mx = std::max(mx, x.at(r, c));
    double sum = 0.0;
    for (int c = 0; c < x.cols(); ++c) {
      double e = std::exp(x.at(r, c) - mx);
      y.at(r, c) = e;
      sum += e;
    }
    for (int c = 0; c < x.cols(); ++c) y.at(r, c) /= sum;
  }
  return y;
}

double nll_loss(const Tensor& logp, const std::vector<int>& targets, int pad_id) {
  if (targets.size() != static_cast<size_t>(logp.rows()))
    throw InputError("nll_loss: targets/rows mismatch");
  double sum = 0.0;
  int n = 0;
  for (int t = 0; t < logp.rows(); ++t) {
    int id = targets[t];
    if (id == pad_id) continue;
    if (id < 0 || id >= logp.cols()) throw InputError("nll_loss: target out of range");
    sum -= logp.at(t, id);
    ++n;
  }
  if (n == 0) throw InputError("nll_loss: all positions are pad");
  return sum / n;
}

}  // namespace aqg

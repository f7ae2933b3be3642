#include <cmath>
#include <random>

#include "aqg/errors.hpp"
#include "aqg/tensor.hpp"
#include "doctest.h"

using namespace aqg;

TEST_CASE("softmax: symmetry and stability") {
  Tensor x = Tensor::row({0.0, 0.0});
  Tensor y = softmax_rows(x);
  CHECK(y.data[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y.data[1] == doctest::Approx(0.5).epsilon(1e-12));

  Tensor big = Tensor::row({1000.0, 0.0});
  Tensor yb = softmax_rows(big);
  CHECK(std::isfinite(yb.data[0]));
  CHECK(yb.data[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(yb.data[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("softmax: NaN input rejected") {
  Tensor x = Tensor::row({1.0, std::nan("")});
  CHECK_THROWS_AS(softmax_rows(x), NumericError);
}

TEST_CASE("softmax: matches extended-precision oracle") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x(1, 5);
    for (auto& v : x.data) v = d(rng);
    Tensor y = softmax_rows(x);
    // long double oracle, no max subtraction
    long double sum = 0.0L;
    for (double v : x.data) sum += expl(static_cast<long double>(v));
    double total = 0.0;
    for (int i = 0; i < 5; ++i) {
      long double want = expl(static_cast<long double>(x.data[i])) / sum;
      CHECK(std::fabs(y.data[i] - static_cast<double>(want)) < 1e-12);
      total += y.data[i];
    }
    CHECK(std::fabs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("softmax: slices sum to 1 at extreme magnitudes") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(-1e3, 1e3);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x(3, 7);
    for (auto& v : x.data) v = d(rng);
    Tensor y = softmax_rows(x);
    for (int r = 0; r < 3; ++r) {
      double s = 0.0;
      for (int c = 0; c < 7; ++c) {
        CHECK(y.at(r, c) >= 0.0);  // extreme gaps underflow to exactly 0
        CHECK(y.at(r, c) < 1.0 + 1e-12);
        s += y.at(r, c);
      }
      CHECK(std::fabs(s - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("nll_loss: perfect prediction is 0") {
  Tensor logp(2, 3);
  logp.at(0, 1) = 0.0;  // log 1
  logp.at(0, 0) = logp.at(0, 2) = -40.0;
  logp.at(1, 2) = 0.0;
  logp.at(1, 0) = logp.at(1, 1) = -40.0;
  CHECK(nll_loss(logp, {1, 2}, 0) == doctest::Approx(0.0));
}

TEST_CASE("nll_loss: uniform prediction is ln V") {
  int V = 7;
  Tensor logp(3, V);
  for (auto& v : logp.data) v = -std::log(static_cast<double>(V));
  CHECK(nll_loss(logp, {1, 2, 3}, 0) ==
        doctest::Approx(std::log(static_cast<double>(V))).epsilon(1e-12));
}

TEST_CASE("nll_loss: matches hand-summed oracle, pads excluded") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(-4.0, 0.0);
  Tensor logp(4, 5);
  for (auto& v : logp.data) v = d(rng);
  std::vector<int> targets = {2, 0, 4, 1};  // index 1 is pad
  double want = -(logp.at(0, 2) + logp.at(2, 4) + logp.at(3, 1)) / 3.0;
  CHECK(nll_loss(logp, targets, 0) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("nll_loss: all-pad batch is an error") {
  Tensor logp(2, 3);
  CHECK_THROWS_AS(nll_loss(logp, {0, 0}, 0), InputError);
}

TEST_CASE("fills are deterministic for a fixed seed") {
  Tensor a(4, 6), b(4, 6);
  std::mt19937 r1(99), r2(99);
  xavier_fill(a, r1);
  xavier_fill(b, r2);
  CHECK(a.data == b.data);
  double bound = std::sqrt(6.0 / (4 + 6));
  for (double v : a.data) CHECK(std::fabs(v) <= bound);
}

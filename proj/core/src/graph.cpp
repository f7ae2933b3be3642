#include "aqg/graph.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "aqg/errors.hpp"

namespace aqg {

Graph::Var Graph::push(Tensor value, std::function<void()> back) {
  Node n;
  n.value = std::move(value);
  n.grad = Tensor(n.value.rows(), n.value.cols());
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Graph::g(int id) { return nodes_[id].grad; }

Graph::Var Graph::constant(Tensor t) { return push(std::move(t)); }

Graph::Var Graph::param(Parameter* p) {
  Var v = push(p->value);
  nodes_[v.id].bound = p;
  return v;
}

Graph::Var Graph::matmul(Var a, Var b, bool trans_a, bool trans_b) {
  assert(!(trans_a && trans_b));
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  int m = trans_a ? A.cols() : A.rows();
  int k = trans_a ? A.rows() : A.cols();
  int kb = trans_b ? B.cols() : B.rows();
  int n = trans_b ? B.rows() : B.cols();
  assert(k == kb);
  (void)kb;
  Tensor C(m, n);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      double av = trans_a ? A.at(p, i) : A.at(i, p);
      if (av == 0.0) continue;
      for (int j = 0; j < n; ++j)
        C.at(i, j) += av * (trans_b ? B.at(j, p) : B.at(p, j));
    }
  int ai = a.id, bi = b.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, bi, oi, trans_a, trans_b, m, k, n]() {
    const Tensor& A2 = nodes_[ai].value;
    const Tensor& B2 = nodes_[bi].value;
    const Tensor& go = g(oi);
    Tensor& ga = g(ai);
    Tensor& gb = g(bi);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        double d = go.at(i, j);
        if (d == 0.0) continue;
        for (int p = 0; p < k; ++p) {
          double av = trans_a ? A2.at(p, i) : A2.at(i, p);
          double bv = trans_b ? B2.at(j, p) : B2.at(p, j);
          if (trans_a)
            ga.at(p, i) += d * bv;
          else
            ga.at(i, p) += d * bv;
          if (trans_b)
            gb.at(j, p) += d * av;
          else
            gb.at(p, j) += d * av;
        }
      }
  };
  return out;
}

Graph::Var Graph::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  assert(A.same_shape(B));
  Tensor C = A;
  for (size_t i = 0; i < C.size(); ++i) C.data[i] += B.data[i];
  int ai = a.id, bi = b.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, bi, oi]() {
    for (size_t i = 0; i < g(oi).size(); ++i) {
      g(ai).data[i] += g(oi).data[i];
      g(bi).data[i] += g(oi).data[i];
    }
  };
  return out;
}

Graph::Var Graph::sub(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  assert(A.same_shape(B));
  Tensor C = A;
  for (size_t i = 0; i < C.size(); ++i) C.data[i] -= B.data[i];
  int ai = a.id, bi = b.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, bi, oi]() {
    for (size_t i = 0; i < g(oi).size(); ++i) {
      g(ai).data[i] += g(oi).data[i];
      g(bi).data[i] -= g(oi).data[i];
    }
  };
  return out;
}

Graph::Var Graph::mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  assert(A.same_shape(B));
  Tensor C = A;
  for (size_t i = 0; i < C.size(); ++i) C.data[i] *= B.data[i];
  int ai = a.id, bi = b.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, bi, oi]() {
    const Tensor& av = nodes_[ai].value;
    const Tensor& bv = nodes_[bi].value;
    for (size_t i = 0; i < g(oi).size(); ++i) {
      g(ai).data[i] += g(oi).data[i] * bv.data[i];
      g(bi).data[i] += g(oi).data[i] * av.data[i];
    }
  };
  return out;
}

Graph::Var Graph::emin(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  assert(A.same_shape(B));
  Tensor C = A;
  for (size_t i = 0; i < C.size(); ++i) C.data[i] = std::min(A.data[i], B.data[i]);
  int ai = a.id, bi = b.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, bi, oi]() {
    const Tensor& av = nodes_[ai].value;
    const Tensor& bv = nodes_[bi].value;
    for (size_t i = 0; i < g(oi).size(); ++i) {
      if (av.data[i] < bv.data[i])
        g(ai).data[i] += g(oi).data[i];
      else if (bv.data[i] < av.data[i])
        g(bi).data[i] += g(oi).data[i];
      else {
        g(ai).data[i] += 0.5 * g(oi).data[i];
        g(bi).data[i] += 0.5 * g(oi).data[i];
      }
    }
  };
  return out;
}

Graph::Var Graph::add_rowvec(Var m, Var v) {
  const Tensor& M = value(m);
  const Tensor& V = value(v);
  assert(V.rows() == 1 && V.cols() == M.cols());
  Tensor C = M;
  for (int r = 0; r < C.rows(); ++r)
    for (int c = 0; c < C.cols(); ++c) C.at(r, c) += V.at(0, c);
  int mi = m.id, vi = v.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, mi, vi, oi]() {
    const Tensor& go = g(oi);
    for (int r = 0; r < go.rows(); ++r)
      for (int c = 0; c < go.cols(); ++c) {
        g(mi).at(r, c) += go.at(r, c);
        g(vi).at(0, c) += go.at(r, c);
      }
  };
  return out;
}

Graph::Var Graph::affine(Var a, double k, double c) {
  Tensor C = value(a);
  for (auto& x : C.data) x = k * x + c;
  int ai = a.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, oi, k]() {
    for (size_t i = 0; i < g(oi).size(); ++i) g(ai).data[i] += k * g(oi).data[i];
  };
  return out;
}

Graph::Var Graph::scale_var(Var a, Var s) {
  const Tensor& A = value(a);
  const Tensor& S = value(s);
  assert(S.size() == 1);
  double sv = S.data[0];
  Tensor C = A;
  for (auto& x : C.data) x *= sv;
  int ai = a.id, si = s.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, si, oi]() {
    const Tensor& av = nodes_[ai].value;
    double sv2 = nodes_[si].value.data[0];
    double acc = 0.0;
    for (size_t i = 0; i < g(oi).size(); ++i) {
      g(ai).data[i] += sv2 * g(oi).data[i];
      acc += g(oi).data[i] * av.data[i];
    }
    g(si).data[0] += acc;
  };
  return out;
}

Graph::Var Graph::sigmoid(Var a) {
  Tensor C = value(a);
  for (auto& x : C.data) x = 1.0 / (1.0 + std::exp(-x));
  int ai = a.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, oi]() {
    const Tensor& y = nodes_[oi].value;
    for (size_t i = 0; i < y.size(); ++i)
      g(ai).data[i] += g(oi).data[i] * y.data[i] * (1.0 - y.data[i]);
  };
  return out;
}

Graph::Var Graph::tanh_(Var a) {
  Tensor C = value(a);
  for (auto& x : C.data) x = std::tanh(x);
  int ai = a.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, oi]() {
    const Tensor& y = nodes_[oi].value;
    for (size_t i = 0; i < y.size(); ++i)
      g(ai).data[i] += g(oi).data[i] * (1.0 - y.data[i] * y.data[i]);
  };
  return out;
}

Graph::Var Graph::relu(Var a) {
  Tensor C = value(a);
  for (auto& x : C.data) x = std::max(0.0, x);
  int ai = a.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, oi]() {
    const Tensor& x = nodes_[ai].value;
    for (size_t i = 0; i < x.size(); ++i)
      if (x.data[i] > 0.0) g(ai).data[i] += g(oi).data[i];
  };
  return out;
}

Graph::Var Graph::log_(Var a) {
  Tensor C = value(a);
  for (auto& x : C.data) x = std::log(std::max(x, 1e-300));
  int ai = a.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, oi]() {
    const Tensor& x = nodes_[ai].value;
    for (size_t i = 0; i < x.size(); ++i)
      g(ai).data[i] += g(oi).data[i] / std::max(x.data[i], 1e-300);
  };
  return out;
}

Graph::Var Graph::softmax(Var a) {
  Tensor C = softmax_rows(value(a));
  int ai = a.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, oi]() {
    const Tensor& y = nodes_[oi].value;
    const Tensor& go = g(oi);
    for (int r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (int c = 0; c < y.cols(); ++c) dot += go.at(r, c) * y.at(r, c);
      for (int c = 0; c < y.cols(); ++c)
        g(ai).at(r, c) += y.at(r, c) * (go.at(r, c) - dot);
    }
  };
  return out;
}

Graph::Var Graph::transpose(Var a) {
  const Tensor& A = value(a);
  Tensor C(A.cols(), A.rows());
  for (int r = 0; r < A.rows(); ++r)
    for (int c = 0; c < A.cols(); ++c) C.at(c, r) = A.at(r, c);
  int ai = a.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, oi]() {
    const Tensor& go = g(oi);
    for (int r = 0; r < go.rows(); ++r)
      for (int c = 0; c < go.cols(); ++c) g(ai).at(c, r) += go.at(r, c);
  };
  return out;
}

Graph::Var Graph::concat_cols(const std::vector<Var>& parts) {
  assert(!parts.empty());
  int rows = value(parts[0]).rows();
  int cols = 0;
  for (Var p : parts) {
    assert(value(p).rows() == rows);
    cols += value(p).cols();
  }
  Tensor C(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Tensor& P = value(p);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < P.cols(); ++c) C.at(r, off + c) = P.at(r, c);
    off += P.cols();
  }
  std::vector<int> ids;
  for (Var p : parts) ids.push_back(p.id);
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ids, oi]() {
    const Tensor& go = g(oi);
    int off2 = 0;
    for (int pid : ids) {
      Tensor& gp = g(pid);
      for (int r = 0; r < gp.rows(); ++r)
        for (int c = 0; c < gp.cols(); ++c) gp.at(r, c) += go.at(r, off2 + c);
      off2 += gp.cols();
    }
  };
  return out;
}

Graph::Var Graph::concat_rows(const std::vector<Var>& parts) {
  assert(!parts.empty());
  int cols = value(parts[0]).cols();
  int rows = 0;
  for (Var p : parts) {
    assert(value(p).cols() == cols);
    rows += value(p).rows();
  }
  Tensor C(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Tensor& P = value(p);
    for (int r = 0; r < P.rows(); ++r)
      for (int c = 0; c < cols; ++c) C.at(off + r, c) = P.at(r, c);
    off += P.rows();
  }
  std::vector<int> ids;
  for (Var p : parts) ids.push_back(p.id);
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ids, oi]() {
    const Tensor& go = g(oi);
    int off2 = 0;
    for (int pid : ids) {
      Tensor& gp = g(pid);
      for (int r = 0; r < gp.rows(); ++r)
        for (int c = 0; c < gp.cols(); ++c) gp.at(r, c) += go.at(off2 + r, c);
      off2 += gp.rows();
    }
  };
  return out;
}

Graph::Var Graph::rows_of(Var m, std::vector<int> ids) {
  const Tensor& M = value(m);
  Tensor C(static_cast<int>(ids.size()), M.cols());
  for (size_t r = 0; r < ids.size(); ++r) {
    assert(ids[r] >= 0 && ids[r] < M.rows());
    for (int c = 0; c < M.cols(); ++c) C.at(static_cast<int>(r), c) = M.at(ids[r], c);
  }
  int mi = m.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, mi, ids, oi]() {
    const Tensor& go = g(oi);
    for (size_t r = 0; r < ids.size(); ++r)
      for (int c = 0; c < go.cols(); ++c)
        g(mi).at(ids[r], c) += go.at(static_cast<int>(r), c);
  };
  return out;
}

Graph::Var Graph::sum_all(Var a) {
  double s = 0.0;
  for (double x : value(a).data) s += x;
  Tensor C(1, 1);
  C.data[0] = s;
  int ai = a.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, oi]() {
    double go = g(oi).data[0];
    for (auto& x : g(ai).data) x += go;
  };
  return out;
}

Graph::Var Graph::mean_all(Var a) {
  size_t n = value(a).size();
  return affine(sum_all(a), 1.0 / static_cast<double>(n), 0.0);
}

Graph::Var Graph::gather(Var a, std::vector<std::pair<int, int>> idx) {
  const Tensor& A = value(a);
  Tensor C(1, static_cast<int>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) C.data[i] = A.at(idx[i].first, idx[i].second);
  int ai = a.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, ai, idx, oi]() {
    for (size_t i = 0; i < idx.size(); ++i)
      g(ai).at(idx[i].first, idx[i].second) += g(oi).data[i];
  };
  return out;
}

Graph::Var Graph::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& X = value(x);
  const Tensor& G = value(gain);
  const Tensor& B = value(bias);
  assert(G.rows() == 1 && G.cols() == X.cols() && B.cols() == X.cols());
  int n = X.cols();
  Tensor C(X.rows(), n);
  std::vector<double> mus(X.rows()), sigmas(X.rows());
  for (int r = 0; r < X.rows(); ++r) {
    double mu = 0.0;
    for (int c = 0; c < n; ++c) mu += X.at(r, c);
    mu /= n;
    double var = 0.0;
    for (int c = 0; c < n; ++c) {
      double d = X.at(r, c) - mu;
      var += d * d;
    }
    var /= n;
    double sigma = std::sqrt(var + eps);
    mus[r] = mu;
    sigmas[r] = sigma;
    for (int c = 0; c < n; ++c)
      C.at(r, c) = G.at(0, c) * (X.at(r, c) - mu) / sigma + B.at(0, c);
  }
  int xi = x.id, gi = gain.id, bi = bias.id;
  Var out = push(std::move(C));
  int oi = out.id;
  nodes_[oi].back = [this, xi, gi, bi, oi, mus, sigmas, n]() {
    const Tensor& X2 = nodes_[xi].value;
    const Tensor& G2 = nodes_[gi].value;
    const Tensor& go = g(oi);
    for (int r = 0; r < X2.rows(); ++r) {
      double mu = mus[r], sigma = sigmas[r];
      // xhat_c = (x_c - mu) / sigma ; dy/dxhat = gain
      double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
      std::vector<double> dxhat(n), xhat(n);
      for (int c = 0; c < n; ++c) {
        xhat[c] = (X2.at(r, c) - mu) / sigma;
        dxhat[c] = go.at(r, c) * G2.at(0, c);
        sum_dxhat += dxhat[c];
        sum_dxhat_xhat += dxhat[c] * xhat[c];
        g(gi).at(0, c) += go.at(r, c) * xhat[c];
        g(bi).at(0, c) += go.at(r, c);
      }
      for (int c = 0; c < n; ++c) {
        g(xi).at(r, c) +=
            (dxhat[c] - sum_dxhat / n - xhat[c] * sum_dxhat_xhat / n) / sigma;
      }
    }
  };
  return out;
}

void Graph::backward(Var loss) {
  assert(value(loss).size() == 1);
  nodes_[loss.id].grad.data[0] = 1.0;
  for (int i = loss.id; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back();
}

void Graph::flush_grads() {
  for (auto& n : nodes_)
    if (n.bound)
      for (size_t i = 0; i < n.grad.size(); ++i) n.bound->grad.data[i] += n.grad.data[i];
}

GradCheckReport grad_check(const std::vector<Parameter*>& params,
                           const std::function<double(bool with_grads)>& f,
                           double eps, int max_coords_per_param,
                           std::mt19937& rng) {
  for (auto* p : params) p->zero_grad();
  double base = f(true);
  // Snapshot the analytic grads before any further calls to f; f is allowed
  // to zero them on entry.
  std::vector<Tensor> analytic_grads;
  analytic_grads.reserve(params.size());
  for (auto* p : params) analytic_grads.push_back(p->grad);
  double repeat = f(false);
  if (base != repeat)
    throw NumericError("grad_check: function is non-deterministic");

  GradCheckReport report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto* p = params[pi];
    const Tensor& analytic = analytic_grads[pi];
    std::vector<size_t> coords(p->value.size());
    for (size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (static_cast<int>(coords.size()) > max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords_per_param);
    }
    GradCheckEntry entry;
    entry.name = p->name;
    for (size_t c : coords) {
      double save = p->value.data[c];
      p->value.data[c] = save + eps;
      double fp = f(false);
      p->value.data[c] = save - eps;
      double fm = f(false);
      p->value.data[c] = save;
      double numeric = (fp - fm) / (2.0 * eps);
      double a = analytic.data[c];
      // The 1e-6 floor keeps central-difference roundoff (~|f|*1e-16/eps)
      // from dominating near-zero gradient coordinates.
      double rel = std::fabs(a - numeric) /
                   std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.params.push_back(std::move(entry));
  }
  return report;
}

}  // namespace aqg

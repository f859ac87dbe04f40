#include "c2rnet/nn.hpp"

#include <cassert>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace c2rnet::nn {

bool Mat::all_finite() const {
  for (double x : a) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

int Rng::uniform_int(int n) {
  assert(n > 0);
  const uint64_t un = static_cast<uint64_t>(n);
  const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  uint64_t x = next();
  while (x >= limit) x = next();
  return static_cast<int>(x % un);
}

std::string Rng::save_state() const {
  std::ostringstream os;
  os << gen_;
  return os.str();
}

void Rng::restore_state(const std::string& s) {
  std::istringstream is(s);
  is >> gen_;
  if (!is) throw std::runtime_error("bad rng state string");
}

void Tensor::zero_grad() {
  if (!grad.same_shape(value)) grad = Mat(value.rows, value.cols);
  std::fill(grad.a.begin(), grad.a.end(), 0.0);
}

Tensor& ParamSet::add(std::string name, int rows, int cols) {
  auto t = std::make_unique<Tensor>();
  t->name = std::move(name);
  t->value = Mat(rows, cols);
  t->grad = Mat(rows, cols);
  store_.push_back(std::move(t));
  view_.push_back(store_.back().get());
  return *store_.back();
}

Tensor& ParamSet::add_xavier(std::string name, int rows, int cols, Rng& rng) {
  Tensor& t = add(std::move(name), rows, cols);
  const double s = std::sqrt(6.0 / (rows + cols));
  for (double& x : t.value.a) x = rng.uniform(-s, s);
  return t;
}

Tensor* ParamSet::find(const std::string& name) const {
  for (Tensor* t : view_) {
    if (t->name == name) return t;
  }
  return nullptr;
}

void ParamSet::zero_grads() {
  for (Tensor* t : view_) t->zero_grad();
}

size_t ParamSet::scalar_count() const {
  size_t n = 0;
  for (Tensor* t : view_) n += t->value.a.size();
  return n;
}

VarId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<VarId>(nodes_.size() - 1);
}

VarId Graph::constant(Mat m) {
  Node n;
  n.op = Op::Constant;
  n.val = std::move(m);
  return push(std::move(n));
}

VarId Graph::param(Tensor& t) {
  Node n;
  n.op = Op::Param;
  n.val = t.value;
  n.tensor = &t;
  return push(std::move(n));
}

VarId Graph::add(VarId a, VarId b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (!A.same_shape(B)) throw std::logic_error("nn::add: shape mismatch");
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.val = A;
  for (size_t i = 0; i < n.val.a.size(); ++i) n.val.a[i] += B.a[i];
  return push(std::move(n));
}

VarId Graph::add_row(VarId m, VarId row) {
  const Mat& A = nodes_[m].val;
  const Mat& R = nodes_[row].val;
  if (R.rows != 1 || R.cols != A.cols) throw std::logic_error("nn::add_row: shape mismatch");
  Node n;
  n.op = Op::AddRow;
  n.a = m;
  n.b = row;
  n.val = A;
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) n.val(r, c) += R(0, c);
  return push(std::move(n));
}

VarId Graph::cmul(VarId a, VarId b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (!A.same_shape(B)) throw std::logic_error("nn::cmul: shape mismatch");
  Node n;
  n.op = Op::CMul;
  n.a = a;
  n.b = b;
  n.val = A;
  for (size_t i = 0; i < n.val.a.size(); ++i) n.val.a[i] *= B.a[i];
  return push(std::move(n));
}

VarId Graph::matmul(VarId a, VarId b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (A.cols != B.rows) throw std::logic_error("nn::matmul: shape mismatch");
  Node n;
  n.op = Op::MatMul;
  n.a = a;
  n.b = b;
  n.val = Mat(A.rows, B.cols);
  for (int r = 0; r < A.rows; ++r) {
    for (int k = 0; k < A.cols; ++k) {
      const double arK = A(r, k);
      if (arK == 0.0) continue;
      for (int c = 0; c < B.cols; ++c) n.val(r, c) += arK * B(k, c);
    }
  }
  return push(std::move(n));
}

VarId Graph::matmul_nt(VarId a, VarId b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (A.cols != B.cols) throw std::logic_error("nn::matmul_nt: shape mismatch");
  Node n;
  n.op = Op::MatMulNT;
  n.a = a;
  n.b = b;
  n.val = Mat(A.rows, B.rows);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < B.rows; ++c) {
      double s = 0.0;
      for (int k = 0; k < A.cols; ++k) s += A(r, k) * B(c, k);
      n.val(r, c) = s;
    }
  return push(std::move(n));
}

VarId Graph::tanh_of(VarId a) {
  Node n;
  n.op = Op::Tanh;
  n.a = a;
  n.val = nodes_[a].val;
  for (double& x : n.val.a) x = std::tanh(x);
  return push(std::move(n));
}

VarId Graph::sigmoid_of(VarId a) {
  Node n;
  n.op = Op::Sigmoid;
  n.a = a;
  n.val = nodes_[a].val;
  for (double& x : n.val.a) x = 1.0 / (1.0 + std::exp(-x));
  return push(std::move(n));
}

VarId Graph::scale(VarId a, double s) {
  Node n;
  n.op = Op::Scale;
  n.a = a;
  n.x = s;
  n.val = nodes_[a].val;
  for (double& x : n.val.a) x *= s;
  return push(std::move(n));
}

VarId Graph::transpose(VarId a) {
  const Mat& A = nodes_[a].val;
  Node n;
  n.op = Op::Transpose;
  n.a = a;
  n.val = Mat(A.cols, A.rows);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) n.val(c, r) = A(r, c);
  return push(std::move(n));
}

VarId Graph::concat_rows(const std::vector<VarId>& parts) {
  if (parts.empty()) throw std::logic_error("nn::concat_rows: empty");
  int cols = nodes_[parts[0]].val.cols;
  int rows = 0;
  for (VarId p : parts) {
    if (nodes_[p].val.cols != cols) throw std::logic_error("nn::concat_rows: col mismatch");
    rows += nodes_[p].val.rows;
  }
  Node n;
  n.op = Op::ConcatRows;
  n.list = parts;
  n.val = Mat(rows, cols);
  int r0 = 0;
  for (VarId p : parts) {
    const Mat& P = nodes_[p].val;
    for (int r = 0; r < P.rows; ++r)
      for (int c = 0; c < cols; ++c) n.val(r0 + r, c) = P(r, c);
    r0 += P.rows;
  }
  return push(std::move(n));
}

VarId Graph::concat_cols(const std::vector<VarId>& parts) {
  if (parts.empty()) throw std::logic_error("nn::concat_cols: empty");
  int rows = nodes_[parts[0]].val.rows;
  int cols = 0;
  for (VarId p : parts) {
    if (nodes_[p].val.rows != rows) throw std::logic_error("nn::concat_cols: row mismatch");
    cols += nodes_[p].val.cols;
  }
  Node n;
  n.op = Op::ConcatCols;
  n.list = parts;
  n.val = Mat(rows, cols);
  int c0 = 0;
  for (VarId p : parts) {
    const Mat& P = nodes_[p].val;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < P.cols; ++c) n.val(r, c0 + c) = P(r, c);
    c0 += P.cols;
  }
  return push(std::move(n));
}

VarId Graph::slice_rows(VarId a, int r0, int r1) {
  const Mat& A = nodes_[a].val;
  if (r0 < 0 || r1 > A.rows || r0 >= r1) throw std::logic_error("nn::slice_rows: bad range");
  Node n;
  n.op = Op::SliceRows;
  n.a = a;
  n.i0 = r0;
  n.i1 = r1;
  n.val = Mat(r1 - r0, A.cols);
  for (int r = r0; r < r1; ++r)
    for (int c = 0; c < A.cols; ++c) n.val(r - r0, c) = A(r, c);
  return push(std::move(n));
}

VarId Graph::slice_cols(VarId a, int c0, int c1) {
  const Mat& A = nodes_[a].val;
  if (c0 < 0 || c1 > A.cols || c0 >= c1) throw std::logic_error("nn::slice_cols: bad range");
  Node n;
  n.op = Op::SliceCols;
  n.a = a;
  n.i0 = c0;
  n.i1 = c1;
  n.val = Mat(A.rows, c1 - c0);
  for (int r = 0; r < A.rows; ++r)
    for (int c = c0; c < c1; ++c) n.val(r, c - c0) = A(r, c);
  return push(std::move(n));
}

VarId Graph::mean_rows(VarId a) {
  const Mat& A = nodes_[a].val;
  if (A.rows == 0) throw std::logic_error("nn::mean_rows: empty");
  Node n;
  n.op = Op::MeanRows;
  n.a = a;
  n.val = Mat(1, A.cols);
  for (int c = 0; c < A.cols; ++c) {
    double s = 0.0;
    for (int r = 0; r < A.rows; ++r) s += A(r, c);
    n.val(0, c) = s / A.rows;
  }
  return push(std::move(n));
}

VarId Graph::softmax_rows(VarId a) {
  Node n;
  n.op = Op::SoftmaxRows;
  n.a = a;
  n.val = nodes_[a].val;
  for (int r = 0; r < n.val.rows; ++r) {
    double mx = n.val(r, 0);
    for (int c = 1; c < n.val.cols; ++c) mx = std::max(mx, n.val(r, c));
    double z = 0.0;
    for (int c = 0; c < n.val.cols; ++c) {
      n.val(r, c) = std::exp(n.val(r, c) - mx);
      z += n.val(r, c);
    }
    for (int c = 0; c < n.val.cols; ++c) n.val(r, c) /= z;
  }
  return push(std::move(n));
}

VarId Graph::pick_nll(VarId logits_row, int index) {
  const Mat& L = nodes_[logits_row].val;
  if (L.rows != 1) throw std::logic_error("nn::pick_nll: expects a single row");
  if (index < 0 || index >= L.cols) throw std::logic_error("nn::pick_nll: index out of range");
  double mx = L(0, 0);
  for (int c = 1; c < L.cols; ++c) mx = std::max(mx, L(0, c));
  double z = 0.0;
  for (int c = 0; c < L.cols; ++c) z += std::exp(L(0, c) - mx);
  Node n;
  n.op = Op::PickNll;
  n.a = logits_row;
  n.i0 = index;
  n.val = Mat(1, 1);
  n.val(0, 0) = (std::log(z) + mx) - L(0, index);
  return push(std::move(n));
}

VarId Graph::sum_scalars(const std::vector<VarId>& parts) {
  if (parts.empty()) throw std::logic_error("nn::sum_scalars: empty");
  Node n;
  n.op = Op::SumScalars;
  n.list = parts;
  n.val = Mat(1, 1);
  for (VarId p : parts) {
    const Mat& P = nodes_[p].val;
    if (P.rows != 1 || P.cols != 1) throw std::logic_error("nn::sum_scalars: non-scalar part");
    n.val(0, 0) += P(0, 0);
  }
  return push(std::move(n));
}

VarId Graph::dropout(VarId a, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::logic_error("nn::dropout: rate must be in [0,1)");
  const Mat& A = nodes_[a].val;
  Node n;
  n.op = Op::Dropout;
  n.a = a;
  n.aux = Mat(A.rows, A.cols);
  const double keep = 1.0 - rate;
  for (double& m : n.aux.a) m = (rng.uniform() < rate) ? 0.0 : 1.0 / keep;
  n.val = A;
  for (size_t i = 0; i < n.val.a.size(); ++i) n.val.a[i] *= n.aux.a[i];
  return push(std::move(n));
}

void Graph::backward(VarId root) {
  const Node& rn = nodes_[root];
  if (rn.val.rows != 1 || rn.val.cols != 1)
    throw std::logic_error("nn::backward: root must be scalar");

  std::vector<Mat> grad(nodes_.size());
  auto g = [&](VarId id) -> Mat& {
    if (grad[id].rows == 0) grad[id] = Mat(nodes_[id].val.rows, nodes_[id].val.cols);
    return grad[id];
  };
  g(root)(0, 0) = 1.0;

  for (VarId id = root; id >= 0; --id) {
    if (grad[id].rows == 0) continue;  // not reachable from root
    const Node& n = nodes_[id];
    const Mat& G = grad[id];
    switch (n.op) {
      case Op::Constant:
        break;
      case Op::Param:
        if (n.tensor) {
          Mat& tg = n.tensor->grad;
          if (!tg.same_shape(n.val)) tg = Mat(n.val.rows, n.val.cols);
          for (size_t i = 0; i < tg.a.size(); ++i) tg.a[i] += G.a[i];
        }
        break;
      case Op::Add: {
        Mat& ga = g(n.a);
        Mat& gb = g(n.b);
        for (size_t i = 0; i < G.a.size(); ++i) {
          ga.a[i] += G.a[i];
          gb.a[i] += G.a[i];
        }
        break;
      }
      case Op::AddRow: {
        Mat& ga = g(n.a);
        Mat& gb = g(n.b);
        for (size_t i = 0; i < G.a.size(); ++i) ga.a[i] += G.a[i];
        for (int r = 0; r < G.rows; ++r)
          for (int c = 0; c < G.cols; ++c) gb(0, c) += G(r, c);
        break;
      }
      case Op::CMul: {
        Mat& ga = g(n.a);
        Mat& gb = g(n.b);
        const Mat& A = nodes_[n.a].val;
        const Mat& B = nodes_[n.b].val;
        for (size_t i = 0; i < G.a.size(); ++i) {
          ga.a[i] += G.a[i] * B.a[i];
          gb.a[i] += G.a[i] * A.a[i];
        }
        break;
      }
      case Op::MatMul: {
        const Mat& A = nodes_[n.a].val;
        const Mat& B = nodes_[n.b].val;
        Mat& ga = g(n.a);
        Mat& gb = g(n.b);
        // ga += G * B^T ; gb += A^T * G
        for (int r = 0; r < A.rows; ++r)
          for (int k = 0; k < A.cols; ++k) {
            double s = 0.0;
            for (int c = 0; c < B.cols; ++c) s += G(r, c) * B(k, c);
            ga(r, k) += s;
          }
        for (int k = 0; k < A.cols; ++k)
          for (int c = 0; c < B.cols; ++c) {
            double s = 0.0;
            for (int r = 0; r < A.rows; ++r) s += A(r, k) * G(r, c);
            gb(k, c) += s;
          }
        break;
      }
      case Op::MatMulNT: {
        const Mat& A = nodes_[n.a].val;
        const Mat& B = nodes_[n.b].val;
        Mat& ga = g(n.a);
        Mat& gb = g(n.b);
        // out = A*B^T ; ga += G*B ; gb += G^T*A
        for (int r = 0; r < A.rows; ++r)
          for (int k = 0; k < A.cols; ++k) {
            double s = 0.0;
            for (int c = 0; c < B.rows; ++c) s += G(r, c) * B(c, k);
            ga(r, k) += s;
          }
        for (int c = 0; c < B.rows; ++c)
          for (int k = 0; k < B.cols; ++k) {
            double s = 0.0;
            for (int r = 0; r < A.rows; ++r) s += G(r, c) * A(r, k);
            gb(c, k) += s;
          }
        break;
      }
      case Op::Tanh: {
        Mat& ga = g(n.a);
        for (size_t i = 0; i < G.a.size(); ++i)
          ga.a[i] += G.a[i] * (1.0 - n.val.a[i] * n.val.a[i]);
        break;
      }
      case Op::Sigmoid: {
        Mat& ga = g(n.a);
        for (size_t i = 0; i < G.a.size(); ++i)
          ga.a[i] += G.a[i] * n.val.a[i] * (1.0 - n.val.a[i]);
        break;
      }
      case Op::Scale: {
        Mat& ga = g(n.a);
        for (size_t i = 0; i < G.a.size(); ++i) ga.a[i] += G.a[i] * n.x;
        break;
      }
      case Op::Transpose: {
        Mat& ga = g(n.a);
        for (int r = 0; r < G.rows; ++r)
          for (int c = 0; c < G.cols; ++c) ga(c, r) += G(r, c);
        break;
      }
      case Op::ConcatRows: {
        int r0 = 0;
        for (VarId p : n.list) {
          Mat& gp = g(p);
          for (int r = 0; r < gp.rows; ++r)
            for (int c = 0; c < gp.cols; ++c) gp(r, c) += G(r0 + r, c);
          r0 += gp.rows;
        }
        break;
      }
      case Op::ConcatCols: {
        int c0 = 0;
        for (VarId p : n.list) {
          Mat& gp = g(p);
          for (int r = 0; r < gp.rows; ++r)
            for (int c = 0; c < gp.cols; ++c) gp(r, c) += G(r, c0 + c);
          c0 += gp.cols;
        }
        break;
      }
      case Op::SliceRows: {
        Mat& ga = g(n.a);
        for (int r = 0; r < G.rows; ++r)
          for (int c = 0; c < G.cols; ++c) ga(n.i0 + r, c) += G(r, c);
        break;
      }
      case Op::SliceCols: {
        Mat& ga = g(n.a);
        for (int r = 0; r < G.rows; ++r)
          for (int c = 0; c < G.cols; ++c) ga(r, n.i0 + c) += G(r, c);
        break;
      }
      case Op::MeanRows: {
        Mat& ga = g(n.a);
        const double inv = 1.0 / ga.rows;
        for (int r = 0; r < ga.rows; ++r)
          for (int c = 0; c < ga.cols; ++c) ga(r, c) += G(0, c) * inv;
        break;
      }
      case Op::SoftmaxRows: {
        Mat& ga = g(n.a);
        for (int r = 0; r < G.rows; ++r) {
          double dot = 0.0;
          for (int c = 0; c < G.cols; ++c) dot += G(r, c) * n.val(r, c);
          for (int c = 0; c < G.cols; ++c)
            ga(r, c) += n.val(r, c) * (G(r, c) - dot);
        }
        break;
      }
      case Op::PickNll: {
        Mat& ga = g(n.a);
        const Mat& L = nodes_[n.a].val;
        double mx = L(0, 0);
        for (int c = 1; c < L.cols; ++c) mx = std::max(mx, L(0, c));
        double z = 0.0;
        for (int c = 0; c < L.cols; ++c) z += std::exp(L(0, c) - mx);
        const double gs = G(0, 0);
        for (int c = 0; c < L.cols; ++c) {
          const double p = std::exp(L(0, c) - mx) / z;
          ga(0, c) += gs * (p - (c == n.i0 ? 1.0 : 0.0));
        }
        break;
      }
      case Op::SumScalars: {
        for (VarId p : n.list) g(p)(0, 0) += G(0, 0);
        break;
      }
      case Op::Dropout: {
        Mat& ga = g(n.a);
        for (size_t i = 0; i < G.a.size(); ++i) ga.a[i] += G.a[i] * n.aux.a[i];
        break;
      }
    }
  }
}

AdamOptimizer::Moments& AdamOptimizer::moments_for(Tensor* t) {
  for (auto& [k, m] : state_) {
    if (k == t) return m;
  }
  state_.emplace_back(t, Moments{Mat(t->value.rows, t->value.cols),
                                 Mat(t->value.rows, t->value.cols)});
  return state_.back().second;
}

void AdamOptimizer::step(const std::vector<Tensor*>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (Tensor* p : params) {
    if (p->frozen) {
      p->zero_grad();
      continue;
    }
    Moments& mo = moments_for(p);
    for (size_t i = 0; i < p->value.a.size(); ++i) {
      const double gi = p->grad.a[i];
      mo.m.a[i] = beta1_ * mo.m.a[i] + (1.0 - beta1_) * gi;
      mo.v.a[i] = beta2_ * mo.v.a[i] + (1.0 - beta2_) * gi * gi;
      const double mhat = mo.m.a[i] / bc1;
      const double vhat = mo.v.a[i] / bc2;
      p->value.a[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    p->zero_grad();
  }
}

}  // namespace c2rnet::nn

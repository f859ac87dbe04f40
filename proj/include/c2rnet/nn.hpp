#pragma once

// Small reverse-mode autodiff engine over dense double matrices.
// Single-threaded, deterministic: identical inputs and seeds produce
// bit-identical values on one machine.

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace c2rnet::nn {

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;

  friend bool operator==(const Mat&, const Mat&) = default;
};

// Deterministic RNG independent of the standard library's distribution
// implementations. All randomness in the project goes through this.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }
  // uniform in [0,1), 53-bit resolution
  double uniform() { return (next() >> 11) * (1.0 / 9007199254740992.0); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // unbiased integer in [0,n)
  int uniform_int(int n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[uniform_int(i + 1)]);
    }
  }

  std::string save_state() const;
  void restore_state(const std::string& s);

 private:
  std::mt19937_64 gen_;
};

// A named trainable parameter. Gradients accumulate into `grad` during
// Graph::backward; `frozen` tensors are skipped by the optimizer.
struct Tensor {
  std::string name;
  Mat value;
  Mat grad;
  bool frozen = false;

  void zero_grad();
};

// Owns tensors with stable addresses; iteration follows creation order.
class ParamSet {
 public:
  Tensor& add(std::string name, int rows, int cols);
  Tensor& add_xavier(std::string name, int rows, int cols, Rng& rng);

  const std::vector<Tensor*>& tensors() const { return view_; }
  Tensor* find(const std::string& name) const;
  void zero_grads();
  size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Tensor>> store_;
  std::vector<Tensor*> view_;
};

using VarId = int;

class Graph {
 public:
  VarId constant(Mat m);
  VarId param(Tensor& t);

  VarId add(VarId a, VarId b);
  // adds a 1xC row vector to every row of m
  VarId add_row(VarId m, VarId row);
  VarId cmul(VarId a, VarId b);
  VarId matmul(VarId a, VarId b);
  // a * b^T without materializing the transpose
  VarId matmul_nt(VarId a, VarId b);
  VarId tanh_of(VarId a);
  VarId sigmoid_of(VarId a);
  VarId scale(VarId a, double s);
  VarId transpose(VarId a);
  VarId concat_rows(const std::vector<VarId>& parts);
  VarId concat_cols(const std::vector<VarId>& parts);
  VarId slice_rows(VarId a, int r0, int r1);
  VarId slice_cols(VarId a, int c0, int c1);
  VarId mean_rows(VarId a);
  VarId softmax_rows(VarId a);
  // negative log softmax of a 1xK logit row at `index`; result is 1x1
  VarId pick_nll(VarId logits_row, int index);
  VarId sum_scalars(const std::vector<VarId>& parts);
  // inverted dropout; draws one mask entry per element from rng
  VarId dropout(VarId a, double rate, Rng& rng);

  const Mat& value(VarId id) const { return nodes_[id].val; }
  int rows(VarId id) const { return nodes_[id].val.rows; }
  int cols(VarId id) const { return nodes_[id].val.cols; }

  // root must be 1x1; accumulates into every reachable Tensor::grad
  void backward(VarId root);

 private:
  enum class Op {
    Constant, Param, Add, AddRow, CMul, MatMul, MatMulNT, Tanh, Sigmoid,
    Scale, Transpose, ConcatRows, ConcatCols, SliceRows, SliceCols,
    MeanRows, SoftmaxRows, PickNll, SumScalars, Dropout,
  };
  struct Node {
    Op op;
    Mat val;
    VarId a = -1;
    VarId b = -1;
    std::vector<VarId> list;
    int i0 = 0;
    int i1 = 0;
    double x = 0.0;
    Mat aux;  // dropout mask
    Tensor* tensor = nullptr;
  };

  VarId push(Node n);
  std::vector<Node> nodes_;
};

class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double epsilon, double beta1 = 0.9, double beta2 = 0.999)
      : lr_(lr), eps_(epsilon), beta1_(beta1), beta2_(beta2) {}

  // One update over the given tensors (frozen ones skipped), then clears grads.
  void step(const std::vector<Tensor*>& params);

  int steps_taken() const { return t_; }

 private:
  struct Moments {
    Mat m, v;
  };
  double lr_, eps_, beta1_, beta2_;
  int t_ = 0;
  std::vector<std::pair<Tensor*, Moments>> state_;
  Moments& moments_for(Tensor* t);
};

}  // namespace c2rnet::nn

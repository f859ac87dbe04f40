#include <cmath>

#include "c2rnet/nn.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace c2rnet::nn;

namespace {

Mat row(std::initializer_list<double> xs) {
  Mat m(1, static_cast<int>(xs.size()));
  int c = 0;
  for (double x : xs) m(0, c++) = x;
  return m;
}

}  // namespace

TEST_CASE("rng is deterministic and restorable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  const std::string state = a.save_state();
  const uint64_t expected = a.next();
  Rng c(0);
  c.restore_state(state);
  CHECK(c.next() == expected);
}

TEST_CASE("rng shuffle is unbiased enough and deterministic") {
  Rng a(7), b(7);
  std::vector<int> x{0, 1, 2, 3, 4, 5, 6, 7}, y = x;
  a.shuffle(x);
  b.shuffle(y);
  CHECK(x == y);
  std::sort(x.begin(), x.end());
  CHECK(x == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("softmax rows are normalized and stable for large logits") {
  Graph g;
  Mat m(2, 3);
  m(0, 0) = 1000.0;
  m(0, 1) = 1000.0;
  m(0, 2) = 999.0;
  m(1, 0) = -5.0;
  m(1, 1) = 0.0;
  m(1, 2) = 5.0;
  const Mat p = g.value(g.softmax_rows(g.constant(m)));
  for (int r = 0; r < 2; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) sum += p(r, c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(p.all_finite());
}

TEST_CASE("pick_nll equals the negative log softmax") {
  Graph g;
  const VarId logits = g.constant(row({0.3, -1.2, 2.0}));
  const double nll = g.value(g.pick_nll(logits, 2))(0, 0);
  const double z = std::exp(0.3) + std::exp(-1.2) + std::exp(2.0);
  CHECK(nll == doctest::Approx(-std::log(std::exp(2.0) / z)).epsilon(1e-12));
}

TEST_CASE("backward matches finite differences on a composite graph") {
  Rng rng(19);
  ParamSet ps;
  Tensor& w1 = ps.add_xavier("w1", 3, 4, rng);
  Tensor& b1 = ps.add_xavier("b1", 1, 4, rng);
  Tensor& w2 = ps.add_xavier("w2", 2, 4, rng);
  Tensor& table = ps.add_xavier("table", 2, 3, rng);

  Mat x(2, 3);
  for (double& v : x.a) v = rng.uniform(-1.0, 1.0);

  // exercise every op the models use
  auto forward = [&](Graph& g) {
    const VarId xc = g.constant(x);
    const VarId picked = g.concat_rows(
        {g.slice_rows(g.param(table), 1, 2), g.slice_rows(g.param(table), 0, 1)});
    const VarId mixed = g.add(xc, picked);
    const VarId h = g.tanh_of(g.add_row(g.matmul(mixed, g.param(w1)), g.param(b1)));
    const VarId s = g.sigmoid_of(g.matmul_nt(h, g.param(w2)));  // 2x2
    const VarId attn = g.softmax_rows(g.scale(s, 1.7));
    const VarId pooled = g.mean_rows(g.cmul(attn, g.transpose(attn)));
    const VarId joined = g.concat_cols({pooled, g.mean_rows(h)});  // 1x6
    const VarId part = g.slice_cols(joined, 1, 5);
    return g.sum_scalars({g.pick_nll(part, 2)});
  };

  const auto loss_value = [&]() {
    Graph g;
    return g.value(forward(g))(0, 0);
  };
  const auto analytic = [&]() {
    Graph g;
    g.backward(forward(g));
  };
  const double err = c2rnet::testing::gradient_max_rel_error(
      ps.tensors(), loss_value, analytic);
  CHECK(err < 1e-6);
}

TEST_CASE("dropout masks are deterministic per rng state and scale by 1/keep") {
  Mat x(4, 5);
  for (double& v : x.a) v = 1.0;
  Rng r1(5), r2(5);
  Graph g1, g2;
  const Mat a = g1.value(g1.dropout(g1.constant(x), 0.5, r1));
  const Mat b = g2.value(g2.dropout(g2.constant(x), 0.5, r2));
  CHECK(a == b);
  for (double v : a.a) CHECK((v == 0.0 || v == 2.0));
}

TEST_CASE("adam minimizes a quadratic and respects frozen tensors") {
  ParamSet ps;
  Tensor& w = ps.add("w", 1, 2);
  w.value(0, 0) = 4.0;
  w.value(0, 1) = -3.0;
  Tensor& locked = ps.add("locked", 1, 1);
  locked.value(0, 0) = 1.25;
  locked.frozen = true;

  AdamOptimizer adam(0.05, 1e-6);
  for (int i = 0; i < 400; ++i) {
    // d/dw of 0.5*|w|^2 is w; pretend the frozen tensor also has gradient
    w.grad = w.value;
    locked.grad.a[0] = 100.0;
    adam.step(ps.tensors());
  }
  CHECK(std::fabs(w.value(0, 0)) < 1e-2);
  CHECK(std::fabs(w.value(0, 1)) < 1e-2);
  CHECK(locked.value(0, 0) == 1.25);
}

TEST_CASE("param gradients accumulate across multiple backward calls") {
  ParamSet ps;
  Tensor& w = ps.add("w", 1, 1);
  w.value(0, 0) = 0.5;
  for (int i = 0; i < 3; ++i) {
    Graph g;
    const VarId loss = g.pick_nll(g.concat_cols({g.param(w), g.constant(Mat(1, 1))}), 0);
    g.backward(loss);
  }
  Mat grad_once;
  {
    ParamSet single;
    Tensor& w2 = single.add("w", 1, 1);
    w2.value(0, 0) = 0.5;
    Graph g2;
    g2.backward(g2.pick_nll(g2.concat_cols({g2.param(w2), g2.constant(Mat(1, 1))}), 0));
    grad_once = w2.grad;
  }
  CHECK(w.grad(0, 0) == doctest::Approx(3.0 * grad_once(0, 0)).epsilon(1e-12));
}

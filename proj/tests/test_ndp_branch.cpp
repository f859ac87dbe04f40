#include <cmath>

#include "c2rnet/error.hpp"
#include "c2rnet/ndp_branch.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace c2rnet;
using nn::Mat;

namespace {

NDPParams zeroed_params(int dim) {
  nn::Rng rng(1);
  NDPParams p = NDPParams::init(dim, 0.0, rng);
  for (nn::Tensor* t : p.params.tensors())
    std::fill(t->value.a.begin(), t->value.a.end(), 0.0);
  return p;
}

void set_identity(nn::Tensor& t) {
  REQUIRE(t.value.rows == t.value.cols);
  std::fill(t.value.a.begin(), t.value.a.end(), 0.0);
  for (int i = 0; i < t.value.rows; ++i) t.value(i, i) = 1.0;
}

Mat mat(int rows, int cols, std::initializer_list<double> xs) {
  Mat m(rows, cols);
  REQUIRE(xs.size() == m.a.size());
  std::copy(xs.begin(), xs.end(), m.a.begin());
  return m;
}

}  // namespace

TEST_CASE("local attention over one token returns that token exactly") {
  nn::Rng rng(3);
  NDPParams p = NDPParams::init(5, 0.0, rng);
  Mat x(1, 5);
  for (double& v : x.a) v = rng.uniform(-1.0, 1.0);
  CHECK(local_attention(x, p) == x);
}

TEST_CASE("local attention over identical tokens averages with equal weights") {
  nn::Rng rng(4);
  NDPParams p = NDPParams::init(3, 0.0, rng);
  Mat x(2, 3);
  for (int c = 0; c < 3; ++c) x(0, c) = x(1, c) = 0.3 * (c + 1);
  const Mat out = local_attention(x, p);
  for (int c = 0; c < 3; ++c) CHECK(out(0, c) == doctest::Approx(x(0, c)).epsilon(1e-12));
}

TEST_CASE("local attention with identity projection matches the closed form") {
  NDPParams p = zeroed_params(2);
  set_identity(*p.local_proj);
  p.local_score->value(0, 0) = 1.0;  // score vector (1, 0)

  const Mat x = mat(2, 2, {1.0, 0.0, 0.0, 1.0});
  const Mat out = local_attention(x, p);

  // scores are (tanh 1, tanh 0); weights softmax to (0.6817, 0.3183)
  const double w0 = std::exp(std::tanh(1.0)) / (std::exp(std::tanh(1.0)) + 1.0);
  CHECK(w0 == doctest::Approx(0.6817).epsilon(1e-4));
  CHECK(out(0, 0) == doctest::Approx(w0).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(1.0 - w0).epsilon(1e-12));
}

TEST_CASE("global attention over one segment is its value projection") {
  nn::Rng rng(5);
  NDPParams p = NDPParams::init(4, 0.0, rng);
  Mat local(1, 4);
  for (double& v : local.a) v = rng.uniform(-1.0, 1.0);
  const Mat out = global_attention(local, p);

  nn::Graph g;
  const Mat expected = g.value(g.matmul(g.constant(local), g.param(*p.global_value)));
  for (int c = 0; c < 4; ++c)
    CHECK(out(0, c) == doctest::Approx(expected(0, c)).epsilon(1e-12));
}

TEST_CASE("global attention over equal rows weights them uniformly") {
  nn::Rng rng(6);
  NDPParams p = NDPParams::init(3, 0.0, rng);
  Mat local(4, 3);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 3; ++c) local(r, c) = 0.2 * (c + 1);
  const Mat out = global_attention(local, p);
  for (int r = 1; r < 4; ++r)
    for (int c = 0; c < 3; ++c)
      CHECK(out(r, c) == doctest::Approx(out(0, c)).epsilon(1e-12));
}

TEST_CASE("global attention with identity projections matches the closed form") {
  NDPParams p = zeroed_params(2);
  set_identity(*p.global_query);
  set_identity(*p.global_key);
  set_identity(*p.global_value);

  const Mat local = mat(2, 2, {1.0, 0.0, 0.0, 1.0});
  const Mat out = global_attention(local, p);

  // row 0 weights: softmax(1/sqrt(2), 0) = (0.6698, 0.3302)
  const double w = std::exp(1.0 / std::sqrt(2.0)) / (std::exp(1.0 / std::sqrt(2.0)) + 1.0);
  CHECK(w == doctest::Approx(0.6698).epsilon(1e-4));
  CHECK(out(0, 0) == doctest::Approx(w).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(1.0 - w).epsilon(1e-12));
  CHECK(out(1, 0) == doctest::Approx(1.0 - w).epsilon(1e-12));
  CHECK(out(1, 1) == doctest::Approx(w).epsilon(1e-12));
}

TEST_CASE("mix is elementwise addition") {
  const Mat a = mat(1, 2, {1.0, 2.0});
  const Mat b = mat(1, 2, {3.0, 4.0});
  CHECK(mix(a, b) == mat(1, 2, {4.0, 6.0}));
  CHECK(mix(a, b) == mix(b, a));
  CHECK(mix(a, Mat(1, 2)) == a);
  CHECK_THROWS_AS(mix(a, Mat(2, 2)), ValidationError);
}

TEST_CASE("segment embeddings satisfy mixed = local + global") {
  nn::Rng rng(7);
  NDPParams p = NDPParams::init(6, 0.0, rng);
  Mat tokens(9, 6);
  for (double& v : tokens.a) v = rng.uniform(-1.0, 1.0);
  const SegmentRanges segments{{0, 3}, {3, 4}, {4, 9}};
  const SegmentEmbeddings se = segment_embeddings(tokens, segments, p);
  CHECK(se.mixed == mix(se.local, se.global));
  CHECK(se.local.rows == 3);
}

TEST_CASE("classifier with zero weights is uniform over the 8 types") {
  NDPParams p = zeroed_params(4);
  const Mat probs = ndp_classify(Mat(3, 4), p);
  for (double v : probs.a) CHECK(v == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("classifier bias forces the argmax") {
  NDPParams p = zeroed_params(4);
  p.head_bias->value(0, 0) = 10.0;  // MainEvent logit
  const Mat probs = ndp_classify(Mat(2, 4), p);
  for (int r = 0; r < 2; ++r)
    for (int c = 1; c < 8; ++c) CHECK(probs(r, 0) > probs(r, c));
}

TEST_CASE("classifier rows are normalized for random parameters") {
  nn::Rng rng(8);
  NDPParams p = NDPParams::init(5, 0.0, rng);
  Mat mixed(7, 5);
  for (double& v : mixed.a) v = rng.uniform(-3.0, 3.0);
  const Mat probs = ndp_classify(mixed, p);
  for (int r = 0; r < probs.rows; ++r) {
    double sum = 0.0;
    for (int c = 0; c < probs.cols; ++c) sum += probs(r, c);
    CHECK(std::fabs(sum - 1.0) < 1e-6);
  }
}

TEST_CASE("classifier output is per-segment: permuting rows permutes outputs") {
  nn::Rng rng(9);
  NDPParams p = NDPParams::init(4, 0.0, rng);
  Mat mixed(3, 4);
  for (double& v : mixed.a) v = rng.uniform(-1.0, 1.0);
  Mat rotated(3, 4);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) rotated(r, c) = mixed((r + 1) % 3, c);
  const Mat probs = ndp_classify(mixed, p);
  const Mat probs_rot = ndp_classify(rotated, p);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 8; ++c)
      CHECK(probs_rot(r, c) == doctest::Approx(probs((r + 1) % 3, c)).epsilon(1e-12));
}

TEST_CASE("ndp_loss on one-hot, uniform and hand-computed probabilities") {
  Mat onehot(2, 8);
  onehot(0, 3) = 1.0;
  onehot(1, 0) = 1.0;
  CHECK(ndp_loss(onehot, {3, 0}) <= 1e-6);

  Mat uniform(4, 8);
  for (double& v : uniform.a) v = 0.125;
  CHECK(ndp_loss(uniform, {0, 1, 2, 3}) == doctest::Approx(std::log(8.0)).epsilon(1e-12));

  Mat two(2, 8);
  two(0, 5) = 0.5;
  two(1, 2) = 0.25;
  const double expected = -(std::log(0.5) + std::log(0.25)) / 2.0;
  CHECK(expected == doctest::Approx(1.0397).epsilon(1e-4));
  CHECK(ndp_loss(two, {5, 2}) == doctest::Approx(expected).epsilon(1e-12));

  // zero probability is clamped, not infinite
  Mat zero(1, 8);
  CHECK(std::isfinite(ndp_loss(zero, {0})));
}

TEST_CASE("ndp loss gradients match finite differences") {
  nn::Rng rng(10);
  NDPParams p = NDPParams::init(4, 0.0, rng);
  Mat tokens(6, 4);
  for (double& v : tokens.a) v = rng.uniform(-1.0, 1.0);
  const SegmentRanges segments{{0, 2}, {2, 3}, {3, 6}};
  const std::vector<int> gold{2, 7, 0};

  auto loss_forward = [&]() {
    nn::Graph g;
    const auto fwd = ndp_graph_forward(g, g.constant(tokens), segments, p, false, nullptr);
    return g.value(ndp_graph_nll(g, fwd.logits, gold))(0, 0);
  };
  auto analytic = [&]() {
    nn::Graph g;
    const auto fwd = ndp_graph_forward(g, g.constant(tokens), segments, p, false, nullptr);
    g.backward(ndp_graph_nll(g, fwd.logits, gold));
  };
  const double err = testing::gradient_max_rel_error(p.params.tensors(), loss_forward,
                                                     analytic, 1e-4);
  CHECK(err < 1e-3);
}

TEST_CASE("empty segments are rejected") {
  nn::Rng rng(11);
  NDPParams p = NDPParams::init(3, 0.0, rng);
  CHECK_THROWS_AS(local_attention(Mat(0, 3), p), ValidationError);
  nn::Graph g;
  Mat tokens(4, 3);
  CHECK_THROWS_AS(
      ndp_graph_forward(g, g.constant(tokens), {{2, 2}}, p, false, nullptr),
      ValidationError);
}

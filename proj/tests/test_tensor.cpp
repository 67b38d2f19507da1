#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mornmt/rng.hpp"
#include "mornmt/tape.hpp"
#include "mornmt/tensor.hpp"

using namespace mornmt;

namespace {

// Independent triple-loop product, written index-by-index against the
// mathematical definition rather than the implementation's loop order.
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::zeros({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a.at2(i, k) * b.at2(k, j);
      out.at2(i, j) = s;
    }
  return out;
}

std::vector<double> softmax_oracle(const std::vector<double>& x) {
  double sum = 0.0;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i]);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace

TEST_CASE("parameter set enforces unique names and grad shapes") {
  ParameterSet ps;
  Parameter& p = ps.add("w", Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK(p.grad.shape == p.value.shape);
  CHECK(p.grad.data == std::vector<double>(6, 0.0));
  CHECK_THROWS_AS(ps.add("w", Tensor::vec({1.0})), std::invalid_argument);
  CHECK(ps.find("w") == &p);
  CHECK(ps.find("missing") == nullptr);
}

TEST_CASE("matmul identity and hand cases") {
  Tape t;
  auto id = t.leaf(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  auto v = t.leaf(Tensor::matrix(2, 1, {3, 4}));
  auto r = t.matmul(id, v);
  CHECK(t.value(r).data == std::vector<double>{3, 4});

  auto a = t.leaf(Tensor::matrix(1, 2, {1, 2}));
  auto b = t.leaf(Tensor::matrix(2, 1, {3, 4}));
  CHECK(t.value(t.matmul(a, b)).data[0] == 11.0);
}

TEST_CASE("matmul random 3x4 by 4x2 matches the triple-loop oracle") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor a = Tensor::uniform({3, 4}, rng, -2, 2);
    Tensor b = Tensor::uniform({4, 2}, rng, -2, 2);
    Tensor want = matmul_oracle(a, b);
    Tape t;
    const Tensor& got = t.value(t.matmul(t.leaf(a), t.leaf(b)));
    REQUIRE(got.shape == want.shape);
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("matmul shape mismatch reports both shapes") {
  Tape t;
  auto a = t.leaf(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  auto b = t.leaf(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  CHECK_THROWS_WITH_AS(t.matmul(a, b), "matmul shape mismatch: [2x3] vs [2x2]",
                       std::invalid_argument);
}

TEST_CASE("matrix-vector and vector-matrix products") {
  Tape t;
  auto m = t.leaf(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  auto v = t.leaf(Tensor::vec({1, 0, -1}));
  const Tensor& mv = t.value(t.matmul(m, v));
  CHECK(mv.shape == Shape{2});
  CHECK(mv.data == std::vector<double>{-2, -2});

  auto u = t.leaf(Tensor::vec({1, -1}));
  const Tensor& um = t.value(t.matmul(u, m));
  CHECK(um.shape == Shape{3});
  CHECK(um.data == std::vector<double>{-3, -3, -3});
}

TEST_CASE("softmax fixed points") {
  Tape t;
  const Tensor& a = t.value(t.softmax(t.leaf(Tensor::vec({0, 0}))));
  CHECK(a.data[0] == 0.5);
  CHECK(a.data[1] == 0.5);

  const Tensor& b = t.value(t.softmax(t.leaf(Tensor::vec({1000, 1000, 1000}))));
  for (double v : b.data) {
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }

  const Tensor& c = t.value(t.softmax(t.leaf(Tensor::vec({1, 2, 3}))));
  auto want = softmax_oracle({1, 2, 3});
  for (std::size_t i = 0; i < 3; ++i) CHECK(c.data[i] == doctest::Approx(want[i]).epsilon(1e-14));
  CHECK(c.data[0] == doctest::Approx(0.09003057).epsilon(1e-7));
  CHECK(c.data[1] == doctest::Approx(0.24472847).epsilon(1e-7));
  CHECK(c.data[2] == doctest::Approx(0.66524096).epsilon(1e-7));

  CHECK_THROWS_AS(t.softmax(t.leaf(Tensor::vec({}))), std::invalid_argument);
}

TEST_CASE("softmax normalization holds for extreme finite inputs") {
  Rng rng(11);
  for (int seed = 0; seed < 200; ++seed) {
    const std::size_t n = 1 + rng.below(6);
    Tensor x = Tensor::zeros({n});
    const double mag = std::pow(10.0, static_cast<double>(rng.below(9)));  // up to 1e8
    for (double& v : x.data) v = rng.uniform(-mag, mag);
    Tape t;
    const Tensor& y = t.value(t.softmax(t.leaf(x)));
    double sum = 0.0;
    for (double v : y.data) {
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("backward: d(x*x)/dx = 2x") {
  ParameterSet ps;
  Parameter& x = ps.add("x", Tensor::vec({3.0}));
  Tape t;
  auto xv = t.param(x);
  auto loss = t.mul(xv, xv);
  t.backward(loss);
  CHECK(x.grad.data[0] == 6.0);
}

TEST_CASE("backward: sum of sigmoid at zero gives 0.25 per entry") {
  ParameterSet ps;
  Parameter& x = ps.add("x", Tensor::vec({0.0, 0.0, 0.0}));
  Tape t;
  auto s = t.sigmoid(t.param(x));
  auto loss = t.matmul(t.ones({1, 3}), s);  // sum reduction
  t.backward(loss);
  for (double g : x.grad.data) CHECK(g == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("backward rejects non-scalar losses") {
  Tape t;
  auto v = t.leaf(Tensor::vec({1, 2}));
  CHECK_THROWS_AS(t.backward(v), std::invalid_argument);
}

TEST_CASE("unreachable parameters keep zero gradients") {
  ParameterSet ps;
  Parameter& used = ps.add("used", Tensor::vec({2.0}));
  Parameter& unused = ps.add("unused", Tensor::vec({5.0}));
  Tape t;
  auto u = t.param(used);
  t.param(unused);
  t.backward(t.mul(u, u));
  CHECK(used.grad.data[0] == doctest::Approx(4.0));
  CHECK(unused.grad.data[0] == 0.0);
}

TEST_CASE("gradient accumulation is linear over losses") {
  Rng rng(23);
  ParameterSet ps;
  Parameter& w = ps.add("w", Tensor::uniform({4}, rng, -1, 1));

  auto loss1 = [&](Tape& t) {
    auto wv = t.param(w);
    return t.matmul(t.ones({1, 4}), t.mul(wv, wv));
  };
  auto loss2 = [&](Tape& t) {
    auto wv = t.param(w);
    return t.matmul(t.ones({1, 4}), t.sigmoid(wv));
  };

  ps.zero_grads();
  {
    Tape t;
    t.backward(t.add(loss1(t), loss2(t)));
  }
  std::vector<double> joint = w.grad.data;

  ps.zero_grads();
  {
    Tape t;
    t.backward(loss1(t));
  }
  {
    Tape t;
    t.backward(loss2(t));
  }
  for (std::size_t i = 0; i < joint.size(); ++i)
    CHECK(std::abs(joint[i] - w.grad.data[i]) <= 1e-12);
}

TEST_CASE("replaying backward without zeroing doubles every gradient exactly") {
  Rng rng(31);
  ParameterSet ps;
  Parameter& w = ps.add("w", Tensor::uniform({3}, rng, -1, 1));
  Tape t;
  auto wv = t.param(w);
  auto loss = t.matmul(t.ones({1, 3}), t.tanh(t.mul(wv, wv)));
  t.backward(loss);
  std::vector<double> once = w.grad.data;
  t.backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(w.grad.data[i] == 2.0 * once[i]);
}

TEST_CASE("finite differences: quadratic loss is exact to 1e-9 across epsilons") {
  Rng rng(41);
  ParameterSet ps;
  Parameter& w = ps.add("w", Tensor::uniform({5}, rng, 0.8, 1.5));
  auto build = [&](Tape& t) {
    auto wv = t.param(w);
    auto shifted = t.add(wv, t.leaf(Tensor::filled({5}, -0.3)));
    return t.matmul(t.ones({1, 5}), t.mul(shifted, shifted));
  };
  for (double eps : {1e-6, 1e-5, 1e-4}) {
    GradCheckReport r = finite_diff_check(ps, build, eps);
    CHECK(r.worst < 1e-9);
  }
}

TEST_CASE("finite differences: sigmoid chain of depth 5") {
  Rng rng(43);
  ParameterSet ps;
  Parameter& w = ps.add("w", Tensor::uniform({3}, rng, -1, 1));
  auto build = [&](Tape& t) {
    auto v = t.param(w);
    for (int d = 0; d < 5; ++d) v = t.sigmoid(v);
    return t.matmul(t.ones({1, 3}), v);
  };
  CHECK(finite_diff_check(ps, build, 1e-5).worst < 1e-6);
}

namespace {
double bad_sin(double x) { return std::sin(x); }
double bad_sin_df(double x, double) { return 1.5 * std::cos(x); }  // off by 50%
}  // namespace

TEST_CASE("finite differences flag a corrupted gradient rule") {
  Rng rng(47);
  ParameterSet ps;
  Parameter& w = ps.add("w", Tensor::uniform({3}, rng, 0.3, 1.0));
  auto build = [&](Tape& t) {
    return t.matmul(t.ones({1, 3}), t.custom_unary(t.param(w), bad_sin, bad_sin_df));
  };
  CHECK(finite_diff_check(ps, build, 1e-5).worst > 1e-2);
}

TEST_CASE("finite differences reject a non-deterministic loss") {
  ParameterSet ps;
  Parameter& w = ps.add("w", Tensor::vec({1.0}));
  int calls = 0;
  auto build = [&](Tape& t) {
    ++calls;
    return t.scale(t.param(w), static_cast<double>(calls));
  };
  CHECK_THROWS_AS(finite_diff_check(ps, build, 1e-5), std::runtime_error);
}

TEST_CASE("every op matches central finite differences over 100 random seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed * 977 + 13);
    ParameterSet ps;
    Parameter& m1 = ps.add("m1", Tensor::uniform({2, 3}, rng, -1, 1));
    Parameter& m2 = ps.add("m2", Tensor::uniform({3, 2}, rng, -1, 1));
    Parameter& v1 = ps.add("v1", Tensor::uniform({3}, rng, -1, 1));
    Parameter& v2 = ps.add("v2", Tensor::uniform({3}, rng, -1, 1));
    Parameter& emb = ps.add("emb", Tensor::uniform({4, 3}, rng, -1, 1));
    const std::size_t row = rng.below(4);
    const std::size_t target = rng.below(10);

    auto build = [&](Tape& t) {
      auto a = t.param(m1), b = t.param(m2);
      auto mm = t.reshape(t.matmul(a, b), {4});              // matmul 2x2 + reshape
      auto mv = t.matmul(a, t.param(v1));                    // matrix-vector {2}
      auto vm = t.matmul(t.param(v1), b);                    // vector-matrix {2}
      auto g = t.gather_row(t.param(emb), row);              // {3}
      auto pm = t.mul(t.sigmoid(t.param(v1)), t.tanh(t.param(v2)));
      auto sc = t.scale(t.add(pm, g), 1.7);                  // {3}
      Tape::Var parts[4] = {sc, mm, mv, vm};
      auto cat = t.concat(std::span<const Tape::Var>(parts, 4));  // {11}
      auto sl = t.slice(cat, 1, 11);                         // {10}
      auto sm = t.softmax(t.slice(cat, 0, 5));               // softmax inside graph
      Tape::Var both[2] = {sl, sm};
      auto logits = t.concat(std::span<const Tape::Var>(both, 2));  // {15}
      return t.cross_entropy(logits, target);
    };

    GradCheckReport r = finite_diff_check(ps, build, 1e-5);
    CHECK_MESSAGE(r.worst <= 1e-4, "seed ", seed, " worst ", r.worst);
  }
}

TEST_CASE("cross entropy equals -log softmax at the target") {
  Tape t;
  auto logits = t.leaf(Tensor::vec({1, 2, 3}));
  const double loss = t.value(t.cross_entropy(logits, 2)).data[0];
  auto want = softmax_oracle({1, 2, 3});
  CHECK(loss == doctest::Approx(-std::log(want[2])).epsilon(1e-14));
  CHECK_THROWS_AS(t.cross_entropy(logits, 3), std::invalid_argument);
}

TEST_CASE("concat, slice and reshape round values through untouched") {
  Tape t;
  auto a = t.leaf(Tensor::vec({1, 2}));
  auto b = t.leaf(Tensor::vec({3}));
  auto c = t.concat(a, b);
  CHECK(t.value(c).data == std::vector<double>{1, 2, 3});
  CHECK(t.value(t.slice(c, 1, 3)).data == std::vector<double>{2, 3});
  auto r = t.reshape(t.leaf(Tensor::vec({1, 2, 3, 4})), {2, 2});
  CHECK(t.value(r).rows() == 2);
  CHECK_THROWS_AS(t.reshape(r, {3, 2}), std::invalid_argument);
}

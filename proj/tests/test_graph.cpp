#include "silt/graph.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "silt/rng.hpp"
#include "silt/tensor.hpp"

using namespace silt;

namespace {

Tensor vec_tensor(const std::string& name, std::vector<double> vals) {
  Tensor t(name, {vals.size()});
  t.v = std::move(vals);
  return t;
}

}  // namespace

TEST(Graph, SoftmaxBasics) {
  Tape tape;
  {
    std::vector<double> x{0.0, 0.0};
    auto a = tape.val(tape.softmax(tape.constant(x)));
    EXPECT_DOUBLE_EQ(a[0], 0.5);
    EXPECT_DOUBLE_EQ(a[1], 0.5);
  }
  {
    std::vector<double> x{1000.0, 1000.0};
    auto a = tape.val(tape.softmax(tape.constant(x)));
    EXPECT_DOUBLE_EQ(a[0], 0.5);
    EXPECT_DOUBLE_EQ(a[1], 0.5);
  }
  {
    std::vector<double> x{std::log(1.0), std::log(3.0)};
    auto a = tape.val(tape.softmax(tape.constant(x)));
    EXPECT_NEAR(a[0], 0.25, 1e-15);
    EXPECT_NEAR(a[1], 0.75, 1e-15);
  }
}

TEST(Graph, SoftmaxShiftInvariantAndNormalized) {
  Rng rng(3);
  Tape tape;
  for (int rep = 0; rep < 20; ++rep) {
    int k = 2 + static_cast<int>(rng.next_below(6));
    std::vector<double> x(k), shifted(k);
    double c = rng.uniform(-50.0, 50.0);
    for (int i = 0; i < k; ++i) {
      x[i] = rng.uniform(-5.0, 5.0);
      shifted[i] = x[i] + c;
    }
    auto a = tape.val(tape.softmax(tape.constant(x)));
    auto b = tape.val(tape.softmax(tape.constant(shifted)));
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-12);
      sum += a[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Graph, ComposeZeroParamsGiveZero) {
  Tensor w("w", {4, 8}), b("b", {4});
  Tensor l = vec_tensor("l", {0.3, -0.2, 0.9, 0.1});
  Tensor r = vec_tensor("r", {0.5, 0.5, -0.5, 0.0});
  Tape tape;
  NodeId out = tape.compose(tape.param(w), tape.param(b), tape.param(l), tape.param(r));
  for (double x : tape.val(out)) EXPECT_DOUBLE_EQ(x, 0.0);
}

TEST(Graph, ComposeHandValueD1) {
  Tensor w("w", {1, 2}), b("b", {1});
  w.v = {1.0, 1.0};
  Tensor l = vec_tensor("l", {0.5});
  Tensor r = vec_tensor("r", {0.25});
  Tape tape;
  NodeId out = tape.compose(tape.param(w), tape.param(b), tape.param(l), tape.param(r));
  EXPECT_DOUBLE_EQ(tape.scalar(out), std::tanh(0.75));
}

TEST(Graph, BilinearIdentityAndZero) {
  Tensor s("s", {3, 3});
  for (int i = 0; i < 3; ++i) s.v[i * 3 + i] = 1.0;
  Tensor e1 = vec_tensor("e1", {1.0, 0.0, 0.0});
  Tape tape;
  EXPECT_DOUBLE_EQ(tape.scalar(tape.bilinear(tape.param(s), tape.param(e1), tape.param(e1))), 1.0);

  Tensor zero("z", {3, 3});
  Tensor a = vec_tensor("a", {0.4, -1.2, 2.0});
  Tensor b = vec_tensor("b", {1.5, 0.3, -0.7});
  Tape t2;
  EXPECT_DOUBLE_EQ(t2.scalar(t2.bilinear(t2.param(zero), t2.param(a), t2.param(b))), 0.0);
}

TEST(Graph, NonFiniteTrips) {
  Tensor w("w", {1, 2}), b("b", {1});
  w.v = {1e308, 1e308};
  Tensor l = vec_tensor("l", {1e308});
  Tensor r = vec_tensor("r", {1e308});
  Tape tape;
  // tanh saturates, so drive the overflow through bilinear instead
  Tensor s("s", {1, 1});
  s.v = {1e308};
  EXPECT_THROW(tape.bilinear(tape.param(s), tape.param(l), tape.param(r)), NumericError);
}

TEST(Graph, QuadraticGradCheck) {
  Tensor theta = vec_tensor("theta", {3.0});
  auto compute = [&](bool want_grad) {
    Tape tape;
    NodeId p = tape.param(theta);
    NodeId loss = tape.bilinear(tape.constant1(1.0), p, p);  // theta^2
    if (want_grad) tape.backward(loss);
    return tape.scalar(loss);
  };
  auto rep = grad_check({&theta}, compute, 1e-5);
  EXPECT_LT(rep.max_rel_err, 1e-8);
  theta.zero_grad();
  compute(true);
  EXPECT_NEAR(theta.g[0], 6.0, 1e-12);
}

TEST(Graph, ConstantLossZeroGradient) {
  Tensor theta = vec_tensor("theta", {1.7, -0.4});
  auto compute = [&](bool want_grad) {
    Tape tape;
    tape.param(theta);  // bound but unused
    NodeId loss = tape.constant1(5.0);
    if (want_grad) tape.backward(loss);
    return tape.scalar(loss);
  };
  auto rep = grad_check({&theta}, compute, 1e-5);
  EXPECT_EQ(rep.max_rel_err, 0.0);
  theta.zero_grad();
  compute(true);
  EXPECT_EQ(theta.g[0], 0.0);
  EXPECT_EQ(theta.g[1], 0.0);
}

// every op in one composed loss, checked against central differences
TEST(Graph, AllOpsGradCheck) {
  const int d = 4;
  Rng rng(11);
  Tensor w("w", {static_cast<std::size_t>(d), static_cast<std::size_t>(2 * d)});
  Tensor b("b", {static_cast<std::size_t>(d)});
  Tensor s("s", {static_cast<std::size_t>(d), static_cast<std::size_t>(d)});
  Tensor proj("proj", {3, static_cast<std::size_t>(d)});
  Tensor l("l", {static_cast<std::size_t>(d)}), r("r", {static_cast<std::size_t>(d)});
  for (Tensor* t : {&w, &b, &s, &proj, &l, &r})
    for (double& x : t->v) x = rng.uniform(-0.5, 0.5);

  auto compute = [&](bool want_grad) {
    Tape tape;
    NodeId wl = tape.param(w), bl = tape.param(b), sl = tape.param(s);
    NodeId ln = tape.param(l), rn = tape.param(r);
    NodeId c1 = tape.compose(wl, bl, ln, rn);
    NodeId c2 = tape.compose(wl, bl, rn, ln);
    NodeId s1 = tape.bilinear(sl, ln, rn);
    NodeId s2 = tape.bilinear(sl, c1, c2);
    std::vector<NodeId> scores{s1, s2};
    NodeId weights = tape.softmax(tape.stack(scores));
    std::vector<NodeId> parts{c1, c2};
    NodeId mixed = tape.mix(weights, parts);
    NodeId logits = tape.matvec(tape.param(proj), mixed);
    NodeId nll = tape.nll_pick(logits, 1);
    NodeId hinge = tape.relu(tape.comb({s1, s2}, {1.0, -1.0}, 0.3));
    NodeId loss = tape.comb({nll, hinge, s2}, {1.0, 0.5, 0.25});
    if (want_grad) tape.backward(loss);
    return tape.scalar(loss);
  };
  auto rep = grad_check({&w, &b, &s, &proj, &l, &r}, compute, 1e-5);
  EXPECT_LT(rep.max_rel_err, 1e-4)
      << rep.worst_tensor << "[" << rep.worst_index << "] analytic=" << rep.worst_analytic
      << " numeric=" << rep.worst_numeric;
}

TEST(Graph, BackwardAccumulatesAcrossCalls) {
  Tensor theta = vec_tensor("theta", {2.0});
  Tape tape;
  NodeId p = tape.param(theta);
  NodeId loss = tape.bilinear(tape.constant1(1.0), p, p);
  tape.backward(loss);
  tape.backward(loss);
  EXPECT_NEAR(theta.g[0], 8.0, 1e-12);  // 2 * dtheta^2/dtheta
}

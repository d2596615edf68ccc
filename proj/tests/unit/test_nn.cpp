#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "vlgen/error.hpp"
#include "vlgen/nn/layers.hpp"
#include "vlgen/nn/ops.hpp"
#include "vlgen/nn/optim.hpp"

using namespace vlgen;
using namespace vlgen::nn;

namespace {

// Builds a scalar from the given parameters on a fresh tape.
using Graph = std::function<Var(Tape&, std::vector<Var>&)>;

// Central differences for every entry of every parameter vs. backward.
void check_gradients(std::vector<Parameter*> params, const Graph& graph, double tol = 1e-6) {
  for (auto* p : params) p->grad.setZero();
  {
    Tape t;
    std::vector<Var> vars;
    for (auto* p : params) vars.push_back(t.param(*p));
    Var out = graph(t, vars);
    // Weighted sum so every output entry matters.
    Matrix w(out.rows(), out.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = std::sin(1.0 + 0.37 * double(i));
    t.backward({{out, w}});
  }
  auto eval = [&] {
    Tape t(false);
    std::vector<Var> vars;
    for (auto* p : params) vars.push_back(t.param(*p));
    const Matrix& o = graph(t, vars).value();
    double s = 0;
    for (Eigen::Index i = 0; i < o.size(); ++i) s += std::sin(1.0 + 0.37 * double(i)) * o.data()[i];
    return s;
  };
  const double h = 1e-6;
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double orig = p->value.data()[i];
      p->value.data()[i] = orig + h;
      const double up = eval();
      p->value.data()[i] = orig - h;
      const double down = eval();
      p->value.data()[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad.data()[i];
      EXPECT_NEAR(analytic, numeric, tol * std::max(1.0, std::fabs(numeric))) << p->name << "[" << i << "]";
    }
  }
}

struct Fixture {
  ParameterSet ps;
  Rng rng{123};
  Parameter& rand(const std::string& name, int r, int c, double s = 1.0) {
    return ps.add(name, normal_matrix(r, c, s, rng));
  }
};

}  // namespace

TEST(NnOps, ElementwiseAndMatmulGradients) {
  Fixture f;
  auto& a = f.rand("a", 3, 4);
  auto& b = f.rand("b", 4, 2);
  auto& c = f.rand("c", 3, 4);
  auto& r = f.rand("r", 1, 4);
  auto& s = f.rand("s", 1, 1);
  check_gradients({&a, &b, &c, &r, &s}, [](Tape&, std::vector<Var>& v) {
    Var x = add_row(mul(v[0], tanh(v[2])), v[3]);
    Var y = sub(sigmoid(x), scale(gelu(v[2]), 0.3));
    Var z = matmul(add_n({y, x, exp(scale(v[0], 0.2))}), v[1]);
    return scale_by(transpose(z), v[4]);
  });
}

TEST(NnOps, StructuralGradients) {
  Fixture f;
  auto& a = f.rand("a", 4, 3);
  auto& b = f.rand("b", 2, 3);
  auto& table = f.rand("table", 5, 3);
  check_gradients({&a, &b, &table}, [](Tape&, std::vector<Var>& v) {
    Var cat = concat_rows({v[0], v[1], gather_rows(v[2], {4, 0, 4})});
    Var sl = slice_cols(slice_rows(cat, 1, 6), 1, 2);
    Var total = gather_rows(concat_rows({sum_all(sl), sum_all(v[0])}), {0, 1, 1});
    return add(slice_cols(transpose(total), 1, 2), mean_rows(sl));
  });
}

TEST(NnOps, LayerNormGradients) {
  Fixture f;
  auto& x = f.rand("x", 3, 5);
  auto& g = f.rand("g", 1, 5);
  auto& b = f.rand("b", 1, 5);
  check_gradients({&x, &g, &b}, [](Tape&, std::vector<Var>& v) { return layer_norm(v[0], v[1], v[2]); }, 1e-5);
}

TEST(NnOps, LayerNormNormalizesRows) {
  Tape t(false);
  Matrix x(2, 4);
  x << 1, 2, 3, 4, -5, 0, 5, 10;
  Var y = layer_norm(t.constant(x), t.constant(Matrix::Ones(1, 4)), t.constant(Matrix::Zero(1, 4)), 0.0);
  for (int r = 0; r < 2; ++r) {
    EXPECT_NEAR(y.value().row(r).mean(), 0.0, 1e-12);
    EXPECT_NEAR(y.value().row(r).squaredNorm() / 4, 1.0, 1e-12);
  }
}

TEST(NnOps, AttentionGradients) {
  Fixture f;
  auto& q = f.rand("q", 4, 6);
  auto& k = f.rand("k", 4, 6);
  auto& v = f.rand("v", 4, 6);
  auto& m = f.rand("m", 3, 6);
  for (bool causal : {false, true})
    check_gradients({&q, &k, &v}, [causal](Tape&, std::vector<Var>& x) { return attention(x[0], x[1], x[2], 2, causal); });
  check_gradients({&q, &m}, [](Tape&, std::vector<Var>& x) { return attention(x[0], x[1], x[1], 3, false); });
}

TEST(NnOps, CausalAttentionIgnoresFuture) {
  Fixture f;
  Matrix q = normal_matrix(3, 4, 1, f.rng), k = normal_matrix(3, 4, 1, f.rng), v = normal_matrix(3, 4, 1, f.rng);
  Tape t(false);
  const Matrix a = attention(t.constant(q), t.constant(k), t.constant(v), 2, true).value();
  k.row(2).setConstant(9);
  v.row(2).setConstant(-9);
  const Matrix b = attention(t.constant(q), t.constant(k), t.constant(v), 2, true).value();
  EXPECT_TRUE(a.topRows(2).isApprox(b.topRows(2), 1e-14));
  EXPECT_FALSE(a.row(2).isApprox(b.row(2)));
  // The first query sees only the first key.
  EXPECT_TRUE(a.row(0).isApprox(v.row(0), 1e-14));
}

TEST(NnOps, CrossEntropyAndNormalizeGradients) {
  Fixture f;
  auto& z = f.rand("z", 4, 5);
  auto& e = f.rand("e", 3, 4);
  check_gradients({&z}, [](Tape&, std::vector<Var>& v) { return cross_entropy(v[0], {2, -1, 0, 4}); });
  check_gradients({&e}, [](Tape&, std::vector<Var>& v) { return l2_normalize_rows(v[0]); });
}

TEST(NnOps, CrossEntropyUniformIsLogV) {
  Tape t(false);
  Var l = cross_entropy(t.constant(Matrix::Zero(3, 7)), {1, -1, 6});
  EXPECT_NEAR(l.scalar(), std::log(7.0), 1e-15);
  EXPECT_DOUBLE_EQ(cross_entropy(t.constant(Matrix::Zero(2, 7)), {-1, -1}).scalar(), 0.0);
}

TEST(NnOps, ZeroNormRowThrows) {
  Tape t;
  Matrix x = Matrix::Ones(2, 3);
  x.row(1).setZero();
  EXPECT_THROW(l2_normalize_rows(t.constant(x)), InvalidArgument);
}

TEST(NnOps, SparsePatchEmbedMatchesDense) {
  Fixture f;
  auto& w = f.rand("w", 6, 4);
  auto& b = f.rand("b", 1, 4);
  Matrix dense = Matrix::Zero(5, 6);
  dense.row(1) = normal_matrix(1, 6, 1, f.rng);
  dense.row(3) = normal_matrix(1, 6, 1, f.rng);
  Matrix sparse(2, 6);
  sparse << dense.row(1), dense.row(3);
  Tape t(false);
  const Matrix expect = add_row(matmul(t.constant(dense), t.param(w)), t.param(b)).value();
  EXPECT_TRUE(sparse_patch_embed(sparse, {1, 3}, 5, t.param(w), t.param(b)).value().isApprox(expect, 1e-14));
  check_gradients({&w, &b}, [&](Tape&, std::vector<Var>& v) { return sparse_patch_embed(sparse, {1, 3}, 5, v[0], v[1]); });
}

TEST(NnLayers, TransformerAndLstmGradients) {
  ParameterSet ps;
  Rng rng(5);
  TransformerBlock block(ps, "blk", 4, 2, true, true, rng);
  Lstm lstm(ps, "lstm", 4, 3, 2, rng);
  Parameter& x = ps.add("x", normal_matrix(3, 4, 1, rng));
  Parameter& mem = ps.add("mem", normal_matrix(2, 4, 1, rng));
  std::vector<Parameter*> all = ps.all();
  check_gradients(all, [&](Tape& t, std::vector<Var>& v) {
    Var y = block(t, v[v.size() - 2], v[v.size() - 1]);
    return lstm(t, y);
  }, 1e-5);
  (void)x;
  (void)mem;
}

TEST(NnLayers, UnusedOrFrozenParametersGetNoGradient) {
  ParameterSet ps;
  Rng rng(1);
  Linear used(ps, "used", 3, 2, rng);
  Linear frozen(ps, "frozen", 3, 3, rng, false);
  Linear unused(ps, "unused", 3, 2, rng);
  Tape t;
  Var x = t.constant(Matrix::Ones(1, 3));
  t.backward(sum_all(used(t, frozen(t, x))));
  EXPECT_GT(used.weight->grad.norm(), 0);
  EXPECT_EQ(frozen.weight->grad.norm(), 0);
  EXPECT_EQ(unused.weight->grad.norm(), 0);
}

TEST(NnOptim, AdamWSkipsFrozenAndFollowsSchedule) {
  ParameterSet ps;
  Rng rng(1);
  auto& p = ps.add("p.weight", normal_matrix(2, 2, 1, rng));
  auto& frozen = ps.add("f.weight", normal_matrix(2, 2, 1, rng), false);
  const Matrix before = frozen.value;
  p.grad.setOnes();
  frozen.grad.setOnes();
  AdamW opt(ps, {.lr = 0.1, .weight_decay = 0});
  const Matrix p0 = p.value;
  opt.step(0.1);
  // First Adam step moves each entry by lr * sign(grad).
  EXPECT_TRUE((p0 - p.value).isApprox(Matrix::Constant(2, 2, 0.1), 1e-6));
  EXPECT_EQ(frozen.value, before);
  EXPECT_DOUBLE_EQ(linear_schedule(1.0, 0, 10), 1.0);
  EXPECT_DOUBLE_EQ(linear_schedule(1.0, 5, 10), 0.5);
  EXPECT_DOUBLE_EQ(linear_schedule(1.0, 10, 10), 0.0);
  EXPECT_DOUBLE_EQ(linear_schedule(1.0, 0, 10, 2), 0.5);
}

TEST(NnOptim, ClipGradNorm) {
  ParameterSet ps;
  auto& p = ps.add("p", Matrix::Zero(1, 2));
  p.grad << 3, 4;
  EXPECT_DOUBLE_EQ(clip_grad_norm(ps, 1.0), 5.0);
  EXPECT_NEAR(p.grad.norm(), 1.0, 1e-15);
}

TEST(NnParameters, ChecksumTracksValues) {
  ParameterSet ps;
  Rng rng(2);
  auto& a = ps.add("enc.a", normal_matrix(2, 2, 1, rng));
  ps.add("dec.b", normal_matrix(2, 2, 1, rng));
  const auto enc = ps.checksum("enc."), all = ps.checksum();
  ps.get("dec.b").value(0, 0) += 1;
  EXPECT_EQ(ps.checksum("enc."), enc);
  EXPECT_NE(ps.checksum(), all);
  a.value(1, 1) = std::nextafter(a.value(1, 1), 10.0);
  EXPECT_NE(ps.checksum("enc."), enc);
  EXPECT_THROW(ps.add("enc.a", Matrix::Zero(1, 1)), InvalidArgument);
}

// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "radbev/errors.hpp"
#include "radbev/numerics/grad_check.hpp"
#include "radbev/numerics/mlp.hpp"
#include "radbev/numerics/ops.hpp"
#include "radbev/numerics/parallel.hpp"
#include "radbev/numerics/serialize.hpp"

namespace radbev {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Scalar probe <op(inputs), r> so every output element gets a distinct weight.
double check_op(const std::function<Var(const std::vector<Var>&)>& op, std::vector<Tensor> inputs,
                std::uint64_t seed = 17) {
  Rng rng(seed);
  std::vector<Tensor*> ptrs;
  for (Tensor& t : inputs) ptrs.push_back(&t);
  Tensor probe;
  {
    Tape tape;
    std::vector<Var> vars;
    for (Tensor& t : inputs) vars.push_back(tape.constant(t));
    probe = random_tensor(op(vars).shape(), rng);
  }
  auto f = [&](Tape&, const std::vector<Var>& in) { return ops::dot_const(op(in), probe); };
  return grad_check_report(f, ptrs).max_rel_error;
}

TEST(Tensor, ShapeAndDataAgree) {
  Tensor t({2, 3, 4}, 1.5);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.at({1, 2, 3}), 1.5);
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  EXPECT_THROW(t.at({2, 0, 0}), DimensionError);
  EXPECT_THROW(t.reshape({5, 5}), DimensionError);
  EXPECT_EQ(t.reshape({6, 4}).shape(), (Shape{6, 4}));
}

TEST(Matmul, IdentityAndHandArithmetic) {
  Tape tape;
  Rng rng(1);
  Tensor x = random_tensor({3, 4}, rng);
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
  EXPECT_EQ(ops::matmul(tape.constant(eye), tape.constant(x)).value(), x);
  Var r = ops::matmul(tape.constant(Tensor({2, 2}, {1, 2, 3, 4})), tape.constant(Tensor({2, 1}, {1, 1})));
  EXPECT_EQ(r.value(), Tensor({2, 1}, {3, 7}));
  EXPECT_THROW(ops::matmul(tape.constant(Tensor({2, 3})), tape.constant(Tensor({2, 3}))), DimensionError);
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  Rng rng(2);
  EXPECT_LT(check_op([](const std::vector<Var>& v) { return ops::matmul(v[0], v[1]); },
                     {random_tensor({5, 7}, rng), random_tensor({7, 3}, rng)}),
            1e-6);
}

TEST(Softmax, UniformStableAndNormalized) {
  Tape tape;
  Var u = ops::softmax(tape.constant(Tensor({8}, 0.3)), 0);
  for (double v : u.value().values()) EXPECT_DOUBLE_EQ(v, 0.125);
  Var big = ops::softmax(tape.constant(Tensor({3}, {1000, 0, 0})), 0);
  EXPECT_NEAR(big.value()[0], 1.0, 1e-15);
  EXPECT_TRUE(std::isfinite(big.value()[1]));
  EXPECT_LT(big.value()[1], 1e-300);

  Rng rng(3);
  Tensor x = random_tensor({4, 5, 6}, rng, -30, 30);
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const Tensor s = ops::softmax(tape.constant(x), axis).value();
    const Shape& sh = x.shape();
    std::size_t inner = 1;
    for (std::size_t k = axis + 1; k < 3; ++k) inner *= sh[k];
    const std::size_t outer = x.size() / (inner * sh[axis]);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < inner; ++i) {
        double total = 0.0;
        for (std::size_t k = 0; k < sh[axis]; ++k) {
          const double v = s[(o * sh[axis] + k) * inner + i];
          EXPECT_GE(v, 0.0);
          total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
  }
}

TEST(Softmax, ShiftInvariantAndDifferentiable) {
  Rng rng(4);
  Tensor x = random_tensor({3, 6}, rng);
  Tensor shifted = x;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t k = 0; k < 6; ++k) shifted[r * 6 + k] += 12.5 * static_cast<double>(r + 1);
  Tape tape;
  EXPECT_LT(max_abs_diff(ops::softmax(tape.constant(x), 1).value(), ops::softmax(tape.constant(shifted), 1).value()),
            1e-15);
  EXPECT_LT(check_op([](const std::vector<Var>& v) { return ops::softmax(v[0], 1); }, {x}), 1e-6);
  EXPECT_LT(check_op([](const std::vector<Var>& v) { return ops::softmax(v[0], 0); }, {x}), 1e-6);
}

TEST(BilinearSample, GridPointsConstancyAndPadding) {
  Rng rng(5);
  Tensor map = random_tensor({3, 7, 6}, rng);
  Tape tape;
  Var m = tape.constant(map);
  Var s = ops::bilinear_sample(m, tape.constant(Tensor({2}, {3, 5})));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(s.value()[c], map.at({c, 5, 3}));
  Var z = ops::bilinear_sample(m, tape.constant(Tensor({2}, {-10, -10})));
  for (double v : z.value().values()) EXPECT_EQ(v, 0.0);
  Var k = ops::bilinear_sample(tape.constant(Tensor({2, 4, 4}, 2.5)), tape.constant(Tensor({2}, {1.3, 2.7})));
  for (double v : k.value().values()) EXPECT_NEAR(v, 2.5, 1e-15);
  // Half a cell outside the border reads half the edge value.
  Var edge = ops::bilinear_sample(tape.constant(Tensor({1, 4, 4}, 1.0)), tape.constant(Tensor({2}, {-0.5, 1.0})));
  EXPECT_DOUBLE_EQ(edge.value()[0], 0.5);
}

TEST(BilinearSample, PiecewiseLinearBetweenCells) {
  Tensor map({1, 3, 5});
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 5; ++x) map[y * 5 + x] = static_cast<double>(x * x);
  Tape tape;
  Var s = ops::bilinear_sample(tape.constant(map), tape.constant(Tensor({2}, {2.5, 1.0})));
  EXPECT_DOUBLE_EQ(s.value()[0], (4.0 + 9.0) / 2.0);
}

TEST(BilinearSample, GradientInMapAndCoordinates) {
  Rng rng(6);
  EXPECT_LT(check_op([](const std::vector<Var>& v) { return ops::bilinear_sample(v[0], v[1]); },
                     {random_tensor({2, 4, 5}, rng), Tensor({2}, {2.3, 1.6})}),
            1e-6);
}

TEST(Conv2dLite, DeltaKernelAndHandCount) {
  Rng rng(7);
  Tensor map = random_tensor({2, 4, 5}, rng);
  Tensor delta({2, 2, 3, 3});
  delta.at({0, 0, 1, 1}) = 1.0;
  delta.at({1, 1, 1, 1}) = 1.0;
  Tape tape;
  EXPECT_EQ(ops::conv2d_lite(tape.constant(map), tape.constant(delta)).value(), map);
  Tensor ones = ops::conv2d_lite(tape.constant(Tensor({1, 5, 5}, 1.0)), tape.constant(Tensor({1, 1, 3, 3}, 1.0))).value();
  EXPECT_EQ(ones.at({0, 2, 2}), 9.0);
  EXPECT_EQ(ones.at({0, 0, 0}), 4.0);
  EXPECT_EQ(ones.at({0, 4, 4}), 4.0);
  EXPECT_EQ(ones.at({0, 0, 2}), 6.0);
  EXPECT_THROW(ops::conv2d_lite(tape.constant(map), tape.constant(Tensor({1, 3, 3, 3}))), DimensionError);
}

TEST(Conv2dLite, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  EXPECT_LT(check_op([](const std::vector<Var>& v) { return ops::conv2d_lite(v[0], v[1]); },
                     {random_tensor({2, 4, 5}, rng), random_tensor({3, 2, 3, 3}, rng)}),
            1e-6);
}

TEST(ElementaryOps, GradientsMatchFiniteDifferences) {
  Rng rng(9);
  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
  // Keep relu inputs away from the kink.
  Tensor r = a;
  for (double& v : r.values()) v += v > 0 ? 0.1 : -0.1;
  using V = std::vector<Var>;
  EXPECT_LT(check_op([](const V& v) { return ops::add(v[0], v[1]); }, {a, b}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::sub(v[0], v[1]); }, {a, b}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::mul(v[0], v[1]); }, {a, b}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::scale(v[0], -2.5); }, {a}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::relu(v[0]); }, {r}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::sigmoid(v[0]); }, {a}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::transpose(v[0]); }, {a}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::add_row_bias(v[0], v[1]); }, {a, random_tensor({4}, rng)}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::add_col_bias(v[0], v[1]); }, {a, random_tensor({3}, rng)}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::concat_cols(v[0], v[1]); }, {a, random_tensor({3, 2}, rng)}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::mean(v[0]); }, {a}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::sum(v[0]); }, {a}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::scale_rows(v[0], {0.5, -1.0, 2.0}); }, {a}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::select_rows({true, false, true}, v[0], v[1]); }, {a, b}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::mask_rows(v[0], {true, false, true}); }, {a}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::layer_norm_rows(v[0], v[1], v[2]); },
                     {a, random_tensor({4}, rng), random_tensor({4}, rng)}),
            1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::segment_max(v[0], {0, 2, 0}, 3); }, {a}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::scatter_mean_cols(v[0], {1, -1, 1, 0}, 3); }, {a}), 1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::column_outer(v[0], v[1], 2); },
                     {random_tensor({1, 3, 4}, rng), random_tensor({5, 2}, rng)}),
            1e-6);
  EXPECT_LT(check_op([](const V& v) { return ops::cross_entropy_cols(v[0], {0, 2, 1, 2}); }, {a}), 1e-6);
}

TEST(SegmentMax, EmptySegmentsAreZero) {
  Tape tape;
  Var out = ops::segment_max(tape.constant(Tensor({3, 2}, {1, -5, 3, -7, 2, -6})), {0, 0, 2}, 3);
  EXPECT_EQ(out.value(), Tensor({3, 2}, {3, -5, 0, 0, 2, -6}));
}

TEST(CrossEntropy, UniformLogitsAndLabelRange) {
  Tape tape;
  Var l = ops::cross_entropy_cols(tape.constant(Tensor({4, 3}, 0.0)), {0, 1, 3});
  EXPECT_NEAR(l.value().item(), std::log(4.0), 1e-15);
  EXPECT_THROW(ops::cross_entropy_cols(tape.constant(Tensor({4, 3})), {0, 4, 1}), DataError);
}

TEST(GradCheck, TrivialFunctions) {
  Rng rng(10);
  Tensor x = random_tensor({2, 5}, rng);
  auto sum = [](Tape&, const std::vector<Var>& v) { return ops::sum(v[0]); };
  EXPECT_LT(grad_check(sum, {&x}, 1e-6), 1e-9);
  auto norm = [](Tape&, const std::vector<Var>& v) { return ops::sum(ops::softmax(v[0], 1)); };
  const GradCheckReport r = grad_check_report(norm, {&x});
  EXPECT_LT(std::abs(r.analytic), 1e-12);
  EXPECT_LT(r.max_rel_error, 1e-6);
  auto bad = [](Tape&, const std::vector<Var>& v) { return ops::scale(ops::sum(v[0]), INFINITY); };
  EXPECT_THROW(grad_check(bad, {&x}, 1e-6), NumericError);
  EXPECT_THROW(grad_check(sum, {&x}, 0.0), NumericError);
}

TEST(Tape, ReusedInputsAccumulateOncePerUse) {
  Tape tape;
  Var x = tape.leaf(Tensor({1}, 3.0));
  Var y = ops::add(ops::mul(x, x), x);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(tape.grad(x)[0], 7.0);
}

TEST(Mlp, InitChainsAndBiasesZero) {
  Rng rng(11);
  MlpParams mlp = MlpParams::make("m", {4, 6, 3}, {Activation::relu, Activation::identity}, rng);
  EXPECT_EQ(mlp.in_dim(), 4u);
  EXPECT_EQ(mlp.out_dim(), 3u);
  const double bound = 1.0 / std::sqrt(4.0);
  for (double v : mlp.layers[0].weight.value.values()) EXPECT_LE(std::abs(v), bound);
  for (double v : mlp.layers[1].bias.value.values()) EXPECT_EQ(v, 0.0);
  mlp.layers[1].weight.value = Tensor({5, 3});
  EXPECT_THROW(mlp.validate(), DimensionError);
}

TEST(Mlp, ParameterGradients) {
  Rng rng(12);
  MlpParams mlp = MlpParams::make("m", {3, 5, 2}, {Activation::relu, Activation::identity}, rng);
  for (double& v : mlp.layers[0].bias.value.values()) v = rng.uniform(0.3, 0.6);
  const Tensor x = random_tensor({4, 3}, rng, 0.0, 1.0);
  const Tensor probe = random_tensor({4, 2}, rng);
  std::vector<Parameter*> params;
  mlp.collect(params);
  auto f = [&](Tape& tape) { return ops::dot_const(mlp.forward(tape, tape.constant(x)), probe); };
  EXPECT_LT(grad_check_params(f, params).max_rel_error, 1e-6);
}

TEST(Serialize, TensorRoundTripAndHeader) {
  Rng rng(13);
  Tensor t = random_tensor({2, 3, 4}, rng);
  std::stringstream ss;
  write_tensor(ss, t);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4u + 4u + 3u * 4u + 24u * 8u);
  EXPECT_EQ(bytes.substr(0, 4), "BEVT");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 3u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2u);
  EXPECT_EQ(read_tensor(ss), t);
  std::stringstream junk("XXXX");
  EXPECT_THROW(read_tensor(junk), DataError);
}

TEST(Serialize, CheckpointRoundTrip) {
  Rng rng(14);
  Parameter a("a", random_tensor({3}, rng)), b("b", random_tensor({2, 2}, rng));
  const auto path = std::filesystem::temp_directory_path() / "radbev_ckpt_test.bin";
  save_checkpoint(path.string(), {&a, &b});
  Parameter a2("a", Tensor({3})), b2("b", Tensor({2, 2}));
  load_checkpoint(path.string(), {&a2, &b2});
  EXPECT_EQ(a2.value, a.value);
  EXPECT_EQ(b2.value, b.value);
  Parameter wrong("b", Tensor({4}));
  EXPECT_THROW(load_checkpoint(path.string(), {&wrong}), DataError);
  std::filesystem::remove(path);
}

TEST(Parallel, ChunkedLoopIsDeterministic) {
  set_num_threads(3);
  std::vector<double> out(101);
  parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = std::sin(static_cast<double>(i));
  });
  set_num_threads(1);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], std::sin(static_cast<double>(i)));
}

TEST(Rng, StreamsAreReproducibleAndIndependent) {
  Rng a = Rng::stream(5, 1), b = Rng::stream(5, 1), c = Rng::stream(5, 2);
  EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(Rng::stream(5, 1).next(), c.next());
  Rng n(42);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double v = n.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / 20000, 0.0, 0.03);
  EXPECT_NEAR(s2 / 20000, 1.0, 0.05);
}

}  // namespace
}  // namespace radbev

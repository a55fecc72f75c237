#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "srcn/layers.hpp"
#include "srcn/rng.hpp"

using namespace srcn;

namespace {

ConvBlock table1_block(std::size_t c_in, std::size_t c_out, bool pool, std::mt19937_64& rng) {
  return ConvBlock::create(c_in, c_out, pool, rng);
}

}  // namespace

TEST_CASE("identity-configured conv block reduces to relu") {
  auto rng = make_rng(1);
  auto block = ConvBlock::create(2, 2, false, rng);
  // center-spike kernels mapping channel i to channel i
  std::fill(block.kernels->data.begin(), block.kernels->data.end(), 0.0);
  block.kernels->at(0, 0, 1, 1) = 1.0;
  block.kernels->at(1, 1, 1, 1) = 1.0;
  std::fill(block.bias->data.begin(), block.bias->data.end(), 0.0);
  // infer stats chosen so normalization is exactly the identity: the stored
  // variance compensates for eps
  std::fill(block.bn_running_var->data.begin(), block.bn_running_var->data.end(),
            1.0 - block.bn_eps);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto x = make_tensor({2, 4, 4});
  for (auto& v : x->data) v = u(rng);
  auto y = block.forward(nullptr, x, Mode::Infer);
  REQUIRE(y->shape == x->shape);
  for (std::size_t i = 0; i < x->size(); ++i) {
    CHECK(y->data[i] == Catch::Approx(std::max(0.0, x->data[i])).margin(1e-12));
  }
}

TEST_CASE("conv stack shape trace for the 163x148 configuration") {
  auto rng = make_rng(2);
  std::vector<ConvBlock> blocks;
  blocks.push_back(table1_block(1, 16, true, rng));
  blocks.push_back(table1_block(16, 32, true, rng));
  blocks.push_back(table1_block(32, 64, false, rng));
  blocks.push_back(table1_block(64, 64, false, rng));
  blocks.push_back(table1_block(64, 128, true, rng));

  auto x = make_tensor({1, 163, 148});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : x->data) v = u(rng);
  const std::vector<Shape> expected = {{16, 81, 74},
                                       {32, 40, 37},
                                       {64, 40, 37},
                                       {64, 40, 37},
                                       {128, 20, 18}};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    x = blocks[i].forward(nullptr, x, Mode::Infer);
    CHECK(x->shape == expected[i]);
  }
  auto flat = flatten(nullptr, x);
  CHECK(flat->shape == Shape{46080});

  // trainable parameter total of the conv stack against the closed form
  std::size_t total = 0;
  for (const auto& b : blocks) {
    total += b.kernels->size() + b.bias->size() + b.bn_gamma->size() + b.bn_beta->size();
  }
  const std::size_t closed_form =
      (16 * 10 + 32) + (32 * 145 + 64) + (64 * 289 + 128) + (64 * 577 + 128) + (128 * 577 + 256);
  CHECK(total == closed_form);
  CHECK(total == 134688);
}

TEST_CASE("conv block applies pool before activation and norm") {
  // a block whose conv output contains negatives: pooling first keeps the
  // largest (possibly negative) value, relu then clips it
  auto rng = make_rng(3);
  auto block = ConvBlock::create(1, 1, true, rng);
  std::fill(block.kernels->data.begin(), block.kernels->data.end(), 0.0);
  block.kernels->at(0, 0, 1, 1) = 1.0;
  std::fill(block.bias->data.begin(), block.bias->data.end(), 0.0);
  std::fill(block.bn_running_var->data.begin(), block.bn_running_var->data.end(),
            1.0 - block.bn_eps);
  auto x = tensor_of({1, 2, 2}, {-5.0, -3.0, -4.0, -1.0});
  auto y = block.forward(nullptr, x, Mode::Infer);
  REQUIRE(y->shape == Shape{1, 1, 1});
  CHECK(y->data[0] == 0.0);  // max(-5,-3,-4,-1) = -1 -> relu -> 0
}

TEST_CASE("conv block forward-backward passes finite differences") {
  auto rng = make_rng(4);
  auto block = ConvBlock::create(2, 3, true, rng);
  auto x = make_tensor({4, 2, 6, 6}, true);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : x->data) v = u(rng);
  auto weights = make_tensor({4, 3, 3, 3});
  for (auto& v : weights->data) v = u(rng);
  auto forward = [&](Tape* tape) {
    // fresh running stats per evaluation keep the probe passes from
    // mutating shared state
    ConvBlock probe = block;
    probe.bn_running_mean = make_tensor({3});
    probe.bn_running_var = make_tensor({3});
    auto y = probe.forward(tape, x, Mode::Train);
    return sum_all(tape, hadamard(tape, y, weights));
  };
  auto report = oracle::fd_check({x, block.kernels, block.bias, block.bn_gamma, block.bn_beta},
                                 forward, 1e-5, 40);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("conv block infer mode is bitwise deterministic") {
  auto rng = make_rng(5);
  auto block = ConvBlock::create(1, 4, true, rng);
  auto x = make_tensor({1, 8, 8});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : x->data) v = u(rng);
  auto y1 = block.forward(nullptr, x, Mode::Infer);
  auto y2 = block.forward(nullptr, x, Mode::Infer);
  CHECK(y1->data == y2->data);
}

TEST_CASE("flatten shapes and identity round-trip") {
  auto one = make_tensor({1, 1, 1});
  one->data[0] = 42.0;
  CHECK(flatten(nullptr, one)->shape == Shape{1});

  auto rng = make_rng(6);
  auto x = make_tensor({3, 4, 5});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : x->data) v = u(rng);
  auto flat = flatten(nullptr, x);
  REQUIRE(flat->shape == Shape{60});
  auto back = reshape(nullptr, flat, {3, 4, 5});
  CHECK(back->data == x->data);
}

TEST_CASE("dense layer affine contract") {
  auto rng = make_rng(7);
  auto layer = DenseLayer::create(3, 4, rng);

  std::fill(layer.weight->data.begin(), layer.weight->data.end(), 0.0);
  layer.bias->data = {1, 2, 3, 4};
  auto x = tensor_of({3}, {9, 9, 9});
  CHECK(layer.forward(nullptr, x)->data == std::vector<double>{1, 2, 3, 4});

  auto id = DenseLayer::create(3, 3, rng);
  std::fill(id.weight->data.begin(), id.weight->data.end(), 0.0);
  for (std::size_t i = 0; i < 3; ++i) id.weight->at(i, i) = 1.0;
  std::fill(id.bias->data.begin(), id.bias->data.end(), 0.0);
  auto y = id.forward(nullptr, tensor_of({3}, {5, 6, 7}));
  CHECK(y->data == std::vector<double>{5, 6, 7});

  // random 4x3 case against the matmul route
  auto dense = DenseLayer::create(3, 4, rng);
  auto v = tensor_of({3}, {0.3, -1.2, 2.2});
  auto got = dense.forward(nullptr, v);
  auto col = reshape(nullptr, v, {3, 1});
  auto want = add(nullptr, reshape(nullptr, matmul(nullptr, dense.weight, col), {4}), dense.bias);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(got->data[i] == Catch::Approx(want->data[i]).margin(1e-12));
  }
}

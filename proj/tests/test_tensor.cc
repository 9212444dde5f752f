// Copyright (c) 2026 The BIP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>

#include "common/error.h"
#include "common/rng.h"
#include "doctest.h"
#include "tensor/gradcheck.h"
#include "tensor/optim.h"
#include "tensor/tensor.h"

using namespace bip;

namespace {

std::vector<float> RandomData(int64_t n, Rng* rng, float lo = -1.0f,
                              float hi = 1.0f) {
  std::vector<float> v(n);
  for (auto& x : v) x = rng->NextFloat(lo, hi);
  return v;
}

TRef RandomLeaf(Graph* g, const Shape& s, Rng* rng, bool grad = true) {
  return g->Leaf(s, RandomData(NumElements(s), rng), grad);
}

// grad_check of `loss` against every grad-requiring leaf passed in.
double CheckGrads(Graph* g, TRef loss,
                  const std::vector<std::pair<std::string, TRef>>& params,
                  double tol = 1e-3) {
  auto report = GradCheck(g, loss, params);
  CHECK(report.checked > 0);
  CHECK(report.max_rel_error < tol);
  return report.max_rel_error;
}

}  // namespace

TEST_CASE("matmul shapes") {
  Graph g;
  Rng rng(1);
  auto a = RandomLeaf(&g, {2, 3}, &rng);
  auto b = RandomLeaf(&g, {3, 4}, &rng);
  auto c = g.MatMul(a, b);
  CHECK(g.node(c).shape == Shape{2, 4});
  CHECK_THROWS_AS(g.MatMul(a, a), Error);

  auto ab = RandomLeaf(&g, {5, 2, 3}, &rng);
  auto bb = RandomLeaf(&g, {5, 3, 4}, &rng);
  CHECK(g.node(g.MatMul(ab, bb)).shape == Shape{5, 2, 4});
  CHECK(g.node(g.MatMul(ab, b)).shape == Shape{5, 2, 4});
}

TEST_CASE("softmax of zeros is uniform and rows sum to one") {
  Graph g;
  auto x = g.Leaf({2, 5}, std::vector<float>(10, 0.0f));
  auto y = g.Softmax(x);
  for (float v : g.value(y)) CHECK(v == doctest::Approx(0.2));

  Rng rng(2);
  auto r = RandomLeaf(&g, {4, 7}, &rng, false);
  auto sm = g.Softmax(r);
  const auto& val = g.value(sm);
  for (int row = 0; row < 4; ++row) {
    double sum = 0;
    for (int i = 0; i < 7; ++i) sum += val[row * 7 + i];
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }
}

TEST_CASE("layer_norm output has near-zero row means") {
  Graph g;
  Rng rng(3);
  auto x = RandomLeaf(&g, {6, 16}, &rng, false);
  auto gamma = g.Leaf({16}, std::vector<float>(16, 1.0f));
  auto beta = g.Leaf({16}, std::vector<float>(16, 0.0f));
  auto y = g.LayerNorm(x, gamma, beta);
  const auto& val = g.value(y);
  for (int r = 0; r < 6; ++r) {
    double mean = 0;
    for (int i = 0; i < 16; ++i) mean += val[r * 16 + i];
    CHECK(std::abs(mean / 16) < 1e-5);
  }
}

TEST_CASE("masked_select keeps exactly the flagged elements") {
  Graph g;
  auto x = g.Leaf({5}, {1, 2, 3, 4, 5});
  auto y = g.MaskedSelect(x, {1, 0, 1, 0, 1});
  CHECK(g.node(y).shape == Shape{3});
  CHECK(g.value(y) == std::vector<float>{1, 3, 5});
  CHECK_THROWS_AS(g.MaskedSelect(x, {0, 0, 0, 0, 0}), Error);
  CHECK_THROWS_AS(g.MaskedSelect(x, {1, 1}), Error);
}

TEST_CASE("sum loss gives all-ones gradient") {
  Graph g;
  Rng rng(4);
  auto x = RandomLeaf(&g, {3, 4}, &rng);
  auto loss = g.Sum(x);
  g.Backward(loss);
  for (float v : g.grad(x)) CHECK(v == 1.0f);
}

TEST_CASE("loss against own detached copy has zero gradient") {
  Graph g;
  Rng rng(5);
  auto x = RandomLeaf(&g, {7}, &rng);
  auto loss = g.Mse(x, g.Detach(x));
  CHECK(g.scalar(loss) == 0.0f);
  g.Backward(loss);
  for (float v : g.grad(x)) CHECK(v == 0.0f);
}

TEST_CASE("backward requires a scalar loss and zeroes unreachable params") {
  Graph g;
  Rng rng(6);
  auto x = RandomLeaf(&g, {2, 2}, &rng);
  auto unused = RandomLeaf(&g, {3}, &rng);
  CHECK_THROWS_AS(g.Backward(x), Error);
  auto loss = g.Sum(x);
  g.Backward(loss);
  REQUIRE(g.grad(unused).size() == 3);
  for (float v : g.grad(unused)) CHECK(v == 0.0f);
}

TEST_CASE("every differentiable op passes grad_check on random shapes") {
  GradCheckOptions opt;
  for (uint64_t seed : {11u, 12u, 13u}) {
    Rng rng(seed);
    const int m = 2 + static_cast<int>(rng.NextBelow(3));
    const int k = 2 + static_cast<int>(rng.NextBelow(3));

    {
      Graph g;
      auto a = RandomLeaf(&g, {m, k}, &rng);
      auto b = RandomLeaf(&g, {k, m + 1}, &rng);
      auto t = RandomLeaf(&g, {m + 1, m}, &rng, false);
      auto y = g.TransposeLast2(g.MatMul(a, b));
      CheckGrads(&g, g.Mse(y, t), {{"a", a}, {"b", b}});
    }
    {
      Graph g;  // batched matmul
      auto a = RandomLeaf(&g, {2, m, k}, &rng);
      auto b = RandomLeaf(&g, {2, k, 3}, &rng);
      auto w = RandomLeaf(&g, {3, 2}, &rng);
      auto t = RandomLeaf(&g, {2, m, 2}, &rng, false);
      CheckGrads(&g, g.Mse(g.MatMul(g.MatMul(a, b), w), t),
                 {{"a", a}, {"b", b}, {"w", w}});
    }
    {
      Graph g;  // add modes, mul, scale, exp
      auto x = RandomLeaf(&g, {m, 4}, &rng);
      auto bias = RandomLeaf(&g, {4}, &rng);
      auto row = RandomLeaf(&g, {4}, &rng);
      auto s = RandomLeaf(&g, {1}, &rng);
      auto t = RandomLeaf(&g, {m, 4}, &rng, false);
      auto y = g.Mul(g.Exp(g.Scale(g.Add(x, bias), 0.5)), s);
      y = g.Add(y, g.Mul(g.Reshape(g.Add(x, row), {m, 4}), t));
      CheckGrads(&g, g.Mse(y, t),
                 {{"x", x}, {"bias", bias}, {"row", row}, {"s", s}});
    }
    {
      Graph g;  // softmax + cross entropy + slice/concat
      auto x = RandomLeaf(&g, {3, 6}, &rng);
      auto left = g.Slice(x, 1, 0, 3);
      auto right = g.Slice(x, 1, 3, 3);
      auto logits = g.Concat({right, left}, 1);
      std::vector<int> labels = {1, 0, 4};
      auto ce = g.CrossEntropy(logits, labels);
      auto sm = g.Softmax(x);
      auto t = RandomLeaf(&g, {3, 6}, &rng, false);
      auto loss = g.Add(ce, g.Mse(sm, t));
      CheckGrads(&g, loss, {{"x", x}});
    }
    {
      Graph g;  // layer_norm
      auto x = RandomLeaf(&g, {m, 8}, &rng);
      auto gamma = RandomLeaf(&g, {8}, &rng);
      auto beta = RandomLeaf(&g, {8}, &rng);
      auto t = RandomLeaf(&g, {m, 8}, &rng, false);
      CheckGrads(&g, g.Mse(g.LayerNorm(x, gamma, beta), t),
                 {{"x", x}, {"gamma", gamma}, {"beta", beta}});
    }
    {
      Graph g;  // conv1d
      auto x = RandomLeaf(&g, {2, 5, 3}, &rng);
      auto w = RandomLeaf(&g, {3, 3, 4}, &rng);
      auto b = RandomLeaf(&g, {4}, &rng);
      auto t = RandomLeaf(&g, {2, 5, 4}, &rng, false);
      CheckGrads(&g, g.Mse(g.Conv1d(x, w, b), t),
                 {{"x", x}, {"w", w}, {"b", b}});
    }
    {
      Graph g;  // embedding + mean_pool with mask
      auto table = RandomLeaf(&g, {6, 4}, &rng);
      auto emb = g.Embedding(table, {0, 2, 5, 1, 1, 3}, {2, 3});
      std::vector<uint8_t> mask = {1, 1, 0, 1, 0, 0};
      auto pooled = g.MeanPool(emb, mask);
      auto t = RandomLeaf(&g, {2, 4}, &rng, false);
      CheckGrads(&g, g.Mse(pooled, t), {{"table", table}});
    }
    {
      Graph g;  // l2_normalize + masked_select + mae
      auto x = RandomLeaf(&g, {3, 5}, &rng);
      auto y = g.L2Normalize(x);
      std::vector<uint8_t> mask(15);
      for (int i = 0; i < 15; ++i) mask[i] = (i % 3) != 1;
      auto sel = g.MaskedSelect(y, mask);
      auto t = RandomLeaf(&g, {10}, &rng, false);
      CheckGrads(&g, g.Mae(sel, t), {{"x", x}});
    }
    {
      Graph g;  // repeat_rows (length regulation)
      auto x = RandomLeaf(&g, {3, 4}, &rng);
      auto y = g.RepeatRows(x, {2, 0, 3});
      CHECK(g.node(y).shape == Shape{5, 4});
      auto t = RandomLeaf(&g, {5, 4}, &rng, false);
      CheckGrads(&g, g.Mse(y, t), {{"x", x}});
    }
  }
}

TEST_CASE("l2_normalize rows have unit norm") {
  Graph g;
  Rng rng(21);
  auto x = RandomLeaf(&g, {4, 9}, &rng, false);
  auto y = g.L2Normalize(x);
  const auto& val = g.value(y);
  for (int r = 0; r < 4; ++r) {
    double norm = 0;
    for (int i = 0; i < 9; ++i) norm += double(val[r * 9 + i]) * val[r * 9 + i];
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("three-layer MLP gradients match finite differences") {
  Graph g;
  Rng rng(31);
  auto x = RandomLeaf(&g, {4, 6}, &rng, false);
  auto t = RandomLeaf(&g, {4, 2}, &rng, false);
  std::vector<std::pair<std::string, TRef>> params;
  TRef h = x;
  int dims[4] = {6, 8, 8, 2};
  for (int layer = 0; layer < 3; ++layer) {
    auto w = RandomLeaf(&g, {dims[layer], dims[layer + 1]}, &rng);
    auto b = RandomLeaf(&g, {dims[layer + 1]}, &rng);
    params.emplace_back("w" + std::to_string(layer), w);
    params.emplace_back("b" + std::to_string(layer), b);
    h = g.Add(g.MatMul(h, w), b);
    if (layer < 2) h = g.Relu(h);
  }
  auto report = GradCheck(&g, g.Mse(h, t), params);
  CHECK(report.max_rel_error < 1e-3);
  CHECK(report.checked > 50);
}

TEST_CASE("grad_check of a linear map is accurate to 1e-6") {
  Graph g;
  Rng rng(41);
  auto x = RandomLeaf(&g, {5}, &rng);
  auto w = RandomLeaf(&g, {5}, &rng, false);
  auto loss = g.Sum(g.Mul(x, w));
  auto report = GradCheck(&g, loss, {{"x", x}});
  CHECK(report.max_rel_error < 1e-6);
  CHECK(report.excluded.empty());
}

TEST_CASE("relu probed at a kink reports excluded coordinates") {
  Graph g;
  auto x = g.Leaf({3}, {0.0f, 1.0f, -1.0f}, true);
  auto loss = g.Sum(g.Relu(x));
  auto report = GradCheck(&g, loss, {{"x", x}});
  REQUIRE(report.excluded.size() == 1);
  CHECK(report.excluded[0].first == "x");
  CHECK(report.excluded[0].second == 0);
  CHECK(report.checked == 2);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("forward evaluation is bit-deterministic") {
  auto run = [] {
    Graph g;
    Rng rng(55);
    auto a = RandomLeaf(&g, {8, 8}, &rng);
    auto b = RandomLeaf(&g, {8, 8}, &rng);
    auto y = g.Softmax(g.MatMul(g.Relu(g.MatMul(a, b)), b));
    return g.value(y);
  };
  auto v1 = run();
  auto v2 = run();
  CHECK(std::memcmp(v1.data(), v2.data(), v1.size() * sizeof(float)) == 0);
}

TEST_CASE("adam first step moves a unit-gradient scalar by lr") {
  ParamStore store(7);
  store.GetOrCreate("p", {1}, ParamInit::Const(2.0));
  AdamConfig cfg;
  cfg.lr = 0.1f;
  Adam adam(cfg);

  Graph g;
  GraphBinder binder(&g, &store);
  auto p = binder.P("p", {1}, ParamInit::Const(2.0));
  auto loss = g.Sum(p);  // d loss / d p = 1
  g.Backward(loss);
  adam.Step(g, binder);
  CHECK(store.ValueOf("p")[0] == doctest::Approx(1.9).epsilon(1e-4));
}

TEST_CASE("adam with zero gradients leaves fresh params unchanged") {
  ParamStore store(7);
  Adam adam(AdamConfig{});
  Graph g;
  GraphBinder binder(&g, &store);
  auto p = binder.P("p", {4}, ParamInit::Uniform(4));
  auto q = binder.P("q", {4}, ParamInit::Uniform(4));
  auto before_p = store.ValueOf("p");
  auto loss = g.Sum(g.Mse(q, g.Detach(q)));  // zero grad everywhere
  g.Backward(loss);
  (void)p;
  adam.Step(g, binder);
  CHECK(store.ValueOf("p") == before_p);
}

TEST_CASE("two identical training runs produce identical parameter bytes") {
  auto run = [] {
    ParamStore store(99);
    Adam adam(AdamConfig{});
    for (int step = 0; step < 5; ++step) {
      Graph g;
      GraphBinder binder(&g, &store);
      auto w = binder.P("w", {6, 3}, ParamInit::Uniform(6));
      Rng rng(1000 + step);
      auto x = RandomLeaf(&g, {4, 6}, &rng, false);
      auto t = RandomLeaf(&g, {4, 3}, &rng, false);
      auto loss = g.Mse(g.MatMul(x, w), t);
      g.Backward(loss);
      adam.Step(g, binder);
    }
    return store.ValueOf("w");
  };
  auto a = run();
  auto b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

TEST_CASE("param init is independent of creation order") {
  ParamStore s1(5), s2(5);
  s1.GetOrCreate("a", {8}, ParamInit::Uniform(8));
  s1.GetOrCreate("b", {8}, ParamInit::Uniform(8));
  s2.GetOrCreate("b", {8}, ParamInit::Uniform(8));
  s2.GetOrCreate("a", {8}, ParamInit::Uniform(8));
  CHECK(s1.ValueOf("a") == s2.ValueOf("a"));
  CHECK(s1.ValueOf("b") == s2.ValueOf("b"));
}

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

#include "tensor/optim.h"

#include <cmath>

#include "common/error.h"
#include "common/rng.h"

namespace bip {

namespace {

uint64_t Fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<float>& ParamStore::GetOrCreate(const std::string& name,
                                            const Shape& shape,
                                            ParamInit init) {
  auto it = params_.find(name);
  if (it != params_.end()) {
    BIP_CHECK(it->second.shape == shape)
        << "param " << name << " shape changed";
    return it->second.value;
  }
  Param p;
  p.shape = shape;
  p.value.resize(NumElements(shape));
  switch (init.kind) {
    case ParamInit::kUniformFanIn: {
      BIP_CHECK(init.value > 0) << "fan_in for " << name;
      const float bound = 1.0f / std::sqrt(static_cast<float>(init.value));
      Rng rng(seed_ ^ Fnv1a(name));
      for (auto& v : p.value) v = rng.NextFloat(-bound, bound);
      break;
    }
    case ParamInit::kZeros:
      break;
    case ParamInit::kOnes:
      for (auto& v : p.value) v = 1.0f;
      break;
    case ParamInit::kConst:
      for (auto& v : p.value) v = static_cast<float>(init.value);
      break;
  }
  return params_.emplace(name, std::move(p)).first->second.value;
}

const Shape& ParamStore::ShapeOf(const std::string& name) const {
  auto it = params_.find(name);
  BIP_CHECK(it != params_.end()) << "no param " << name;
  return it->second.shape;
}

std::vector<float>& ParamStore::ValueOf(const std::string& name) {
  auto it = params_.find(name);
  BIP_CHECK(it != params_.end()) << "no param " << name;
  return it->second.value;
}

const std::vector<float>& ParamStore::ValueOf(const std::string& name) const {
  auto it = params_.find(name);
  BIP_CHECK(it != params_.end()) << "no param " << name;
  return it->second.value;
}

std::vector<std::string> ParamStore::Names() const {
  std::vector<std::string> names;
  for (const auto& [name, p] : params_) {
    (void)p;
    names.push_back(name);
  }
  return names;
}

void ParamStore::SetValue(const std::string& name, const Shape& shape,
                          std::vector<float> value) {
  BIP_CHECK(NumElements(shape) == static_cast<int64_t>(value.size()))
      << "value size for " << name;
  params_[name] = Param{shape, std::move(value)};
}

TRef GraphBinder::P(const std::string& name, const Shape& shape,
                    ParamInit init) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return {graph_, it->second};
  auto& value = store_->GetOrCreate(name, shape, init);
  TRef leaf = graph_->Leaf(shape, value, /*requires_grad=*/true);
  bound_[name] = leaf.id;
  return leaf;
}

void Adam::Step(const Graph& graph, const GraphBinder& binder) {
  ++t_;
  const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
  for (const auto& [name, node_id] : binder.bound()) {
    const Node& node = graph.node(node_id);
    BIP_CHECK(!node.grad.empty()) << "no grad for " << name << "; run Backward";
    auto& value = binder.store()->ValueOf(name);  // NOLINT: non-const store
    auto& mom = state_[name];
    if (mom.m.empty()) {
      mom.m.assign(value.size(), 0.0f);
      mom.v.assign(value.size(), 0.0f);
    }
    for (size_t i = 0; i < value.size(); ++i) {
      const float g = node.grad[i];
      mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0f - cfg_.beta1) * g;
      mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0f - cfg_.beta2) * g * g;
      const float mhat = mom.m[i] / bc1;
      const float vhat = mom.v[i] / bc2;
      value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace bip

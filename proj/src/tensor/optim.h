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

#ifndef BIP_TENSOR_OPTIM_H_
#define BIP_TENSOR_OPTIM_H_

#include <map>
#include <string>
#include <vector>

#include "tensor/tensor.h"

namespace bip {

struct ParamInit {
  enum Kind { kUniformFanIn, kZeros, kOnes, kConst } kind = kZeros;
  double value = 0;  // fan_in for kUniformFanIn, constant for kConst

  static ParamInit Uniform(double fan_in) { return {kUniformFanIn, fan_in}; }
  static ParamInit Zeros() { return {kZeros, 0}; }
  static ParamInit Ones() { return {kOnes, 0}; }
  static ParamInit Const(double v) { return {kConst, v}; }
};

// Named parameter values that outlive any single tape. Initialization is
// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) seeded per (store seed, name),
// so values do not depend on creation order.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed) : seed_(seed) {}

  std::vector<float>& GetOrCreate(const std::string& name, const Shape& shape,
                                  ParamInit init);
  bool Has(const std::string& name) const { return params_.count(name) > 0; }
  const Shape& ShapeOf(const std::string& name) const;
  std::vector<float>& ValueOf(const std::string& name);
  const std::vector<float>& ValueOf(const std::string& name) const;

  std::vector<std::string> Names() const;
  void SetValue(const std::string& name, const Shape& shape,
                std::vector<float> value);

 private:
  struct Param {
    Shape shape;
    std::vector<float> value;
  };
  uint64_t seed_;
  std::map<std::string, Param> params_;
};

// Binds store parameters into one tape as grad-requiring leaves and
// remembers the mapping for the optimizer step.
class GraphBinder {
 public:
  GraphBinder(Graph* graph, ParamStore* store) : graph_(graph), store_(store) {}

  TRef P(const std::string& name, const Shape& shape, ParamInit init);
  const std::map<std::string, int>& bound() const { return bound_; }
  ParamStore* store() const { return store_; }
  Graph* graph() const { return graph_; }

 private:
  Graph* graph_;
  ParamStore* store_;
  std::map<std::string, int> bound_;
};

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Standard Adam with bias correction. Parameters bound in the tape are
// updated from their leaf gradients after Backward.
class Adam {
 public:
  explicit Adam(const AdamConfig& cfg) : cfg_(cfg) {}

  void Step(const Graph& graph, const GraphBinder& binder);
  int step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(float lr) { cfg_.lr = lr; }

 private:
  struct Moments {
    std::vector<float> m, v;
  };
  AdamConfig cfg_;
  std::map<std::string, Moments> state_;
  int t_ = 0;
};

}  // namespace bip

#endif  // BIP_TENSOR_OPTIM_H_

//
// Copyright 2026 The Minirec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

#include <memory>

#include "minirec/item_knn.hpp"
#include "minirec/mf_sgd.hpp"
#include "minirec/model.hpp"
#include "minirec/popularity.hpp"

namespace minirec {

/// Fits the model selected by config.kind. Single-threaded and
/// deterministic: identical (train, config, seed) give bit-identical models.
inline std::unique_ptr<RecommenderModel> fit_model(const ModelConfig& config,
                                                   const Dataset& train, std::uint64_t seed) {
  switch (config.kind) {
    case ModelKind::popularity:
      return std::make_unique<PopularityModel>(train, config, seed);
    case ModelKind::item_knn:
      return std::make_unique<ItemKnnModel>(train, config, seed);
    case ModelKind::mf_sgd:
      return std::make_unique<MfSgdModel>(train, config, seed);
  }
  throw ConfigError("model: unknown kind");
}

}  // namespace minirec

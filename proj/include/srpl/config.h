// Copyright 2026 The srpl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SRPL_CONFIG_H_
#define SRPL_CONFIG_H_

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "srpl/trainer.h"

namespace srpl {

// Parses a TOML-style `key = value` file into a TrainConfig, starting from
// `base`. `#` starts a comment; `[section]` lines are accepted and ignored.
//
// Keys: mode, seed, epochs, learning_rate, batch_size, lambda_r, lambda_c,
// lambda_ns, adapter_dims, log_every, logits (inner|distance), syn_centers,
// learn_radius, initial_radius, shared_radius, label_negatives,
// normalize_output, n_syn_classes, extra_enroll (path or array of paths).
TrainConfig ParseTrainConfig(std::string_view text, TrainConfig base = {});
TrainConfig LoadTrainConfig(const std::string& path, TrainConfig base = {});

nlohmann::json TrainConfigToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const nlohmann::json& j);

std::string_view LogitKindName(LogitKind kind);

}  // namespace srpl

#endif  // SRPL_CONFIG_H_

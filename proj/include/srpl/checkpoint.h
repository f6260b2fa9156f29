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

#ifndef SRPL_CHECKPOINT_H_
#define SRPL_CHECKPOINT_H_

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "srpl/trainer.h"

namespace srpl {

// A model directory holds adapter.bin ("SRPLNET1"), one head file chosen by
// mode (head.bin "SRPLHEAD", classifier.bin "SRPLLIN1" or prototypes.bin
// "SRPLPROT"), and model.json with the mode, speaker map and config echo.
void SaveModel(const EnrolledModel& model, const nlohmann::json& config_echo,
               const std::string& dir);
EnrolledModel LoadModel(const std::string& dir);

// "SRPLLIN1": u32 K, D, f64 weight (row-major), f64 bias.
std::string SerializeClassifier(const LinearClassifier& clf);
LinearClassifier DeserializeClassifier(std::string_view bytes);

// "SRPLPROT": u32 K, D, f64 prototypes (row-major).
std::string SerializePrototypes(const Matrix& protos);
Matrix DeserializePrototypes(std::string_view bytes);

}  // namespace srpl

#endif  // SRPL_CHECKPOINT_H_

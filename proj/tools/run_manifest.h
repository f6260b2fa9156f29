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

#ifndef SRPL_TOOLS_RUN_MANIFEST_H_
#define SRPL_TOOLS_RUN_MANIFEST_H_

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace srpl {

// Hex SHA-256 of a file's bytes.
std::string FileSha256(const std::string& path);

// One per command invocation, written next to the outputs.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void SetConfig(nlohmann::json config) { config_ = std::move(config); }
  void AddSeed(uint64_t seed) { seeds_.push_back(seed); }
  void AddInput(const std::string& path);
  void AddOutput(const std::string& path) { outputs_.push_back(path); }

  nlohmann::json ToJson() const;
  void Write(const std::string& path) const;

 private:
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  std::vector<uint64_t> seeds_;
  nlohmann::json inputs_ = nlohmann::json::array();
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace srpl

#endif  // SRPL_TOOLS_RUN_MANIFEST_H_

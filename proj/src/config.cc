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

#include "srpl/config.h"

#include <charconv>
#include <cmath>

#include "srpl/binary_io.h"
#include "srpl/error.h"

namespace srpl {

namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a quoted string.
std::string_view StripComment(std::string_view line) {
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

nlohmann::json ParseScalar(std::string_view v, size_t line_no) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    return std::string(v.substr(1, v.size() - 2));
  }
  if (v == "true") return true;
  if (v == "false") return false;
  double d = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec == std::errc() && ptr == v.data() + v.size()) {
    double ip;
    if (std::modf(d, &ip) == 0.0 && v.find_first_of(".eE") == std::string_view::npos) {
      return static_cast<int64_t>(d);
    }
    return d;
  }
  if (!v.empty() && v.find_first_of(" \t=[]\"") == std::string_view::npos) return std::string(v);
  throw ConfigError("config line " + std::to_string(line_no) + ": cannot parse value '" +
                    std::string(v) + "'");
}

nlohmann::json ParseValue(std::string_view v, size_t line_no) {
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": unterminated array");
    nlohmann::json arr = nlohmann::json::array();
    std::string_view body = v.substr(1, v.size() - 2);
    while (!Trim(body).empty()) {
      const auto comma = body.find(',');
      arr.push_back(ParseScalar(Trim(body.substr(0, comma)), line_no));
      if (comma == std::string_view::npos) break;
      body = body.substr(comma + 1);
    }
    return arr;
  }
  return ParseScalar(v, line_no);
}

double AsDouble(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key " + key + " needs a number");
  return v.get<double>();
}

int64_t AsInt(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config key " + key + " needs an integer");
  return v.get<int64_t>();
}

bool AsBool(const nlohmann::json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config key " + key + " needs true or false");
  return v.get<bool>();
}

std::string AsString(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key " + key + " needs a string");
  return v.get<std::string>();
}

void Apply(const std::string& key, const nlohmann::json& v, TrainConfig* c) {
  if (key == "mode") {
    const auto m = ParseMode(AsString(v, key));
    if (!m) throw ConfigError("unknown mode '" + v.get<std::string>() + "'");
    c->mode = *m;
  } else if (key == "seed") {
    c->seed = static_cast<uint64_t>(AsInt(v, key));
  } else if (key == "epochs") {
    c->hyper.epochs = static_cast<int>(AsInt(v, key));
  } else if (key == "learning_rate") {
    c->hyper.learning_rate = AsDouble(v, key);
  } else if (key == "batch_size") {
    c->hyper.batch_size = static_cast<int>(AsInt(v, key));
  } else if (key == "lambda_r") {
    c->hyper.lambda_r = AsDouble(v, key);
  } else if (key == "lambda_c") {
    c->hyper.lambda_c = AsDouble(v, key);
  } else if (key == "lambda_ns") {
    c->hyper.lambda_ns = AsDouble(v, key);
  } else if (key == "adapter_dims") {
    if (!v.is_array()) throw ConfigError("adapter_dims needs an array");
    c->adapter_dims.clear();
    for (const auto& d : v) c->adapter_dims.push_back(static_cast<int>(AsInt(d, key)));
  } else if (key == "log_every") {
    c->log_every = static_cast<int>(AsInt(v, key));
  } else if (key == "logits") {
    const std::string s = AsString(v, key);
    if (s == "inner") {
      c->loss.logits = LogitKind::kInnerProduct;
    } else if (s == "distance") {
      c->loss.logits = LogitKind::kSquaredDistance;
    } else {
      throw ConfigError("logits must be inner or distance");
    }
  } else if (key == "syn_centers") {
    c->loss.syn_centers = AsBool(v, key);
  } else if (key == "label_negatives") {
    c->loss.label_negatives = AsBool(v, key);
  } else if (key == "shared_radius") {
    c->loss.shared_radius = AsBool(v, key);
  } else if (key == "learn_radius") {
    c->learn_radius = AsBool(v, key);
  } else if (key == "initial_radius") {
    c->initial_radius = AsDouble(v, key);
  } else if (key == "normalize_output") {
    c->normalize_output = AsBool(v, key);
  } else if (key == "n_syn_classes") {
    c->n_syn_classes = static_cast<int>(AsInt(v, key));
  } else if (key == "extra_enroll") {
    c->extra_enroll.clear();
    if (v.is_array()) {
      for (const auto& p : v) c->extra_enroll.push_back(AsString(p, key));
    } else {
      c->extra_enroll.push_back(AsString(v, key));
    }
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

}  // namespace

std::string_view LogitKindName(LogitKind kind) {
  return kind == LogitKind::kInnerProduct ? "inner" : "distance";
}

TrainConfig ParseTrainConfig(std::string_view text, TrainConfig base) {
  size_t line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = Trim(StripComment(text.substr(start, end - start)));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(Trim(line.substr(0, eq)));
    Apply(key, ParseValue(Trim(line.substr(eq + 1)), line_no), &base);
  }
  base.Validate();
  return base;
}

TrainConfig LoadTrainConfig(const std::string& path, TrainConfig base) {
  return ParseTrainConfig(ReadFileBytes(path), std::move(base));
}

nlohmann::json TrainConfigToJson(const TrainConfig& c) {
  return {{"mode", ModeName(c.mode)},
          {"seed", c.seed},
          {"epochs", c.hyper.epochs},
          {"learning_rate", c.hyper.learning_rate},
          {"batch_size", c.hyper.batch_size},
          {"lambda_r", c.hyper.lambda_r},
          {"lambda_c", c.hyper.lambda_c},
          {"lambda_ns", c.hyper.lambda_ns},
          {"adapter_dims", c.adapter_dims},
          {"log_every", c.log_every},
          {"logits", LogitKindName(c.loss.logits)},
          {"syn_centers", c.loss.syn_centers},
          {"shared_radius", c.loss.shared_radius},
          {"label_negatives", c.loss.label_negatives},
          {"learn_radius", c.learn_radius},
          {"initial_radius", c.initial_radius},
          {"normalize_output", c.normalize_output},
          {"n_syn_classes", c.n_syn_classes},
          {"extra_enroll", c.extra_enroll}};
}

TrainConfig TrainConfigFromJson(const nlohmann::json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) Apply(key, value, &c);
  c.Validate();
  return c;
}

}  // namespace srpl

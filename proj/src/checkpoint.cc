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

#include "srpl/checkpoint.h"

#include <filesystem>

#include "srpl/binary_io.h"
#include "srpl/config.h"
#include "srpl/error.h"

namespace srpl {

namespace {

constexpr std::string_view kClassifierMagic = "SRPLLIN1";
constexpr std::string_view kPrototypeMagic = "SRPLPROT";

std::string Join(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

void ReadMatrix(ByteReader* in, Matrix* m) {
  for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = in->F64();
}

void WriteMatrix(ByteWriter* w, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) w->F64(m.data()[i]);
}

std::pair<int, int> ReadShape(ByteReader* in) {
  const int k = static_cast<int>(in->U32());
  const int d = static_cast<int>(in->U32());
  if (k < 1 || d < 1 || k > (1 << 20) || d > (1 << 20)) throw DataError("implausible shape in checkpoint");
  return {k, d};
}

}  // namespace

std::string SerializeClassifier(const LinearClassifier& clf) {
  ByteWriter w;
  w.Magic(kClassifierMagic);
  w.U32(static_cast<uint32_t>(clf.weight.rows()));
  w.U32(static_cast<uint32_t>(clf.weight.cols()));
  WriteMatrix(&w, clf.weight);
  for (Eigen::Index i = 0; i < clf.bias.size(); ++i) w.F64(clf.bias(i));
  return w.bytes();
}

LinearClassifier DeserializeClassifier(std::string_view bytes) {
  ByteReader in(bytes);
  in.ExpectMagic(kClassifierMagic);
  const auto [k, d] = ReadShape(&in);
  LinearClassifier clf;
  clf.weight.resize(k, d);
  clf.bias.resize(k);
  ReadMatrix(&in, &clf.weight);
  for (Eigen::Index i = 0; i < k; ++i) clf.bias(i) = in.F64();
  if (!in.AtEnd()) throw DataError("trailing bytes in classifier checkpoint");
  return clf;
}

std::string SerializePrototypes(const Matrix& protos) {
  ByteWriter w;
  w.Magic(kPrototypeMagic);
  w.U32(static_cast<uint32_t>(protos.rows()));
  w.U32(static_cast<uint32_t>(protos.cols()));
  WriteMatrix(&w, protos);
  return w.bytes();
}

Matrix DeserializePrototypes(std::string_view bytes) {
  ByteReader in(bytes);
  in.ExpectMagic(kPrototypeMagic);
  const auto [k, d] = ReadShape(&in);
  Matrix m(k, d);
  ReadMatrix(&in, &m);
  if (!in.AtEnd()) throw DataError("trailing bytes in prototype checkpoint");
  return m;
}

void SaveModel(const EnrolledModel& model, const nlohmann::json& config_echo,
               const std::string& dir) {
  std::filesystem::create_directories(dir);
  WriteFileBytes(Join(dir, "adapter.bin"), SerializeAdapter(model.adapter));
  std::string head_file;
  switch (model.mode) {
    case Mode::kSrpl:
    case Mode::kSrplPlus:
      head_file = "head.bin";
      WriteFileBytes(Join(dir, "head.bin"), SerializeHead(model.head));
      break;
    case Mode::kSoftmax:
      head_file = "classifier.bin";
      WriteFileBytes(Join(dir, "classifier.bin"), SerializeClassifier(model.classifier));
      break;
    case Mode::kPrototype:
      head_file = "prototypes.bin";
      WriteFileBytes(Join(dir, "prototypes.bin"), SerializePrototypes(model.prototypes));
      break;
  }
  const nlohmann::json manifest = {{"mode", ModeName(model.mode)},
                                   {"speakers", model.speakers},
                                   {"normalize_output", model.normalize_output},
                                   {"logits", LogitKindName(model.logits)},
                                   {"adapter", "adapter.bin"},
                                   {"head", head_file},
                                   {"config", config_echo}};
  WriteFileBytes(Join(dir, "model.json"), manifest.dump(2) + "\n");
}

EnrolledModel LoadModel(const std::string& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ReadFileBytes(Join(dir, "model.json")));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model.json: ") + e.what());
  }
  EnrolledModel m;
  try {
    const auto mode = ParseMode(manifest.at("mode").get<std::string>());
    if (!mode) throw DataError("unknown mode in model.json");
    m.mode = *mode;
    m.speakers = manifest.at("speakers").get<std::vector<std::string>>();
    m.normalize_output = manifest.at("normalize_output").get<bool>();
    m.logits = manifest.at("logits").get<std::string>() == "distance" ? LogitKind::kSquaredDistance
                                                                      : LogitKind::kInnerProduct;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model.json: ") + e.what());
  }
  m.adapter = DeserializeAdapter(ReadFileBytes(Join(dir, "adapter.bin")));
  const int k = m.num_classes();
  const int d = m.adapter.output_dim();
  switch (m.mode) {
    case Mode::kSrpl:
    case Mode::kSrplPlus:
      m.head = DeserializeHead(ReadFileBytes(Join(dir, "head.bin")));
      if (m.head.k_known != k || m.head.dim() != d) throw DataError("head does not match model");
      break;
    case Mode::kSoftmax:
      m.classifier = DeserializeClassifier(ReadFileBytes(Join(dir, "classifier.bin")));
      if (m.classifier.weight.rows() != k || m.classifier.weight.cols() != d) {
        throw DataError("classifier does not match model");
      }
      break;
    case Mode::kPrototype:
      m.prototypes = DeserializePrototypes(ReadFileBytes(Join(dir, "prototypes.bin")));
      if (m.prototypes.rows() != k || m.prototypes.cols() != d) {
        throw DataError("prototypes do not match model");
      }
      break;
  }
  return m;
}

}  // namespace srpl

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

#include "srpl/openset_eval.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include <fmt/format.h>

#include "srpl/error.h"

namespace srpl {

namespace {

void CheckFinite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DataError(std::string("non-finite confidence in ") + what);
  }
}

// Number of entries of the ascending vector that are >= th.
size_t CountAtLeast(const std::vector<double>& sorted, double th) {
  return static_cast<size_t>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), th));
}

}  // namespace

double ClosedAccuracy(const std::vector<ScoredUtterance>& targets) {
  size_t n = 0, correct = 0;
  for (const auto& t : targets) {
    if (t.is_outlier()) continue;
    ++n;
    if (t.predicted_class == t.true_class) ++correct;
  }
  if (n == 0) throw DataError("no target utterances");
  return static_cast<double>(correct) / static_cast<double>(n);
}

double Auc(const std::vector<double>& targets, const std::vector<double>& outliers) {
  if (targets.empty() || outliers.empty()) throw DataError("AUC needs targets and outliers");
  CheckFinite(targets, "targets");
  CheckFinite(outliers, "outliers");
  struct Item {
    double value;
    bool target;
  };
  std::vector<Item> all;
  all.reserve(targets.size() + outliers.size());
  for (double v : targets) all.push_back({v, true});
  for (double v : outliers) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.value < b.value; });

  // Twice the Mann-Whitney U of the targets: 2 per won pair, 1 per tie.
  uint64_t twice_u = 0;
  uint64_t outliers_below = 0;
  for (size_t i = 0; i < all.size();) {
    size_t j = i;
    uint64_t t = 0, o = 0;
    while (j < all.size() && all[j].value == all[i].value) {
      (all[j].target ? t : o) += 1;
      ++j;
    }
    twice_u += 2 * t * outliers_below + t * o;
    outliers_below += o;
    i = j;
  }
  const uint64_t denom = 2 * static_cast<uint64_t>(targets.size()) * outliers.size();
  return static_cast<double>(twice_u) / static_cast<double>(denom);
}

std::vector<CurvePoint> CcrFprCurve(const std::vector<ScoredUtterance>& targets,
                                    const std::vector<ScoredUtterance>& outliers) {
  if (targets.empty() || outliers.empty()) throw DataError("curve needs targets and outliers");
  std::vector<double> correct, out_conf, all;
  for (const auto& t : targets) {
    if (t.predicted_class == t.true_class) correct.push_back(t.confidence);
    all.push_back(t.confidence);
  }
  for (const auto& o : outliers) {
    out_conf.push_back(o.confidence);
    all.push_back(o.confidence);
  }
  CheckFinite(all, "scored utterances");
  std::sort(correct.begin(), correct.end());
  std::sort(out_conf.begin(), out_conf.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<double> thresholds;
  thresholds.reserve(all.size() + 2);
  thresholds.push_back(all.front() - 1.0);
  thresholds.insert(thresholds.end(), all.begin(), all.end());
  thresholds.push_back(all.back() + 1.0);

  const double n_t = static_cast<double>(targets.size());
  const double n_o = static_cast<double>(outliers.size());
  std::vector<CurvePoint> curve;
  curve.reserve(thresholds.size());
  for (double th : thresholds) {
    curve.push_back({th, static_cast<double>(CountAtLeast(correct, th)) / n_t,
                     static_cast<double>(CountAtLeast(out_conf, th)) / n_o});
  }
  return curve;
}

double Oscr(const std::vector<CurvePoint>& curve) {
  if (curve.empty()) throw DataError("malformed curve: empty");
  std::vector<std::pair<double, double>> pts;
  pts.reserve(curve.size());
  for (const auto& p : curve) {
    if (!(p.fpr >= 0.0 && p.fpr <= 1.0 && p.ccr >= 0.0 && p.ccr <= 1.0)) {
      throw DataError("malformed curve: rates outside [0, 1]");
    }
    pts.emplace_back(p.fpr, p.ccr);
  }
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> collapsed;
  for (const auto& p : pts) {
    if (!collapsed.empty() && collapsed.back().first == p.first) {
      collapsed.back().second = std::max(collapsed.back().second, p.second);
    } else {
      collapsed.push_back(p);
    }
  }
  if (collapsed.front().first != 0.0 || collapsed.back().first != 1.0) {
    throw DataError("malformed curve: FPR must span [0, 1]");
  }
  double area = 0.0;
  for (size_t i = 1; i < collapsed.size(); ++i) {
    const auto& [x0, y0] = collapsed[i - 1];
    const auto& [x1, y1] = collapsed[i];
    area += 0.5 * (x1 - x0) * (y0 + y1);
  }
  return area;
}

OpenSetReport MakeReport(const std::vector<ScoredUtterance>& targets,
                         const std::vector<ScoredUtterance>& outliers) {
  OpenSetReport r;
  r.closed_acc = ClosedAccuracy(targets);
  std::vector<double> tc, oc;
  for (const auto& t : targets) tc.push_back(t.confidence);
  for (const auto& o : outliers) oc.push_back(o.confidence);
  r.auc = Auc(tc, oc);
  r.curve = CcrFprCurve(targets, outliers);
  r.oscr = Oscr(r.curve);
  r.n_targets = targets.size();
  r.n_outliers = outliers.size();
  return r;
}

EvalOutput Evaluate(const EnrolledModel& model, const OpenSetSplit& split, const Corpus& corpus,
                    bool emit_embeddings) {
  if (split.test_target_records.empty() || split.test_outlier_records.empty()) {
    throw DataError("split is missing test_target or test_outlier records");
  }
  if (corpus.dimension() != model.input_dim()) {
    throw DataError("dimension mismatch: model expects " + std::to_string(model.input_dim()) +
                    ", corpus has " + std::to_string(corpus.dimension()));
  }
  std::map<std::string, int> class_of;
  for (size_t k = 0; k < model.speakers.size(); ++k) class_of[model.speakers[k]] = static_cast<int>(k);

  auto score = [&](const std::vector<size_t>& records, bool outlier) {
    const auto preds = PredictBatch(model, corpus.Rows(records));
    std::vector<ScoredUtterance> out;
    for (size_t i = 0; i < records.size(); ++i) {
      ScoredUtterance s;
      s.confidence = preds[i].confidence;
      s.predicted_class = preds[i].best_class;
      if (outlier) {
        s.true_class = kOutlierClass;
      } else {
        auto it = class_of.find(corpus[records[i]].speaker_id);
        if (it == class_of.end()) {
          throw DataError("test target speaker " + corpus[records[i]].speaker_id +
                          " is not enrolled in the model");
        }
        s.true_class = it->second;
      }
      out.push_back(s);
    }
    return out;
  };

  EvalOutput out;
  out.report = MakeReport(score(split.test_target_records, false),
                          score(split.test_outlier_records, true));
  if (emit_embeddings) {
    for (auto [records, tag] : {std::pair{&split.test_target_records, Tag::kTestTarget},
                                std::pair{&split.test_outlier_records, Tag::kTestOutlier}}) {
      const Matrix emb = Embed(model, corpus.Rows(*records));
      for (size_t i = 0; i < records->size(); ++i) {
        EmbeddingRecord r;
        r.speaker_id = corpus[(*records)[i]].speaker_id;
        r.utterance_id = corpus[(*records)[i]].utterance_id;
        r.tag = tag;
        for (Eigen::Index c = 0; c < emb.cols(); ++c) {
          r.vector.push_back(static_cast<float>(emb(static_cast<Eigen::Index>(i), c)));
        }
        out.embeddings.push_back(std::move(r));
      }
    }
  }
  return out;
}

OpenSetReport MeanReport(const std::vector<OpenSetReport>& reports) {
  OpenSetReport m;
  if (reports.empty()) return m;
  for (const auto& r : reports) {
    m.auc += r.auc;
    m.oscr += r.oscr;
    m.closed_acc += r.closed_acc;
    m.n_targets += r.n_targets;
    m.n_outliers += r.n_outliers;
  }
  const double n = static_cast<double>(reports.size());
  m.auc /= n;
  m.oscr /= n;
  m.closed_acc /= n;
  return m;
}

nlohmann::json ReportToJson(const OpenSetReport& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.curve) curve.push_back({{"th", p.threshold}, {"ccr", p.ccr}, {"fpr", p.fpr}});
  return {{"auc", r.auc},
          {"oscr", r.oscr},
          {"closed_acc", r.closed_acc},
          {"n_targets", r.n_targets},
          {"n_outliers", r.n_outliers},
          {"curve", curve}};
}

std::string CurveToCsv(const std::vector<CurvePoint>& curve) {
  std::string out = "threshold,ccr,fpr\n";
  for (const auto& p : curve) out += fmt::format("{:.17g},{:.17g},{:.17g}\n", p.threshold, p.ccr, p.fpr);
  return out;
}

std::string EmbeddingsToCsv(const std::vector<EmbeddingRecord>& records) {
  std::string out = "speaker,utt,tag,vector\n";
  for (const auto& r : records) {
    out += fmt::format("{},{},{},", r.speaker_id, r.utterance_id, r.tag ? TagName(*r.tag) : "");
    for (size_t i = 0; i < r.vector.size(); ++i) {
      if (i) out += ' ';
      out += fmt::format("{:.9g}", r.vector[i]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace srpl

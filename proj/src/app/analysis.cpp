// Copyright 2026 The viplab Authors
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

#include "vip/app/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "vip/core/error.hpp"

namespace vip::app {

using core::Matrix;
using nlohmann::json;

Pca pca(const Matrix& x, int k, double tol, int max_iter) {
  require(x.rows() >= 1 && x.cols() >= 1, ErrorCode::kRuntime, "pca: empty input");
  require(k >= 1 && k <= x.cols(), ErrorCode::kRuntime, "pca: bad component count");
  const Eigen::Index n = x.rows(), d = x.cols();
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Matrix xc = x.rowwise() - mu;
  Matrix cov = n > 1 ? Matrix(xc.transpose() * xc / static_cast<double>(n - 1)) : Matrix(Matrix::Zero(d, d));
  Pca out;
  out.total_variance = cov.trace();
  out.components = Matrix::Zero(k, d);
  core::RngStream rng(0, "pca/start");
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      Eigen::VectorXd w = cov * v;
      const double norm = w.norm();
      if (norm < 1e-300) {
        lambda = 0.0;
        break;
      }
      w /= norm;
      if (w.dot(v) < 0) w = -w;
      const double delta = (w - v).norm();
      v = w;
      lambda = v.dot(cov * v);
      if (delta < tol) break;
    }
    // Deterministic sign: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    out.components.row(c) = v.transpose();
    out.variances.push_back(std::max(0.0, lambda));
    cov -= lambda * v * v.transpose();
  }
  out.projections = xc * out.components.transpose();
  return out;
}

LabelTally tally(std::span<const vq::Assignment> assignments, std::span<const int> labels, int codebook_size,
                 int num_labels) {
  require(assignments.size() == labels.size(), ErrorCode::kRuntime, "tally: one label per assignment");
  require(!assignments.empty(), ErrorCode::kRuntime, "analyze_codebook: no samples");
  LabelTally t;
  t.codebook_size = codebook_size;
  t.num_labels = num_labels;
  const std::size_t tokens = assignments[0].codes.size();
  t.hits.assign(tokens, std::vector<std::vector<double>>(static_cast<std::size_t>(codebook_size),
                                                         std::vector<double>(static_cast<std::size_t>(num_labels), 0.0)));
  for (std::size_t s = 0; s < assignments.size(); ++s) {
    require(assignments[s].codes.size() == tokens, ErrorCode::kRuntime, "tally: prompt length varies");
    require(labels[s] >= 0 && labels[s] < num_labels, ErrorCode::kRuntime, "tally: label out of range");
    for (std::size_t i = 0; i < tokens; ++i)
      for (int z : assignments[s].codes[i]) {
        require(z >= 0 && z < codebook_size, ErrorCode::kRuntime, "tally: code out of range");
        t.hits[i][z][labels[s]] += 1.0;
      }
  }
  return t;
}

CodeStats code_stats(int code, std::span<const double> label_hits, double total_draws) {
  CodeStats s;
  s.code = code;
  for (double h : label_hits) s.hits += h;
  s.frequency = total_draws > 0.0 ? s.hits / total_draws : 0.0;
  if (s.hits == 0.0) return s;
  double best = -1.0;
  for (std::size_t l = 0; l < label_hits.size(); ++l) {
    const double p = label_hits[l] / s.hits;
    s.label_distribution.push_back(p);
    if (p > 0.0) s.entropy -= p * std::log(p);
    if (p > best) {
      best = p;
      s.dedication = static_cast<int>(l);
    }
  }
  return s;
}

CodebookReport build_report(const LabelTally& t, const Matrix& codebook, std::vector<std::string> label_names) {
  require(codebook.rows() == t.codebook_size, ErrorCode::kRuntime, "report: codebook size mismatch");
  CodebookReport r;
  r.labels = std::move(label_names);
  const int K = t.codebook_size, L = t.num_labels;
  std::vector<std::vector<double>> global(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(L), 0.0));
  double total = 0.0;
  for (const auto& tok : t.hits)
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < L; ++l) {
        global[k][l] += tok[k][l];
        total += tok[k][l];
      }
  for (int k = 0; k < K; ++k) r.codes.push_back(code_stats(k, global[k], total));

  std::vector<int> chosen;
  for (std::size_t i = 0; i < t.hits.size(); ++i) {
    TokenSelection sel;
    sel.token = static_cast<int>(i);
    std::vector<CodeStats> stats;
    for (int k = 0; k < K; ++k) stats.push_back(code_stats(k, t.hits[i][k], 0.0));
    for (int l = 0; l < L; ++l) {
      int best = -1;
      for (const auto& s : stats) {
        if (s.dedication != l) continue;
        if (best < 0 || s.entropy < stats[best].entropy) best = s.code;
      }
      if (best < 0) continue;
      sel.codes.push_back(best);
      sel.labels.push_back(l);
      if (std::find(chosen.begin(), chosen.end(), best) == chosen.end()) chosen.push_back(best);
    }
    r.selections.push_back(std::move(sel));
  }
  std::sort(chosen.begin(), chosen.end());
  r.pca_codes = chosen;
  if (!chosen.empty()) {
    Matrix pts(static_cast<Eigen::Index>(chosen.size()), codebook.cols());
    for (std::size_t j = 0; j < chosen.size(); ++j) pts.row(static_cast<Eigen::Index>(j)) = codebook.row(chosen[j]);
    r.pca_coordinates = pca(pts, std::min<int>(2, static_cast<int>(codebook.cols()))).projections;
  }
  return r;
}

CodebookReport analyze_codebook(const prompt::PromptModel& model, std::span<const tasks::TextSample> samples,
                                std::uint64_t seed) {
  const vq::Codebook* cb = model.codebook();
  require(cb != nullptr, ErrorCode::kInvalidArtifact, "analyze-codebook: the checkpoint is not a VIP model");
  require(!samples.empty(), ErrorCode::kRuntime, "analyze-codebook: no samples");
  std::map<int, int> label_index;
  for (const auto& s : samples) label_index.emplace(s.target.at(0), 0);
  std::vector<std::string> names;
  int next = 0;
  for (auto& [id, idx] : label_index) {
    idx = next++;
    names.push_back(model.lm().vocab().symbol(id));
  }
  core::RngStream sampling(seed, "sampling/analysis");
  std::vector<vq::Assignment> assignments;
  std::vector<int> labels;
  for (const auto& s : samples) {
    const Matrix pc = model.prompt_representation(s.content());
    assignments.push_back(cb->quantize(pc, model.config().quantizer.samples, sampling).second);
    labels.push_back(label_index.at(s.target[0]));
  }
  const auto t = tally(assignments, labels, cb->size(), static_cast<int>(names.size()));
  return build_report(t, cb->embeddings(), std::move(names));
}

json report_to_json(const CodebookReport& r) {
  json codes = json::array();
  for (const auto& c : r.codes) {
    if (c.hits == 0.0) continue;
    codes.push_back({{"code", c.code},
                     {"hits", c.hits},
                     {"frequency", c.frequency},
                     {"label_distribution", c.label_distribution},
                     {"entropy", c.entropy},
                     {"dedication", r.labels.at(static_cast<std::size_t>(c.dedication))}});
  }
  json sel = json::array();
  for (const auto& s : r.selections) {
    json picks = json::array();
    for (std::size_t j = 0; j < s.codes.size(); ++j)
      picks.push_back({{"code", s.codes[j]}, {"label", r.labels.at(static_cast<std::size_t>(s.labels[j]))}});
    sel.push_back({{"token", s.token}, {"codes", picks}});
  }
  json pts = json::array();
  for (std::size_t j = 0; j < r.pca_codes.size(); ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    pts.push_back({{"code", r.pca_codes[j]},
                   {"x", r.pca_coordinates(row, 0)},
                   {"y", r.pca_coordinates.cols() > 1 ? r.pca_coordinates(row, 1) : 0.0}});
  }
  return json{{"format", "viplab-codebook-report"},
              {"version", 1},
              {"labels", r.labels},
              {"codes", codes},
              {"selected", sel},
              {"pca", pts}};
}

json export_codebook(const vq::Codebook& cb, const json& config) {
  json vectors = json::array();
  for (Eigen::Index k = 0; k < cb.embeddings().rows(); ++k) {
    std::vector<double> row(static_cast<std::size_t>(cb.dim()));
    for (int j = 0; j < cb.dim(); ++j) row[j] = cb.embeddings()(k, j);
    vectors.push_back(row);
  }
  return json{{"format", "viplab-codebook"},
              {"version", 1},
              {"K", cb.size()},
              {"d", cb.dim()},
              {"temperature", cb.temperature()},
              {"decay", cb.decay()},
              {"mode", cb.mode() == vq::CodebookMode::kShared ? "shared" : "dedicated"},
              {"vectors", vectors},
              {"counts", cb.counts()},
              {"config", config}};
}

std::pair<Matrix, std::vector<double>> import_codebook(const json& j) {
  require(j.is_object() && j.value("format", "") == "viplab-codebook" && j.value("version", 0) == 1,
          ErrorCode::kInvalidArtifact, "codebook: not a viplab codebook export");
  try {
    const int K = j.at("K").get<int>(), d = j.at("d").get<int>();
    Matrix e(K, d);
    const auto& rows = j.at("vectors");
    require(static_cast<int>(rows.size()) == K, ErrorCode::kInvalidArtifact, "codebook: K does not match vectors");
    for (int k = 0; k < K; ++k) {
      const auto row = rows[k].get<std::vector<double>>();
      require(static_cast<int>(row.size()) == d, ErrorCode::kInvalidArtifact, "codebook: row width mismatch");
      for (int c = 0; c < d; ++c) e(k, c) = row[c];
    }
    auto counts = j.at("counts").get<std::vector<double>>();
    require(static_cast<int>(counts.size()) == K, ErrorCode::kInvalidArtifact, "codebook: count length mismatch");
    return {std::move(e), std::move(counts)};
  } catch (const json::exception& ex) {
    fail(ErrorCode::kInvalidArtifact, std::string("codebook: malformed: ") + ex.what());
  }
}

}  // namespace vip::app

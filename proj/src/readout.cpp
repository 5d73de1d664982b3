// Copyright 2026 the lser authors
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

#include "readout.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "errors.hpp"
#include "hash.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace lser {

namespace {

// Fixes the sign of each component row so its largest-magnitude entry is
// positive; ties resolve to the first such entry.
void fix_component_signs(Eigen::MatrixXd& components) {
  for (Eigen::Index r = 0; r < components.rows(); ++r) {
    Eigen::Index best = 0;
    components.row(r).cwiseAbs().maxCoeff(&best);
    if (components(r, best) < 0.0) components.row(r) = -components.row(r);
  }
}

// Deterministic orthonormal completion for rank-deficient directions: the
// standard basis vector least covered by the rows found so far, reorthogonalized.
Eigen::VectorXd complete_direction(const Eigen::MatrixXd& components,
                                   Eigen::Index filled) {
  const Eigen::Index d = components.cols();
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::VectorXd candidate = Eigen::VectorXd::Unit(d, j);
    for (Eigen::Index r = 0; r < filled; ++r) {
      candidate -= components.row(r).dot(candidate) * components.row(r).transpose();
    }
    const double norm = candidate.norm();
    if (norm > 1e-6) return candidate / norm;
  }
  fail(Errc::internal, "orthonormal completion failed");
}

}  // namespace

PcaModel pca_fit(const Eigen::MatrixXd& states, int k) {
  const Eigen::Index n = states.rows();
  const Eigen::Index d = states.cols();
  if (n < 2) fail(Errc::bad_argument, "PCA needs at least two samples");
  if (k < 1 || k > std::min(n, d)) {
    fail(Errc::bad_argument, "PCA component count " + std::to_string(k) +
                                 " outside [1, min(n, d)] = [1, " +
                                 std::to_string(std::min(n, d)) + "]");
  }

  PcaModel model;
  model.mean = states.colwise().mean();
  const Eigen::MatrixXd centered = states.rowwise() - model.mean.transpose();

  model.components.resize(k, d);
  model.eigenvalues.resize(k);
  if (n >= d) {
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    for (int i = 0; i < k; ++i) {
      model.eigenvalues(i) = solver.eigenvalues()(d - 1 - i);
      model.components.row(i) = solver.eigenvectors().col(d - 1 - i).transpose();
    }
  } else {
    // Gram-matrix route, exact for the nonzero spectrum and much cheaper
    // when there are fewer samples than dimensions.
    const Eigen::MatrixXd gram =
        centered * centered.transpose() / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    const double lambda_max = std::max(solver.eigenvalues().maxCoeff(), 0.0);
    for (int i = 0; i < k; ++i) {
      const double lambda = solver.eigenvalues()(n - 1 - i);
      if (lambda > 1e-12 * std::max(lambda_max, 1e-300)) {
        model.eigenvalues(i) = lambda;
        const Eigen::VectorXd w =
            centered.transpose() * solver.eigenvectors().col(n - 1 - i);
        model.components.row(i) =
            (w / std::sqrt(lambda * static_cast<double>(n - 1))).transpose();
      } else {
        // Centered data has rank at most n-1; pad the remaining requested
        // directions deterministically with zero variance.
        model.eigenvalues(i) = 0.0;
        model.components.row(i) = complete_direction(model.components, i);
      }
    }
  }
  fix_component_signs(model.components);
  return model;
}

Eigen::VectorXd pca_transform(const PcaModel& model,
                              const Eigen::VectorXd& state) {
  if (state.size() != model.mean.size()) {
    fail(Errc::dimension_mismatch,
         "state length " + std::to_string(state.size()) +
             " does not match PCA dimension " + std::to_string(model.mean.size()));
  }
  return model.components * (state - model.mean);
}

Eigen::VectorXd fuse(const Eigen::VectorXd& vt_projection,
                     const Eigen::VectorXd& src_projection) {
  Eigen::VectorXd out(vt_projection.size() + src_projection.size());
  if (vt_projection.size() > 0) out.head(vt_projection.size()) = vt_projection;
  if (src_projection.size() > 0) out.tail(src_projection.size()) = src_projection;
  return out;
}

LdaModel lda_fit(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                 double shrinkage) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    fail(Errc::dimension_mismatch, "one label per feature row required");
  }
  if (d < 1) fail(Errc::bad_argument, "empty feature vectors");

  std::map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < n; ++i) {
    by_class[labels[static_cast<std::size_t>(i)]].push_back(i);
  }
  if (by_class.size() < 2) {
    fail(Errc::bad_argument, "LDA needs at least two classes present");
  }
  for (const auto& [cls, idx] : by_class) {
    if (idx.size() < 2) {
      fail(Errc::bad_argument, "class " + std::to_string(cls) +
                                   " has fewer than two samples");
    }
  }

  LdaModel model;
  const auto n_classes = static_cast<Eigen::Index>(by_class.size());
  model.classes.reserve(static_cast<std::size_t>(n_classes));
  model.means.resize(n_classes, d);
  model.log_priors.resize(n_classes);
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  Eigen::Index row = 0;
  for (const auto& [cls, idx] : by_class) {
    model.classes.push_back(cls);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i : idx) mean += features.row(i).transpose();
    mean /= static_cast<double>(idx.size());
    model.means.row(row) = mean.transpose();
    model.log_priors(row) =
        std::log(static_cast<double>(idx.size()) / static_cast<double>(n));
    for (Eigen::Index i : idx) {
      const Eigen::VectorXd c = features.row(i).transpose() - mean;
      scatter.noalias() += c * c.transpose();
    }
    ++row;
  }

  Eigen::MatrixXd cov = scatter / static_cast<double>(n - n_classes);
  const double trace = cov.trace();
  if (!(trace > 0.0)) {
    fail(Errc::bad_argument, "degenerate training set (all samples identical)");
  }
  cov = (1.0 - shrinkage) * cov +
        shrinkage * (trace / static_cast<double>(d)) *
            Eigen::MatrixXd::Identity(d, d);
  model.covariance = cov;

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    fail(Errc::bad_argument, "within-class covariance is not positive definite");
  }
  model.weights.resize(n_classes, d);
  model.bias.resize(n_classes);
  for (Eigen::Index c = 0; c < n_classes; ++c) {
    const Eigen::VectorXd w = llt.solve(model.means.row(c).transpose());
    model.weights.row(c) = w.transpose();
    model.bias(c) = -0.5 * model.means.row(c).dot(w) + model.log_priors(c);
  }
  return model;
}

int lda_predict(const LdaModel& model, const Eigen::VectorXd& features) {
  if (features.size() != model.weights.cols()) {
    fail(Errc::dimension_mismatch,
         "feature length " + std::to_string(features.size()) +
             " does not match LDA dimension " +
             std::to_string(model.weights.cols()));
  }
  const Eigen::VectorXd scores = model.weights * features + model.bias;
  Eigen::Index best = 0;
  double best_score = scores(0);
  for (Eigen::Index c = 1; c < scores.size(); ++c) {
    if (scores(c) > best_score) {  // strict: ties keep the lowest class id
      best_score = scores(c);
      best = c;
    }
  }
  return model.classes[static_cast<std::size_t>(best)];
}

std::vector<double> EvaluationReport::confusion_row_percent() const {
  std::vector<double> out(confusion_counts.size(), 0.0);
  for (int r = 0; r < n_classes; ++r) {
    std::int64_t total = 0;
    for (int c = 0; c < n_classes; ++c) total += confusion(r, c);
    if (total == 0) continue;
    for (int c = 0; c < n_classes; ++c) {
      out[static_cast<std::size_t>(r) * static_cast<std::size_t>(n_classes) +
          static_cast<std::size_t>(c)] =
          100.0 * static_cast<double>(confusion(r, c)) /
          static_cast<double>(total);
    }
  }
  return out;
}

namespace {

Eigen::MatrixXd gather_states(const std::vector<UtteranceFeatures>& features,
                              const std::vector<int>& indices, bool vocal_tract) {
  const auto pick = [&](int i) -> const std::vector<double>& {
    const auto& f = features[static_cast<std::size_t>(i)];
    return vocal_tract ? f.vt_state : f.src_state;
  };
  if (indices.empty()) fail(Errc::bad_argument, "empty training set");
  const auto d = static_cast<Eigen::Index>(pick(indices.front()).size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()), d);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& s = pick(indices[r]);
    if (static_cast<Eigen::Index>(s.size()) != d) {
      fail(Errc::dimension_mismatch, "inconsistent state lengths");
    }
    out.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Eigen::VectorXd>(s.data(), d).transpose();
  }
  return out;
}

struct FoldSplit {
  std::vector<int> train;
  std::vector<int> test;
};

// One stratified 90/10-style draw. Groups with very few members keep at
// least two training samples.
FoldSplit draw_split(const std::vector<UtteranceFeatures>& features,
                     double test_fraction, Rng& rng) {
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const int g = f.strat_group >= 0 ? f.strat_group : f.label;
    groups[g].push_back(static_cast<int>(i));
  }
  FoldSplit split;
  for (auto& [g, idx] : groups) {
    rng.shuffle(idx);
    auto n_test = static_cast<std::size_t>(
        std::lround(test_fraction * static_cast<double>(idx.size())));
    if (idx.size() >= 2 && idx.size() - n_test < 2) n_test = idx.size() - 2;
    if (idx.size() < 2) n_test = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < n_test ? split.test : split.train).push_back(idx[i]);
    }
  }
  if (split.test.empty() && !split.train.empty()) {
    // Degenerate tiny dataset: move one training sample over.
    split.test.push_back(split.train.back());
    split.train.pop_back();
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

bool train_covers_all_labels(const std::vector<UtteranceFeatures>& features,
                             const std::vector<int>& train) {
  std::map<int, int> needed;
  for (const auto& f : features) needed[f.label] = 0;
  for (int i : train) ++needed[features[static_cast<std::size_t>(i)].label];
  for (const auto& [label, count] : needed) {
    if (count == 0) return false;
  }
  return true;
}

}  // namespace

FoldModels fit_fold(const std::vector<UtteranceFeatures>& features,
                    const std::vector<int>& train_indices, int k_vt, int k_src,
                    double shrinkage) {
  if (k_vt <= 0 && k_src <= 0) {
    fail(Errc::bad_argument, "at least one reservoir must contribute components");
  }
  FoldModels models;
  if (k_vt > 0) {
    models.pca_vt = pca_fit(gather_states(features, train_indices, true), k_vt);
  }
  if (k_src > 0) {
    models.pca_src = pca_fit(gather_states(features, train_indices, false), k_src);
  }

  Eigen::MatrixXd fused(static_cast<Eigen::Index>(train_indices.size()),
                        (k_vt > 0 ? k_vt : 0) + (k_src > 0 ? k_src : 0));
  std::vector<int> labels;
  labels.reserve(train_indices.size());
  for (std::size_t r = 0; r < train_indices.size(); ++r) {
    const auto& f = features[static_cast<std::size_t>(train_indices[r])];
    fused.row(static_cast<Eigen::Index>(r)) =
        project_features(models, f).transpose();
    labels.push_back(f.label);
  }
  models.lda = lda_fit(fused, labels, shrinkage);
  return models;
}

Eigen::VectorXd project_features(const FoldModels& models,
                                 const UtteranceFeatures& sample) {
  Eigen::VectorXd vt, src;
  if (models.pca_vt.components.rows() > 0) {
    vt = pca_transform(
        models.pca_vt,
        Eigen::Map<const Eigen::VectorXd>(
            sample.vt_state.data(),
            static_cast<Eigen::Index>(sample.vt_state.size())));
  }
  if (models.pca_src.components.rows() > 0) {
    src = pca_transform(
        models.pca_src,
        Eigen::Map<const Eigen::VectorXd>(
            sample.src_state.data(),
            static_cast<Eigen::Index>(sample.src_state.size())));
  }
  return fuse(vt, src);
}

EvaluationReport cross_validate(const std::vector<UtteranceFeatures>& features,
                                int n_classes,
                                const CrossValidateOptions& options) {
  if (features.empty()) fail(Errc::bad_argument, "empty dataset");
  if (options.n_folds < 1) fail(Errc::bad_argument, "need at least one fold");
  if (!(options.test_fraction > 0.0) || options.test_fraction >= 1.0) {
    fail(Errc::bad_argument, "test fraction must be in (0, 1)");
  }
  for (const auto& f : features) {
    if (f.label < 0 || f.label >= n_classes) {
      fail(Errc::bad_argument, "label outside [0, n_classes)");
    }
  }

  EvaluationReport report;
  report.n_classes = n_classes;
  report.k_vt = options.k_vt;
  report.k_src = options.k_src;
  report.n_utterances = static_cast<int>(features.size());
  report.fold_accuracies.assign(static_cast<std::size_t>(options.n_folds), 0.0);
  report.confusion_counts.assign(
      static_cast<std::size_t>(n_classes) * static_cast<std::size_t>(n_classes),
      0);

  std::vector<std::vector<std::int64_t>> fold_confusion(
      static_cast<std::size_t>(options.n_folds));
  std::vector<std::vector<std::string>> fold_notes(
      static_cast<std::size_t>(options.n_folds));

  parallel_for(
      static_cast<std::size_t>(options.n_folds), options.jobs,
      [&](std::size_t fold) {
        const std::uint64_t fold_seed =
            substream_seed(options.seed, "cv-fold", fold);
        FoldSplit split;
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
          Rng rng(substream_seed(fold_seed, "attempt",
                                 static_cast<std::uint64_t>(attempt)));
          split = draw_split(features, options.test_fraction, rng);
          ok = train_covers_all_labels(features, split.train);
          if (!ok) {
            fold_notes[fold].push_back(
                "fold " + std::to_string(fold) +
                ": training split missed a class, resampled");
          }
        }
        if (!ok) {
          fail(Errc::bad_argument,
               "fold " + std::to_string(fold) +
                   ": could not build a training split covering every class");
        }

        const FoldModels models = fit_fold(features, split.train, options.k_vt,
                                           options.k_src, options.lda_shrinkage);
        auto& confusion = fold_confusion[fold];
        confusion.assign(static_cast<std::size_t>(n_classes) *
                             static_cast<std::size_t>(n_classes),
                         0);
        int correct = 0;
        for (int i : split.test) {
          const auto& sample = features[static_cast<std::size_t>(i)];
          const int predicted =
              lda_predict(models.lda, project_features(models, sample));
          ++confusion[static_cast<std::size_t>(sample.label) *
                          static_cast<std::size_t>(n_classes) +
                      static_cast<std::size_t>(predicted)];
          if (predicted == sample.label) ++correct;
        }
        report.fold_accuracies[fold] =
            static_cast<double>(correct) / static_cast<double>(split.test.size());
      });

  for (const auto& confusion : fold_confusion) {
    for (std::size_t i = 0; i < confusion.size(); ++i) {
      report.confusion_counts[i] += confusion[i];
    }
  }
  for (auto& notes : fold_notes) {
    for (auto& note : notes) report.notes.push_back(std::move(note));
  }

  const double mean =
      std::accumulate(report.fold_accuracies.begin(),
                      report.fold_accuracies.end(), 0.0) /
      static_cast<double>(options.n_folds);
  report.mean_accuracy = mean;
  if (options.n_folds > 1) {
    double ss = 0.0;
    for (double a : report.fold_accuracies) ss += (a - mean) * (a - mean);
    const double sd = std::sqrt(ss / static_cast<double>(options.n_folds - 1));
    report.ci95_half_width = 1.96 * sd / std::sqrt(static_cast<double>(options.n_folds));
  }
  return report;
}

std::vector<SweepCell> sweep_components(
    const std::vector<UtteranceFeatures>& features, int n_classes,
    int k_vt_min, int k_vt_max, int k_src_min, int k_src_max, int stride,
    const CrossValidateOptions& options) {
  if (stride < 1 || k_vt_min < 0 || k_src_min < 0 || k_vt_max < k_vt_min ||
      k_src_max < k_src_min) {
    fail(Errc::bad_argument, "invalid sweep ranges");
  }
  auto axis = [stride](int lo, int hi) {
    std::vector<int> ks{0};  // single-reservoir border
    for (int k = std::max(lo, 1); k <= hi; k += stride) ks.push_back(k);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
  };
  const std::vector<int> vt_axis = axis(k_vt_min, k_vt_max);
  const std::vector<int> src_axis = axis(k_src_min, k_src_max);

  std::vector<std::pair<int, int>> cells;
  for (int kv : vt_axis) {
    for (int ks : src_axis) {
      if (kv == 0 && ks == 0) continue;
      cells.emplace_back(kv, ks);
    }
  }

  std::vector<SweepCell> grid(cells.size());
  parallel_for(cells.size(), options.jobs, [&](std::size_t i) {
    CrossValidateOptions cell_options = options;
    cell_options.k_vt = cells[i].first;
    cell_options.k_src = cells[i].second;
    cell_options.jobs = 1;
    const EvaluationReport r = cross_validate(features, n_classes, cell_options);
    grid[i] = SweepCell{cells[i].first, cells[i].second, r.mean_accuracy,
                        r.ci95_half_width};
  });
  return grid;
}

}  // namespace lser

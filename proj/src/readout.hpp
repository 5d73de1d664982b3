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
//
// Trained readout: per-reservoir PCA, feature fusion, a Gaussian LDA
// classifier, and the repeated random stratified split evaluation.

#ifndef LSER_READOUT_HPP_
#define LSER_READOUT_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace lser {

struct PcaModel {
  Eigen::VectorXd mean;         // d
  Eigen::MatrixXd components;   // k x d, orthonormal rows
  Eigen::VectorXd eigenvalues;  // k, descending sample-covariance variances
};

// Principal axes of the sample covariance (1/(n-1)), descending eigenvalue
// order, sign fixed so each component's largest-magnitude entry is positive.
// Requires 1 <= k <= min(n, d) and n >= 2.
PcaModel pca_fit(const Eigen::MatrixXd& states, int k);

Eigen::VectorXd pca_transform(const PcaModel& model,
                              const Eigen::VectorXd& state);

// Vocal tract projection first, then source.
Eigen::VectorXd fuse(const Eigen::VectorXd& vt_projection,
                     const Eigen::VectorXd& src_projection);

struct LdaModel {
  std::vector<int> classes;    // ascending class ids present in training
  Eigen::MatrixXd means;       // one row per class
  Eigen::MatrixXd covariance;  // pooled within-class, after shrinkage
  Eigen::VectorXd log_priors;
  // Precomputed linear discriminants: score_c(x) = weights.row(c)*x + bias(c).
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

// Pooled within-class covariance (divisor n - n_classes) with shrinkage
// (1-gamma)*S + gamma*trace(S)/d*I, empirical priors, Gaussian discriminants.
LdaModel lda_fit(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                 double shrinkage = 1e-3);

// Argmax of the discriminants; ties break toward the lowest class id.
int lda_predict(const LdaModel& model, const Eigen::VectorXd& features);

// Per-utterance raw reservoir summaries. Either state vector may be empty in
// a single-reservoir ablation. strat_group controls the stratified split and
// defaults to the label.
struct UtteranceFeatures {
  std::vector<double> vt_state;
  std::vector<double> src_state;
  int label = 0;
  int strat_group = -1;  // -1: stratify by label
};

struct CrossValidateOptions {
  int k_vt = 29;
  int k_src = 44;
  int n_folds = 50;
  double test_fraction = 0.1;
  std::uint64_t seed = 1;
  double lda_shrinkage = 1e-3;
  int jobs = 1;  // folds (or sweep cells) run on a bounded pool
};

struct EvaluationReport {
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  double ci95_half_width = 0.0;  // 1.96*stddev/sqrt(n_folds)
  int n_classes = 0;
  std::vector<std::int64_t> confusion_counts;  // row true, column predicted
  int k_vt = 0;
  int k_src = 0;
  int n_utterances = 0;
  std::vector<std::string> notes;  // resampled folds etc.

  std::int64_t confusion(int truth, int predicted) const {
    return confusion_counts[static_cast<std::size_t>(truth) *
                                static_cast<std::size_t>(n_classes) +
                            static_cast<std::size_t>(predicted)];
  }
  // Row-normalized percentages; rows with no test samples stay zero.
  std::vector<double> confusion_row_percent() const;
};

struct FoldModels {
  PcaModel pca_vt;   // empty components when k_vt == 0
  PcaModel pca_src;  // empty components when k_src == 0
  LdaModel lda;
};

// Fits PCA per reservoir and LDA on the fused training projections only.
FoldModels fit_fold(const std::vector<UtteranceFeatures>& features,
                    const std::vector<int>& train_indices, int k_vt, int k_src,
                    double shrinkage);

Eigen::VectorXd project_features(const FoldModels& models,
                                 const UtteranceFeatures& sample);

// Repeated random stratified splits; PCA and LDA are refitted on each
// training portion. A fold whose training part lacks a class is resampled
// (up to 100 draws) and noted in the report.
EvaluationReport cross_validate(const std::vector<UtteranceFeatures>& features,
                                int n_classes,
                                const CrossValidateOptions& options);

struct SweepCell {
  int k_vt = 0;
  int k_src = 0;
  double mean_accuracy = 0.0;
  double ci95_half_width = 0.0;
};

// Full cross_validate at every (k_vt, k_src) pair of the given ranges plus
// the k = 0 single-reservoir borders; the meaningless (0, 0) cell is skipped.
std::vector<SweepCell> sweep_components(
    const std::vector<UtteranceFeatures>& features, int n_classes,
    int k_vt_min, int k_vt_max, int k_src_min, int k_src_max, int stride,
    const CrossValidateOptions& options);

}  // namespace lser

#endif  // LSER_READOUT_HPP_

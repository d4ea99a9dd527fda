#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "skelact/features.hpp"
#include "skelact/matrix.hpp"
#include "skelact/protocols.hpp"
#include "skelact/types.hpp"

namespace skelact {

struct StatsOptions {
  FeatureKind feature = FeatureKind::cov;
  FeatureOptions features;
  // Statistics over cov features use raw (unnormalized) descriptors by
  // default; this z-scores them over the full dataset instead.
  bool zscore_cov = false;
  // Drop single-trial (action, subject) cells from the delta mean
  // instead of scoring them as 1.
  bool exclude_single_trial_cells = false;
  // p_subject: average per-repetition fractions instead of pooling.
  bool per_repetition_p_subject = false;
  int threads = 0;
};

// Trial-by-trial distance matrix in the chosen feature space: Euclidean
// distance between descriptors for cov, the DTW delta for dtw.
// Symmetric, zero diagonal.
Matrix pairwise_distances(const Dataset& ds, const StatsOptions& opts);

struct VariabilityReport {
  FeatureKind feature = FeatureKind::cov;
  // Each statistic is absent when its inputs are degenerate (e.g. no
  // correct predictions for p_subject, no eligible pairs).
  std::optional<double> p_subject;
  std::optional<double> p_inter;
  std::optional<double> p_intra;
  std::optional<double> delta;
  Matrix delta_table;  // actions x subjects; NaN marks invalid cells
  long p_subject_correct = 0;   // pooled correct predictions inspected
  long p_inter_pairs = 0;       // trials with an eligible nearest pair
  long p_intra_pairs = 0;
  long delta_cells = 0;         // cells contributing to the mean
  std::vector<std::string> excluded_actions;   // single-trial actions
  std::vector<std::string> excluded_subjects;  // single-trial subjects
  std::vector<std::string> degenerate_actions; // d_a = 0
  std::string p_subject_note;  // reason when p_subject is absent
};

// Fraction of correctly classified test trials (over cross-validation
// plans) whose nearest training trial shares the subject. Pooled over
// repetitions by default.
std::optional<double> stat_p_subject(const Dataset& ds, const Matrix& dist,
                                     const std::vector<SplitPlan>& cv_plans,
                                     const EvalConfig& eval_cfg,
                                     const FeatureCache& cache,
                                     bool per_repetition, long* correct_count,
                                     std::string* note);

// Fraction of trials whose nearest same-action trial shares the
// subject. Actions with a single trial are excluded and reported.
std::optional<double> stat_p_inter(const Dataset& ds, const Matrix& dist,
                                   long* pair_count,
                                   std::vector<std::string>* excluded);

// Fraction of trials whose nearest same-subject trial has a different
// action. Subjects with a single trial are excluded and reported.
std::optional<double> stat_p_intra(const Dataset& ds, const Matrix& dist,
                                   long* pair_count,
                                   std::vector<std::string>* excluded);

// Normalized diameter gaps: for each action a with diameter d_a > 0 and
// each subject s with trials of a, delta_{a,s} = |d_{a,s} - d_a| / d_a;
// single-trial cells have d_{a,s} = 0, hence delta 1 (or are excluded
// via the option). Returns the uniform mean over valid cells plus the
// full table.
std::optional<double> stat_delta(const Dataset& ds, const Matrix& dist,
                                 bool exclude_single_trial_cells,
                                 Matrix* table, long* cell_count,
                                 std::vector<std::string>* degenerate);

// All four statistics; the SplitConfig/SvmConfig drive the
// cross-validation runs behind p_subject.
VariabilityReport variability_report(const Dataset& ds,
                                     const StatsOptions& opts,
                                     const SplitConfig& split_cfg,
                                     const SvmConfig& svm_cfg);

nlohmann::json variability_report_to_json(const VariabilityReport& report,
                                          const Dataset& ds);
// Table-shaped CSV: one row per dataset, columns = the four statistics.
void variability_report_to_csv(const VariabilityReport& report,
                               const std::string& dataset_name,
                               std::ostream& out);

}  // namespace skelact

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "skelact/features.hpp"
#include "skelact/spd.hpp"
#include "skelact/svm.hpp"
#include "skelact/types.hpp"

namespace skelact {

enum class Strategy { one_subject_out, cross_validation, personalization };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// Deterministic assignment of trials to train/test. Ids are indices
// into the dataset's trial vector, sorted ascending.
struct SplitPlan {
  Strategy strategy = Strategy::cross_validation;
  int repetition = 0;
  int subject_scope = -1;  // dense subject index; -1 when not scoped
  std::vector<int> train_ids;
  std::vector<int> test_ids;
};

struct SplitConfig {
  int reps = 20;
  double train_frac = 2.0 / 3.0;
  std::uint64_t seed = 0;
  // Cross-validation stratifies per subject only by default; this adds
  // per-(subject, action) stratification.
  bool stratify_actions = false;

  void validate() const;
};

// Train count for a group of m trials: ceil(train_frac * m), capped at
// m - 1 so every eligible group contributes at least one test trial.
int train_count_for_group(int m, double train_frac);

// One plan per subject; that subject's trials are the test set.
// Requires >= 2 subjects.
std::vector<SplitPlan> plan_one_subject_out(const Dataset& ds);

// reps plans; within each, every subject's trials are split
// train_frac/rest independently (seeded, deterministic). Requires every
// subject to have >= 2 trials.
std::vector<SplitPlan> plan_cross_validation(const Dataset& ds,
                                             const SplitConfig& cfg);

// Per subject and repetition: that subject's trials only, split per
// action; (subject, action) groups with < 2 trials are dropped and
// reported. Requires at least one eligible group.
std::vector<SplitPlan> plan_personalization(
    const Dataset& ds, const SplitConfig& cfg,
    std::vector<std::pair<std::string, std::string>>* dropped = nullptr);

struct EvalConfig {
  FeatureKind feature = FeatureKind::cov;
  FeatureOptions features;
  SvmConfig svm;
  int threads = 0;
};

// Model fitted on one plan's training ids only: the normalizer (cov)
// and the multiclass SVM. Exposed so tests can check that test trials
// never influence training.
struct PlanModel {
  SvmModel svm;
  Normalizer normalizer;  // cov only
};

// Per-plan seeds derive from the base SVM seed and the plan's position
// so runs are reproducible and plans can be evaluated in parallel.
SvmConfig plan_svm_config(const SvmConfig& base, std::size_t plan_index);

PlanModel train_plan_model(const Dataset& ds, const FeatureCache& cache,
                           const SplitPlan& plan, const EvalConfig& cfg,
                           std::size_t plan_index);

// Predicted dense action ids for plan.test_ids, in order.
std::vector<int> predict_plan(const Dataset& ds, const FeatureCache& cache,
                              const SplitPlan& plan, const PlanModel& model,
                              const EvalConfig& cfg);

struct EvalReport {
  Strategy strategy = Strategy::cross_validation;
  FeatureKind feature = FeatureKind::cov;
  double accuracy_mean = 0.0;  // percent
  double accuracy_std = 0.0;   // percent, population std over units
  // One entry per aggregation unit: repetition (cv, personalization) or
  // subject fold (one-subject-out).
  std::vector<double> per_unit;
  std::vector<std::pair<std::string, double>> per_subject;  // oso folds
  std::vector<int> n_train;  // per unit
  std::vector<int> n_test;   // per unit
  Matrix confusion;          // pooled true x predicted action counts
  std::vector<std::string> action_labels;
};

// Trains and evaluates every plan (in parallel; results are
// scheduling-independent) and aggregates per the strategy: oso averages
// subject folds, cross-validation averages pooled per-repetition
// accuracies, personalization fuses all subjects within a repetition
// before averaging. A training split with a single action class aborts
// with TrainingError naming the plan.
EvalReport run_strategy(const Dataset& ds, const std::vector<SplitPlan>& plans,
                        const EvalConfig& cfg,
                        const FeatureCache* cache = nullptr);

nlohmann::json eval_report_to_json(const EvalReport& report);
void eval_report_to_csv(const EvalReport& report, std::ostream& out);

}  // namespace skelact

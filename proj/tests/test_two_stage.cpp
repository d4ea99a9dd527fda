#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "skelact/errors.hpp"
#include "skelact/synth.hpp"
#include "skelact/two_stage.hpp"

#include "test_util.hpp"

using namespace skelact;
using testutil::make_trial;

namespace {

Dataset synth(int subjects, int actions, int trials, double style,
              double noise, std::uint64_t seed, int tau_min = 12,
              int tau_max = 18) {
  SynthConfig cfg;
  cfg.n_subjects = subjects;
  cfg.n_actions = actions;
  cfg.trials_per_pair = trials;
  cfg.joint_count = 3;
  cfg.frame_count_min = tau_min;
  cfg.frame_count_max = tau_max;
  cfg.subject_style_scale = style;
  cfg.intra_noise_scale = noise;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

// 1-joint trial whose x spread encodes its position in feature space.
Trial spread_trial(const std::string& s, const std::string& a, int k,
                   double spread) {
  return make_trial(s, a, k,
                    {{-spread, 0, 0}, {spread, 0, 0}, {-spread, 0, 0},
                     {spread, 0, 0}});
}

}  // namespace

TEST_CASE("train_two_stage: separable styles identify subjects perfectly") {
  const Dataset ds = synth(2, 3, 4, 2.5, 0.05, 11);
  SplitConfig split;
  split.reps = 1;
  split.seed = 4;
  const auto plans = plan_cross_validation(ds, split);
  TwoStageConfig cfg;
  const FeatureCache cache = build_feature_cache(ds, cfg.feature, cfg.features);
  const TwoStageModel model = train_two_stage(ds, plans[0], cfg, cache);

  // Every subject present in training has an action model.
  std::vector<int> train_subjects;
  for (int t : plans[0].train_ids) train_subjects.push_back(ds.subject_of[t]);
  std::sort(train_subjects.begin(), train_subjects.end());
  train_subjects.erase(
      std::unique(train_subjects.begin(), train_subjects.end()),
      train_subjects.end());
  CHECK(model.subject_ids == train_subjects);
  CHECK(model.action_models.size() == model.subject_ids.size());

  // Subject-SVM training accuracy is 100% on such separated styles.
  const TwoStagePrediction on_train =
      predict_two_stage(ds, model, plans[0].train_ids, cache);
  for (std::size_t i = 0; i < plans[0].train_ids.size(); ++i)
    CHECK(on_train.subject[i] == ds.subject_of[plans[0].train_ids[i]]);
}

TEST_CASE("two-stage: separable synthetic scores 100/100; deterministic") {
  const Dataset ds = synth(3, 3, 4, 2.0, 0.0, 13, 10, 10);
  SplitConfig split;
  split.reps = 3;
  split.seed = 21;
  TwoStageConfig cfg;
  const TwoStageReport a = run_two_stage(ds, split, cfg);
  CHECK(a.subject_mean == 100.0);
  CHECK(a.action_mean == 100.0);
  CHECK(a.misroutes == 0);
  CHECK(a.dominance_violations == 0);

  const TwoStageReport b = run_two_stage(ds, split, cfg);
  CHECK(two_stage_report_to_json(a).dump() ==
        two_stage_report_to_json(b).dump());
}

TEST_CASE("two-stage with dtw features works end to end") {
  const Dataset ds = synth(2, 2, 4, 2.0, 0.0, 17, 10, 10);
  SplitConfig split;
  split.reps = 2;
  split.seed = 5;
  TwoStageConfig cfg;
  cfg.feature = FeatureKind::dtw;
  const TwoStageReport r = run_two_stage(ds, split, cfg);
  CHECK(r.subject_mean == 100.0);
  CHECK(r.action_mean == 100.0);
}

TEST_CASE("two-stage rejects single-subject datasets") {
  const Dataset ds = synth(1, 3, 4, 1.0, 0.1, 19);
  CHECK_THROWS_AS(run_two_stage(ds, {}, {}), DataError);
}

TEST_CASE("subject absent from training: no model, test rejected") {
  const Dataset ds = synth(3, 2, 2, 1.0, 0.1, 23, 10, 10);
  // Hand-built plan: train only subjects 0/1, test includes subject 2.
  SplitPlan plan;
  plan.strategy = Strategy::cross_validation;
  for (int i = 0; i < ds.n_trials(); ++i) {
    if (ds.subject_of[i] < 2) plan.train_ids.push_back(i);
    else plan.test_ids.push_back(i);
  }
  TwoStageConfig cfg;
  const FeatureCache cache = build_feature_cache(ds, cfg.feature, cfg.features);
  const TwoStageModel model = train_two_stage(ds, plan, cfg, cache);
  CHECK(model.subject_ids == std::vector<int>{0, 1});
  CHECK_THROWS_AS(predict_two_stage(ds, model, plan.test_ids, cache),
                  DataError);
}

TEST_CASE("forced misroute lands on a constant model and is counted wrong") {
  // Subject "aa" only performs action "x" (constant predictor). Subject
  // "bb" performs "x" and "y". One test trial is labeled (bb, y) but
  // looks exactly like aa's trials, so stage 1 routes it to aa and the
  // action is necessarily wrong.
  std::vector<Trial> trials;
  for (int k = 0; k < 4; ++k) trials.push_back(spread_trial("aa", "x", k, 1.0));
  for (int k = 0; k < 3; ++k) trials.push_back(spread_trial("bb", "x", k, 5.0));
  for (int k = 0; k < 3; ++k) trials.push_back(spread_trial("bb", "y", k, 9.0));
  trials.push_back(spread_trial("bb", "y", 3, 1.0));  // the impostor
  const Dataset ds = Dataset::assemble("misroute", std::move(trials));

  SplitPlan plan;
  plan.strategy = Strategy::cross_validation;
  for (int i = 0; i < ds.n_trials(); ++i) {
    if (ds.trials[i].subject == "bb" && ds.trials[i].action == "y" &&
        ds.trials[i].trial_index == 3)
      plan.test_ids.push_back(i);
    else
      plan.train_ids.push_back(i);
  }

  TwoStageConfig cfg;
  const FeatureCache cache = build_feature_cache(ds, cfg.feature, cfg.features);
  const TwoStageModel model = train_two_stage(ds, plan, cfg, cache);

  // aa trains on a single action class -> constant predictor.
  const int aa = 0;  // "aa" sorts first
  CHECK(model.action_models[aa].constant_action >= 0);

  const TwoStagePrediction pred =
      predict_two_stage(ds, model, plan.test_ids, cache);
  REQUIRE(pred.subject.size() == 1);
  CHECK(ds.subjects[pred.subject[0]] == "aa");          // misrouted
  CHECK(ds.actions[pred.action[0]] == "x");             // constant model
  CHECK(ds.trials[plan.test_ids[0]].action == "y");     // necessarily wrong
}

TEST_CASE("oracle routing reproduces personalization on the same split") {
  for (int seed = 0; seed < 4; ++seed) {
    const Dataset ds = synth(3, 3, 4, 1.0, 0.2, 100 + seed);
    SplitConfig split;
    split.reps = 2;
    split.seed = 200 + seed;
    TwoStageConfig cfg;
    cfg.svm.seed = seed;
    const FeatureCache cache =
        build_feature_cache(ds, cfg.feature, cfg.features);
    for (const SplitPlan& plan : plan_cross_validation(ds, split)) {
      const TwoStageModel model = train_two_stage(ds, plan, cfg, cache);
      const std::vector<int> oracle =
          predict_actions_oracle_routed(ds, model, plan.test_ids, cache);
      long correct = 0;
      for (std::size_t i = 0; i < plan.test_ids.size(); ++i)
        if (oracle[i] == ds.action_of[plan.test_ids[i]]) ++correct;
      const double oracle_acc =
          100.0 * correct / static_cast<double>(plan.test_ids.size());
      const double pers_acc =
          personalization_accuracy_on_plan(ds, plan, cfg, cache);
      CHECK(oracle_acc == pers_acc);  // exact, not approximate
    }
  }
}

TEST_CASE("oracle equality also holds with per-subject normalizers") {
  const Dataset ds = synth(2, 3, 4, 1.0, 0.2, 301);
  SplitConfig split;
  split.reps = 1;
  split.seed = 77;
  TwoStageConfig cfg;
  cfg.per_subject_normalizers = true;
  const FeatureCache cache = build_feature_cache(ds, cfg.feature, cfg.features);
  const SplitPlan plan = plan_cross_validation(ds, split)[0];
  const TwoStageModel model = train_two_stage(ds, plan, cfg, cache);
  const std::vector<int> oracle =
      predict_actions_oracle_routed(ds, model, plan.test_ids, cache);
  long correct = 0;
  for (std::size_t i = 0; i < plan.test_ids.size(); ++i)
    if (oracle[i] == ds.action_of[plan.test_ids[i]]) ++correct;
  const double oracle_acc =
      100.0 * correct / static_cast<double>(plan.test_ids.size());
  CHECK(oracle_acc == personalization_accuracy_on_plan(ds, plan, cfg, cache));
}

TEST_CASE("run_two_stage: report bookkeeping on noisy data") {
  const Dataset ds = synth(3, 3, 4, 0.3, 0.4, 401);
  SplitConfig split;
  split.reps = 4;
  split.seed = 9;
  TwoStageConfig cfg;
  const TwoStageReport r = run_two_stage(ds, split, cfg);

  REQUIRE(r.per_rep_subject.size() == 4);
  REQUIRE(r.per_rep_action.size() == 4);
  REQUIRE(r.per_rep_oracle.size() == 4);
  for (double v : r.per_rep_subject) {
    CHECK(v >= 0.0);
    CHECK(v <= 100.0);
  }
  // Routed counts cover every test prediction.
  long routed = 0;
  for (const auto& [label, count] : r.routed_counts) routed += count;
  long total = 0;
  for (int n : r.n_test) total += n;
  CHECK(routed == total);
  CHECK(r.misroute_then_correct <= r.misroutes);

  std::ostringstream csv;
  two_stage_report_to_csv(r, ds.name, csv);
  CHECK(csv.str().find("subject-SVM") != std::string::npos);
  CHECK(csv.str().find("action-SVMs") != std::string::npos);
}

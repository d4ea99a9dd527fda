#include <doctest.h>

#include <algorithm>
#include <set>

#include "skelact/errors.hpp"
#include "skelact/protocols.hpp"
#include "skelact/synth.hpp"

#include "test_util.hpp"

using namespace skelact;

namespace {

// Small, cleanly separable dataset: zero noise, zero style.
Dataset toy_dataset(int subjects = 3, int actions = 3, int trials = 3,
                    std::uint64_t seed = 5) {
  SynthConfig cfg;
  cfg.n_subjects = subjects;
  cfg.n_actions = actions;
  cfg.trials_per_pair = trials;
  cfg.joint_count = 2;
  cfg.frame_count_min = 8;
  cfg.frame_count_max = 12;
  cfg.subject_style_scale = 0.0;
  cfg.intra_noise_scale = 0.0;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

void check_partition(const Dataset& ds, const SplitPlan& plan,
                     const std::set<int>& scope) {
  const std::set<int> train = as_set(plan.train_ids);
  const std::set<int> test = as_set(plan.test_ids);
  CHECK(!test.empty());
  for (int t : test) CHECK(train.count(t) == 0);
  std::set<int> all = train;
  all.insert(test.begin(), test.end());
  CHECK(all == scope);
}

}  // namespace

TEST_CASE("plan_one_subject_out: one fold per subject, full partition") {
  const Dataset ds = toy_dataset();
  const auto plans = plan_one_subject_out(ds);
  REQUIRE(plans.size() == 3);

  std::set<int> seen_tests;
  for (const SplitPlan& plan : plans) {
    CHECK(plan.strategy == Strategy::one_subject_out);
    for (int t : plan.test_ids) {
      CHECK(ds.subject_of[t] == plan.subject_scope);
      CHECK(seen_tests.insert(t).second);  // each trial tested exactly once
    }
    for (int t : plan.train_ids) CHECK(ds.subject_of[t] != plan.subject_scope);
    std::set<int> scope;
    for (int i = 0; i < ds.n_trials(); ++i) scope.insert(i);
    check_partition(ds, plan, scope);
  }
  CHECK(static_cast<int>(seen_tests.size()) == ds.n_trials());
}

TEST_CASE("plan_one_subject_out: single subject rejected") {
  SynthConfig cfg;
  cfg.n_subjects = 1;
  cfg.n_actions = 2;
  cfg.trials_per_pair = 2;
  cfg.joint_count = 1;
  const Dataset ds = generate_synthetic(cfg);
  CHECK_THROWS_AS(plan_one_subject_out(ds), DataError);
}

TEST_CASE("train_count_for_group: ceil-for-train capped at m-1") {
  CHECK(train_count_for_group(3, 2.0 / 3.0) == 2);
  CHECK(train_count_for_group(2, 2.0 / 3.0) == 1);  // cap keeps a test trial
  CHECK(train_count_for_group(6, 2.0 / 3.0) == 4);
  CHECK(train_count_for_group(4, 2.0 / 3.0) == 3);
  CHECK(train_count_for_group(5, 0.5) == 3);
}

TEST_CASE("plan_cross_validation: per-subject split sizes and determinism") {
  const Dataset ds = toy_dataset();  // 9 trials per subject
  SplitConfig cfg;
  cfg.reps = 4;
  cfg.seed = 11;
  const auto plans = plan_cross_validation(ds, cfg);
  REQUIRE(plans.size() == 4);

  const auto by_subject = ds.trials_by_subject();
  std::set<int> scope;
  for (int i = 0; i < ds.n_trials(); ++i) scope.insert(i);

  for (const SplitPlan& plan : plans) {
    check_partition(ds, plan, scope);
    // Every subject contributes ceil(2/3 * 9) = 6 train, 3 test.
    for (int s = 0; s < ds.n_subjects(); ++s) {
      int train = 0, test = 0;
      for (int t : plan.train_ids)
        if (ds.subject_of[t] == s) ++train;
      for (int t : plan.test_ids)
        if (ds.subject_of[t] == s) ++test;
      CHECK(train == 6);
      CHECK(test == 3);
    }
  }

  const auto again = plan_cross_validation(ds, cfg);
  for (std::size_t p = 0; p < plans.size(); ++p) {
    CHECK(plans[p].train_ids == again[p].train_ids);
    CHECK(plans[p].test_ids == again[p].test_ids);
  }
  // Repetitions generally differ.
  CHECK(plans[0].train_ids != plans[1].train_ids);
}

TEST_CASE("plan_cross_validation: subject below 2 trials rejected") {
  std::vector<Trial> trials;
  trials.push_back(testutil::make_trial("a", "x", 0, {{0, 0, 0}, {1, 0, 0}}));
  trials.push_back(testutil::make_trial("a", "x", 1, {{0, 0, 0}, {1, 0, 0}}));
  trials.push_back(testutil::make_trial("b", "x", 0, {{0, 0, 1}, {1, 0, 1}}));
  const Dataset ds = Dataset::assemble("tiny", std::move(trials));
  CHECK_THROWS_WITH_AS(plan_cross_validation(ds, {}),
                       doctest::Contains("b"), DataError);
}

TEST_CASE("plan_personalization: drops, scoping, m=2 split") {
  // Subject a: action x with 2 trials, action y with 1 trial (dropped).
  // Subject b: action x with 3 trials.
  std::vector<Trial> trials;
  trials.push_back(testutil::make_trial("a", "x", 0, {{0, 0, 0}, {1, 0, 0}}));
  trials.push_back(testutil::make_trial("a", "x", 1, {{0, 0, 0}, {1, 0, 1}}));
  trials.push_back(testutil::make_trial("a", "y", 0, {{0, 1, 0}, {1, 1, 0}}));
  trials.push_back(testutil::make_trial("b", "x", 0, {{0, 0, 2}, {1, 0, 2}}));
  trials.push_back(testutil::make_trial("b", "x", 1, {{0, 0, 3}, {1, 0, 3}}));
  trials.push_back(testutil::make_trial("b", "x", 2, {{0, 0, 4}, {1, 0, 4}}));
  const Dataset ds = Dataset::assemble("pers", std::move(trials));

  SplitConfig cfg;
  cfg.reps = 2;
  cfg.seed = 3;
  std::vector<std::pair<std::string, std::string>> dropped;
  const auto plans = plan_personalization(ds, cfg, &dropped);

  REQUIRE(dropped.size() == 1);
  CHECK(dropped[0] == std::make_pair(std::string("a"), std::string("y")));
  REQUIRE(plans.size() == 4);  // 2 subjects x 2 reps

  for (const SplitPlan& plan : plans) {
    CHECK(plan.strategy == Strategy::personalization);
    REQUIRE(plan.subject_scope >= 0);
    for (int t : plan.train_ids) CHECK(ds.subject_of[t] == plan.subject_scope);
    for (int t : plan.test_ids) CHECK(ds.subject_of[t] == plan.subject_scope);
    if (ds.subjects[plan.subject_scope] == "a") {
      // m = 2 -> 1 train / 1 test; the dropped action never appears.
      CHECK(plan.train_ids.size() == 1);
      CHECK(plan.test_ids.size() == 1);
      for (int t : plan.train_ids) CHECK(ds.trials[t].action == "x");
      for (int t : plan.test_ids) CHECK(ds.trials[t].action == "x");
    } else {
      CHECK(plan.train_ids.size() == 2);  // ceil(2/3*3) = 2
      CHECK(plan.test_ids.size() == 1);
    }
  }
}

TEST_CASE("plan_personalization: no eligible group rejected") {
  std::vector<Trial> trials;
  trials.push_back(testutil::make_trial("a", "x", 0, {{0, 0, 0}, {1, 0, 0}}));
  trials.push_back(testutil::make_trial("a", "y", 0, {{0, 1, 0}, {1, 1, 0}}));
  const Dataset ds = Dataset::assemble("bad", std::move(trials));
  CHECK_THROWS_AS(plan_personalization(ds, {}), DataError);
}

TEST_CASE("run_strategy: separable synthetic scores 100 on all strategies") {
  // Zero noise, zero style, fixed tau: trials of one action are exact
  // duplicates, so every strategy must be perfect.
  SynthConfig sc;
  sc.n_subjects = 3;
  sc.n_actions = 3;
  sc.trials_per_pair = 3;
  sc.joint_count = 2;
  sc.frame_count_min = 10;
  sc.frame_count_max = 10;
  sc.subject_style_scale = 0.0;
  sc.intra_noise_scale = 0.0;
  sc.seed = 5;
  const Dataset ds = generate_synthetic(sc);
  EvalConfig cfg;
  cfg.threads = 2;
  SplitConfig split;
  split.reps = 3;
  split.seed = 17;

  for (FeatureKind feature : {FeatureKind::cov, FeatureKind::dtw}) {
    cfg.feature = feature;
    const FeatureCache cache =
        build_feature_cache(ds, feature, cfg.features, cfg.threads);
    const EvalReport oso =
        run_strategy(ds, plan_one_subject_out(ds), cfg, &cache);
    const EvalReport cv =
        run_strategy(ds, plan_cross_validation(ds, split), cfg, &cache);
    const EvalReport pers =
        run_strategy(ds, plan_personalization(ds, split), cfg, &cache);
    CHECK(oso.accuracy_mean == 100.0);
    CHECK(cv.accuracy_mean == 100.0);
    CHECK(pers.accuracy_mean == 100.0);
    CHECK(oso.accuracy_std == 0.0);

    // Confusion counts pool every test prediction.
    double total = 0.0;
    for (double v : cv.confusion.data()) total += v;
    double expected = 0.0;
    for (int n : cv.n_test) expected += n;
    CHECK(total == expected);
  }
}

TEST_CASE("run_strategy: per-unit bookkeeping matches the strategy") {
  const Dataset ds = toy_dataset();
  EvalConfig cfg;
  SplitConfig split;
  split.reps = 3;
  split.seed = 2;

  const EvalReport oso = run_strategy(ds, plan_one_subject_out(ds), cfg);
  CHECK(oso.per_unit.size() == 3);  // folds = subjects
  CHECK(oso.per_subject.size() == 3);

  const EvalReport cv =
      run_strategy(ds, plan_cross_validation(ds, split), cfg);
  CHECK(cv.per_unit.size() == 3);  // repetitions
  CHECK(cv.per_subject.empty());

  const EvalReport pers =
      run_strategy(ds, plan_personalization(ds, split), cfg);
  CHECK(pers.per_unit.size() == 3);  // repetitions, subjects fused

  // Personalization trains each classifier on strictly fewer samples
  // than cross-validation does.
  const auto cv_plans = plan_cross_validation(ds, split);
  const auto pers_plans = plan_personalization(ds, split);
  for (const auto& pp : pers_plans)
    for (const auto& cp : cv_plans)
      CHECK(pp.train_ids.size() < cp.train_ids.size());
}

TEST_CASE("run_strategy: single-action training split aborts with diagnostic") {
  SynthConfig cfg;
  cfg.n_subjects = 2;
  cfg.n_actions = 1;
  cfg.trials_per_pair = 3;
  cfg.joint_count = 1;
  const Dataset ds = generate_synthetic(cfg);
  EvalConfig eval_cfg;
  CHECK_THROWS_AS(run_strategy(ds, plan_one_subject_out(ds), eval_cfg),
                  TrainingError);
}

TEST_CASE("run_strategy: identical reports at any thread count") {
  const Dataset ds = toy_dataset(3, 3, 3, 29);
  SplitConfig split;
  split.reps = 2;
  split.seed = 7;

  for (FeatureKind feature : {FeatureKind::cov, FeatureKind::dtw}) {
    EvalConfig c1;
    c1.feature = feature;
    c1.threads = 1;
    EvalConfig c4 = c1;
    c4.threads = 4;
    const auto plans = plan_cross_validation(ds, split);
    const std::string r1 = eval_report_to_json(run_strategy(ds, plans, c1)).dump();
    const std::string r4 = eval_report_to_json(run_strategy(ds, plans, c4)).dump();
    CHECK(r1 == r4);
  }
}

TEST_CASE("no test leakage: mutating test trials leaves the model bit-identical") {
  const Dataset ds = toy_dataset(2, 2, 3, 31);
  SplitConfig split;
  split.reps = 1;
  split.seed = 9;
  const auto plans = plan_cross_validation(ds, split);
  REQUIRE(plans.size() == 1);
  const SplitPlan& plan = plans[0];

  // Perturb every test trial in a copy of the dataset.
  Dataset mutated = ds;
  for (int t : plan.test_ids)
    for (double& v : mutated.trials[t].coords) v += 17.25;

  for (FeatureKind feature : {FeatureKind::cov, FeatureKind::dtw}) {
    EvalConfig cfg;
    cfg.feature = feature;
    const FeatureCache cache_a =
        build_feature_cache(ds, feature, cfg.features, 2);
    const FeatureCache cache_b =
        build_feature_cache(mutated, feature, cfg.features, 2);
    const PlanModel a = train_plan_model(ds, cache_a, plan, cfg, 0);
    const PlanModel b = train_plan_model(mutated, cache_b, plan, cfg, 0);
    CHECK(model_to_json(a.svm).dump() == model_to_json(b.svm).dump());
    CHECK(a.normalizer.mean == b.normalizer.mean);
    CHECK(a.normalizer.std == b.normalizer.std);
  }
}

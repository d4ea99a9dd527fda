#include "skelact/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "skelact/errors.hpp"
#include "skelact/format.hpp"
#include "skelact/rng.hpp"

namespace skelact {

namespace {

constexpr std::uint64_t kTagCv = 0xc1;
constexpr std::uint64_t kTagPers = 0xc2;
constexpr std::uint64_t kTagPlan = 0xc3;

void sort_ids(SplitPlan& plan) {
  std::sort(plan.train_ids.begin(), plan.train_ids.end());
  std::sort(plan.test_ids.begin(), plan.test_ids.end());
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::one_subject_out: return "oso";
    case Strategy::cross_validation: return "cv";
    case Strategy::personalization: return "pers";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "oso") return Strategy::one_subject_out;
  if (name == "cv") return Strategy::cross_validation;
  if (name == "pers") return Strategy::personalization;
  throw ConfigError("unknown strategy \"" + name + "\" (use oso, cv or pers)");
}

void SplitConfig::validate() const {
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw ConfigError("train_frac must lie in (0, 1)");
}

int train_count_for_group(int m, double train_frac) {
  const int k = static_cast<int>(std::ceil(train_frac * m));
  return std::min(m - 1, std::max(1, k));
}

std::vector<SplitPlan> plan_one_subject_out(const Dataset& ds) {
  if (ds.n_subjects() < 2)
    throw DataError("one-subject-out needs at least 2 subjects");
  const auto by_subject = ds.trials_by_subject();

  std::vector<SplitPlan> plans;
  for (int s = 0; s < ds.n_subjects(); ++s) {
    SplitPlan plan;
    plan.strategy = Strategy::one_subject_out;
    plan.repetition = s;  // one fold per subject
    plan.subject_scope = s;
    plan.test_ids = by_subject[s];
    for (int other = 0; other < ds.n_subjects(); ++other)
      if (other != s)
        plan.train_ids.insert(plan.train_ids.end(), by_subject[other].begin(),
                              by_subject[other].end());
    sort_ids(plan);
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<SplitPlan> plan_cross_validation(const Dataset& ds,
                                             const SplitConfig& cfg) {
  cfg.validate();
  const auto by_subject = ds.trials_by_subject();
  for (int s = 0; s < ds.n_subjects(); ++s) {
    if (by_subject[s].size() < 2)
      throw DataError("cross-validation needs >= 2 trials per subject; "
                      "subject " + ds.subjects[s] + " has " +
                      std::to_string(by_subject[s].size()));
  }

  // Optional per-(subject, action) stratification.
  const auto groups_for = [&](int s) {
    std::vector<std::vector<int>> groups;
    if (!cfg.stratify_actions) {
      groups.push_back(by_subject[s]);
    } else {
      std::map<int, std::vector<int>> by_action;
      for (int t : by_subject[s]) by_action[ds.action_of[t]].push_back(t);
      for (auto& [a, ids] : by_action) groups.push_back(std::move(ids));
    }
    return groups;
  };

  std::vector<SplitPlan> plans;
  for (int rep = 0; rep < cfg.reps; ++rep) {
    SplitPlan plan;
    plan.strategy = Strategy::cross_validation;
    plan.repetition = rep;
    for (int s = 0; s < ds.n_subjects(); ++s) {
      for (const auto& group : groups_for(s)) {
        std::vector<int> ids = group;
        Rng rng(derive_seed(cfg.seed, kTagCv, rep, s, ids.front()));
        shuffle(ids, rng);
        const int k = train_count_for_group(static_cast<int>(ids.size()),
                                            cfg.train_frac);
        plan.train_ids.insert(plan.train_ids.end(), ids.begin(),
                              ids.begin() + k);
        plan.test_ids.insert(plan.test_ids.end(), ids.begin() + k, ids.end());
      }
    }
    sort_ids(plan);
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<SplitPlan> plan_personalization(
    const Dataset& ds, const SplitConfig& cfg,
    std::vector<std::pair<std::string, std::string>>* dropped) {
  cfg.validate();
  const auto by_subject = ds.trials_by_subject();

  // Eligible (subject, action) groups; drops reported once.
  std::vector<std::vector<std::vector<int>>> groups(ds.n_subjects());
  bool any_eligible = false;
  for (int s = 0; s < ds.n_subjects(); ++s) {
    std::map<int, std::vector<int>> by_action;
    for (int t : by_subject[s]) by_action[ds.action_of[t]].push_back(t);
    for (auto& [a, ids] : by_action) {
      if (ids.size() < 2) {
        if (dropped) dropped->emplace_back(ds.subjects[s], ds.actions[a]);
        continue;
      }
      groups[s].push_back(std::move(ids));
      any_eligible = true;
    }
  }
  if (!any_eligible)
    throw DataError(
        "personalization: no (subject, action) group has >= 2 trials");

  std::vector<SplitPlan> plans;
  for (int rep = 0; rep < cfg.reps; ++rep) {
    for (int s = 0; s < ds.n_subjects(); ++s) {
      if (groups[s].empty()) continue;
      SplitPlan plan;
      plan.strategy = Strategy::personalization;
      plan.repetition = rep;
      plan.subject_scope = s;
      for (const auto& group : groups[s]) {
        std::vector<int> ids = group;
        Rng rng(derive_seed(cfg.seed, kTagPers, rep, s, ids.front()));
        shuffle(ids, rng);
        const int k = train_count_for_group(static_cast<int>(ids.size()),
                                            cfg.train_frac);
        plan.train_ids.insert(plan.train_ids.end(), ids.begin(),
                              ids.begin() + k);
        plan.test_ids.insert(plan.test_ids.end(), ids.begin() + k, ids.end());
      }
      sort_ids(plan);
      plans.push_back(std::move(plan));
    }
  }
  return plans;
}

SvmConfig plan_svm_config(const SvmConfig& base, std::size_t plan_index) {
  SvmConfig cfg = base;
  cfg.seed = derive_seed(base.seed, kTagPlan, plan_index);
  return cfg;
}

namespace {

std::string plan_label(const Dataset& ds, const SplitPlan& plan) {
  std::string s = strategy_name(plan.strategy) + " rep " +
                  std::to_string(plan.repetition);
  if (plan.subject_scope >= 0)
    s += " subject " + ds.subjects[plan.subject_scope];
  return s;
}

std::vector<int> train_labels(const Dataset& ds, const SplitPlan& plan) {
  std::vector<int> labels;
  labels.reserve(plan.train_ids.size());
  for (int t : plan.train_ids) labels.push_back(ds.action_of[t]);
  return labels;
}

}  // namespace

PlanModel train_plan_model(const Dataset& ds, const FeatureCache& cache,
                           const SplitPlan& plan, const EvalConfig& cfg,
                           std::size_t plan_index) {
  const std::vector<int> labels = train_labels(ds, plan);
  {
    std::vector<int> distinct = labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());
    if (distinct.size() < 2)
      throw TrainingError("training split has a single action class (" +
                          plan_label(ds, plan) + ")");
  }

  const SvmConfig svm_cfg = plan_svm_config(cfg.svm, plan_index);
  PlanModel out;
  if (cfg.feature == FeatureKind::cov) {
    std::vector<std::vector<double>> train_raw;
    train_raw.reserve(plan.train_ids.size());
    for (int t : plan.train_ids) train_raw.push_back(cache.descriptors[t]);
    out.normalizer = fit_normalizer(train_raw, cfg.features.variance_floor);
    std::vector<std::vector<double>> train;
    train.reserve(train_raw.size());
    for (const auto& d : train_raw)
      train.push_back(apply_normalizer(out.normalizer, d));
    out.svm = train_multiclass_linear(train, labels, svm_cfg);
  } else {
    const std::size_t m = plan.train_ids.size();
    Matrix k(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        k(i, j) = i == j
                      ? 0.0
                      : -cache.delta(plan.train_ids[i], plan.train_ids[j]);
    out.svm = train_multiclass_precomputed(k, labels, svm_cfg);
  }
  return out;
}

std::vector<int> predict_plan(const Dataset& ds, const FeatureCache& cache,
                              const SplitPlan& plan, const PlanModel& model,
                              const EvalConfig& cfg) {
  (void)ds;
  if (cfg.feature == FeatureKind::cov) {
    std::vector<std::vector<double>> test;
    test.reserve(plan.test_ids.size());
    for (int t : plan.test_ids)
      test.push_back(apply_normalizer(model.normalizer, cache.descriptors[t]));
    return predict(model.svm, test);
  }
  Matrix rows(plan.test_ids.size(), plan.train_ids.size());
  for (std::size_t i = 0; i < plan.test_ids.size(); ++i)
    for (std::size_t j = 0; j < plan.train_ids.size(); ++j)
      rows(i, j) = -cache.delta(plan.test_ids[i], plan.train_ids[j]);
  return predict_precomputed(model.svm, rows);
}

EvalReport run_strategy(const Dataset& ds, const std::vector<SplitPlan>& plans,
                        const EvalConfig& cfg, const FeatureCache* cache) {
  if (plans.empty()) throw ConfigError("run_strategy: no plans");
  const Strategy strategy = plans.front().strategy;
  for (const SplitPlan& p : plans)
    if (p.strategy != strategy)
      throw ConfigError("run_strategy: plans mix strategies");

  FeatureCache local_cache;
  if (cache == nullptr) {
    local_cache = build_feature_cache(ds, cfg.feature, cfg.features,
                                      cfg.threads);
    cache = &local_cache;
  }

  // Evaluate plans in parallel; all randomness is pre-materialized in
  // the plans and per-plan seeds, so scheduling cannot change results.
  std::vector<std::vector<int>> predictions(plans.size());
  std::exception_ptr first_error;
#ifdef _OPENMP
  const int nt = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
  for (std::size_t p = 0; p < plans.size(); ++p) {
    try {
      PlanModel model = train_plan_model(ds, *cache, plans[p], cfg, p);
      predictions[p] = predict_plan(ds, *cache, plans[p], model, cfg);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  EvalReport report;
  report.strategy = strategy;
  report.feature = cfg.feature;
  report.action_labels = ds.actions;
  report.confusion = Matrix(ds.n_actions(), ds.n_actions(), 0.0);

  for (std::size_t p = 0; p < plans.size(); ++p)
    for (std::size_t i = 0; i < plans[p].test_ids.size(); ++i)
      report.confusion(ds.action_of[plans[p].test_ids[i]],
                       predictions[p][i]) += 1.0;

  const auto plan_correct = [&](std::size_t p) {
    int correct = 0;
    for (std::size_t i = 0; i < plans[p].test_ids.size(); ++i)
      if (predictions[p][i] == ds.action_of[plans[p].test_ids[i]]) ++correct;
    return correct;
  };

  if (strategy == Strategy::one_subject_out) {
    for (std::size_t p = 0; p < plans.size(); ++p) {
      const double acc = 100.0 * plan_correct(p) /
                         static_cast<double>(plans[p].test_ids.size());
      report.per_unit.push_back(acc);
      report.per_subject.emplace_back(ds.subjects[plans[p].subject_scope],
                                      acc);
      report.n_train.push_back(static_cast<int>(plans[p].train_ids.size()));
      report.n_test.push_back(static_cast<int>(plans[p].test_ids.size()));
    }
  } else {
    // Group plans by repetition; pool predictions within a repetition.
    std::map<int, std::vector<std::size_t>> by_rep;
    for (std::size_t p = 0; p < plans.size(); ++p)
      by_rep[plans[p].repetition].push_back(p);
    for (const auto& [rep, idxs] : by_rep) {
      int correct = 0, total = 0, train = 0;
      for (std::size_t p : idxs) {
        correct += plan_correct(p);
        total += static_cast<int>(plans[p].test_ids.size());
        train += static_cast<int>(plans[p].train_ids.size());
      }
      report.per_unit.push_back(100.0 * correct / static_cast<double>(total));
      report.n_train.push_back(train);
      report.n_test.push_back(total);
    }
  }

  report.accuracy_mean = mean_of(report.per_unit);
  report.accuracy_std = population_std(report.per_unit, report.accuracy_mean);
  return report;
}

nlohmann::json eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["strategy"] = strategy_name(report.strategy);
  j["feature"] = feature_name(report.feature);
  j["accuracy_mean_pct"] = report.accuracy_mean;
  j["accuracy_std_pct"] = report.accuracy_std;
  j["per_unit_pct"] = report.per_unit;
  j["n_train"] = report.n_train;
  j["n_test"] = report.n_test;
  if (!report.per_subject.empty()) {
    nlohmann::json per_subject = nlohmann::json::object();
    for (const auto& [label, acc] : report.per_subject) per_subject[label] = acc;
    j["per_subject_pct"] = std::move(per_subject);
  }
  nlohmann::json confusion = nlohmann::json::object();
  for (std::size_t a = 0; a < report.confusion.rows(); ++a) {
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t b = 0; b < report.confusion.cols(); ++b) {
      const double v = report.confusion(a, b);
      if (v > 0) row[report.action_labels[b]] = static_cast<long>(v);
    }
    confusion[report.action_labels[a]] = std::move(row);
  }
  j["confusion"] = std::move(confusion);
  return j;
}

void eval_report_to_csv(const EvalReport& report, std::ostream& out) {
  const bool oso = report.strategy == Strategy::one_subject_out;
  out << "strategy,feature,unit,index,subject,accuracy_pct,n_train,n_test\n";
  for (std::size_t i = 0; i < report.per_unit.size(); ++i) {
    out << strategy_name(report.strategy) << "," << feature_name(report.feature)
        << "," << (oso ? "fold" : "repetition") << "," << i << ","
        << (oso ? report.per_subject[i].first : "") << ","
        << fmt_double(report.per_unit[i]) << "," << report.n_train[i] << ","
        << report.n_test[i] << "\n";
  }
}

}  // namespace skelact

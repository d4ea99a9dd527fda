#include "skelact/two_stage.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "skelact/errors.hpp"
#include "skelact/format.hpp"
#include "skelact/rng.hpp"

namespace skelact {

namespace {

constexpr std::uint64_t kTagSubjectSvm = 0x2501;
constexpr std::uint64_t kTagActionSvm = 0x2502;

std::vector<std::vector<double>> gather_normalized(
    const FeatureCache& cache, const Normalizer& nrm,
    const std::vector<int>& ids) {
  std::vector<std::vector<double>> out;
  out.reserve(ids.size());
  for (int t : ids) out.push_back(apply_normalizer(nrm, cache.descriptors[t]));
  return out;
}

Matrix neg_gram_block(const Matrix& delta, const std::vector<int>& rows,
                      const std::vector<int>& cols) {
  Matrix k(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      k(i, j) = rows[i] == cols[j] ? 0.0 : -delta(rows[i], cols[j]);
  return k;
}

const Normalizer& stage2_normalizer(const TwoStageModel& model,
                                    std::size_t subject_slot) {
  return model.per_subject_normalizers
             ? model.subject_normalizers[subject_slot]
             : model.normalizer;
}

// Action machine of one subject, trained on that subject's train ids.
// The seed depends only on (base seed, repetition, subject), so the
// personalization path below retrains bit-identical machines.
SubjectActionModel train_action_machine(const Dataset& ds,
                                        const FeatureCache& cache,
                                        const TwoStageConfig& cfg,
                                        const Normalizer& nrm,
                                        const std::vector<int>& train_ids,
                                        int repetition, int subject) {
  SubjectActionModel out;
  std::vector<int> labels;
  labels.reserve(train_ids.size());
  for (int t : train_ids) labels.push_back(ds.action_of[t]);

  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) {
    out.constant_action = *distinct.begin();
    return out;
  }

  SvmConfig svm_cfg = cfg.svm;
  svm_cfg.seed = derive_seed(cfg.svm.seed, kTagActionSvm, repetition, subject);
  if (cfg.feature == FeatureKind::cov) {
    out.svm = train_multiclass_linear(gather_normalized(cache, nrm, train_ids),
                                      labels, svm_cfg);
  } else {
    out.svm = train_multiclass_precomputed(
        neg_gram_block(cache.delta, train_ids, train_ids), labels, svm_cfg);
  }
  return out;
}

std::vector<int> action_machine_predict(const SubjectActionModel& machine,
                                        const FeatureCache& cache,
                                        FeatureKind feature,
                                        const Normalizer& nrm,
                                        const std::vector<int>& subject_train,
                                        const std::vector<int>& test_ids) {
  if (machine.constant_action >= 0)
    return std::vector<int>(test_ids.size(), machine.constant_action);
  if (feature == FeatureKind::cov)
    return predict(machine.svm, gather_normalized(cache, nrm, test_ids));
  return predict_precomputed(
      machine.svm, neg_gram_block(cache.delta, test_ids, subject_train));
}

}  // namespace

TwoStageModel train_two_stage(const Dataset& ds, const SplitPlan& plan,
                              const TwoStageConfig& cfg,
                              const FeatureCache& cache) {
  TwoStageModel model;
  model.feature = cfg.feature;
  model.per_subject_normalizers = cfg.per_subject_normalizers;
  model.train_ids = plan.train_ids;

  std::vector<int> subject_labels;
  subject_labels.reserve(plan.train_ids.size());
  for (int t : plan.train_ids) subject_labels.push_back(ds.subject_of[t]);
  {
    std::set<int> distinct(subject_labels.begin(), subject_labels.end());
    if (distinct.size() < 2)
      throw TrainingError("two-stage: train split needs >= 2 subjects");
    model.subject_ids.assign(distinct.begin(), distinct.end());
  }

  model.train_ids_by_subject.resize(model.subject_ids.size());
  for (std::size_t slot = 0; slot < model.subject_ids.size(); ++slot)
    for (int t : plan.train_ids)
      if (ds.subject_of[t] == model.subject_ids[slot])
        model.train_ids_by_subject[slot].push_back(t);

  SvmConfig subject_cfg = cfg.svm;
  subject_cfg.seed =
      derive_seed(cfg.svm.seed, kTagSubjectSvm, plan.repetition);

  if (cfg.feature == FeatureKind::cov) {
    std::vector<std::vector<double>> raw;
    raw.reserve(plan.train_ids.size());
    for (int t : plan.train_ids) raw.push_back(cache.descriptors[t]);
    model.normalizer = fit_normalizer(raw, cfg.features.variance_floor);
    model.subject_model = train_multiclass_linear(
        gather_normalized(cache, model.normalizer, plan.train_ids),
        subject_labels, subject_cfg);
    if (cfg.per_subject_normalizers) {
      model.subject_normalizers.resize(model.subject_ids.size());
      for (std::size_t slot = 0; slot < model.subject_ids.size(); ++slot) {
        std::vector<std::vector<double>> mine;
        for (int t : model.train_ids_by_subject[slot])
          mine.push_back(cache.descriptors[t]);
        model.subject_normalizers[slot] =
            fit_normalizer(mine, cfg.features.variance_floor);
      }
    }
  } else {
    model.subject_model = train_multiclass_precomputed(
        neg_gram_block(cache.delta, plan.train_ids, plan.train_ids),
        subject_labels, subject_cfg);
  }

  model.action_models.resize(model.subject_ids.size());
  for (std::size_t slot = 0; slot < model.subject_ids.size(); ++slot) {
    model.action_models[slot] = train_action_machine(
        ds, cache, cfg, stage2_normalizer(model, slot),
        model.train_ids_by_subject[slot], plan.repetition,
        model.subject_ids[slot]);
  }
  return model;
}

namespace {

std::vector<int> predict_subjects(const Dataset& ds,
                                  const TwoStageModel& model,
                                  const std::vector<int>& test_ids,
                                  const FeatureCache& cache) {
  for (int t : test_ids) {
    if (!std::binary_search(model.subject_ids.begin(),
                            model.subject_ids.end(), ds.subject_of[t]))
      throw DataError("two-stage: test trial " + ds.trials[t].id() +
                      " belongs to a subject absent from training");
  }
  if (model.feature == FeatureKind::cov)
    return predict(model.subject_model,
                   gather_normalized(cache, model.normalizer, test_ids));
  return predict_precomputed(
      model.subject_model,
      neg_gram_block(cache.delta, test_ids, model.train_ids));
}

// Routes test trials to per-subject action models; `routes` carries the
// chosen dense subject id per trial.
std::vector<int> route_and_predict(const TwoStageModel& model,
                                   const std::vector<int>& test_ids,
                                   const std::vector<int>& routes,
                                   const FeatureCache& cache) {
  std::vector<int> actions(test_ids.size(), -1);
  for (std::size_t slot = 0; slot < model.subject_ids.size(); ++slot) {
    std::vector<int> mine_pos, mine_ids;
    for (std::size_t i = 0; i < test_ids.size(); ++i) {
      if (routes[i] == model.subject_ids[slot]) {
        mine_pos.push_back(static_cast<int>(i));
        mine_ids.push_back(test_ids[i]);
      }
    }
    if (mine_ids.empty()) continue;
    const std::vector<int> pred = action_machine_predict(
        model.action_models[slot], cache, model.feature,
        stage2_normalizer(model, slot), model.train_ids_by_subject[slot],
        mine_ids);
    for (std::size_t k = 0; k < mine_pos.size(); ++k)
      actions[mine_pos[k]] = pred[k];
  }
  return actions;
}

}  // namespace

TwoStagePrediction predict_two_stage(const Dataset& ds,
                                     const TwoStageModel& model,
                                     const std::vector<int>& test_ids,
                                     const FeatureCache& cache) {
  TwoStagePrediction out;
  out.subject = predict_subjects(ds, model, test_ids, cache);
  out.action = route_and_predict(model, test_ids, out.subject, cache);
  return out;
}

std::vector<int> predict_actions_oracle_routed(const Dataset& ds,
                                               const TwoStageModel& model,
                                               const std::vector<int>& test_ids,
                                               const FeatureCache& cache) {
  std::vector<int> truth;
  truth.reserve(test_ids.size());
  for (int t : test_ids) truth.push_back(ds.subject_of[t]);
  for (int s : truth)
    if (!std::binary_search(model.subject_ids.begin(), model.subject_ids.end(),
                            s))
      throw DataError("two-stage: oracle routing hit a subject absent from "
                      "training");
  return route_and_predict(model, test_ids, truth, cache);
}

double personalization_accuracy_on_plan(const Dataset& ds,
                                        const SplitPlan& plan,
                                        const TwoStageConfig& cfg,
                                        const FeatureCache& cache) {
  // Group train/test ids per subject (the split is given, not redrawn).
  std::set<int> subjects;
  for (int t : plan.train_ids) subjects.insert(ds.subject_of[t]);

  Normalizer shared;
  if (cfg.feature == FeatureKind::cov && !cfg.per_subject_normalizers) {
    std::vector<std::vector<double>> raw;
    for (int t : plan.train_ids) raw.push_back(cache.descriptors[t]);
    shared = fit_normalizer(raw, cfg.features.variance_floor);
  }

  long correct = 0, total = 0;
  for (int s : subjects) {
    std::vector<int> train_s, test_s;
    for (int t : plan.train_ids)
      if (ds.subject_of[t] == s) train_s.push_back(t);
    for (int t : plan.test_ids)
      if (ds.subject_of[t] == s) test_s.push_back(t);
    if (test_s.empty()) continue;

    Normalizer nrm = shared;
    if (cfg.feature == FeatureKind::cov && cfg.per_subject_normalizers) {
      std::vector<std::vector<double>> mine;
      for (int t : train_s) mine.push_back(cache.descriptors[t]);
      nrm = fit_normalizer(mine, cfg.features.variance_floor);
    }

    const SubjectActionModel machine = train_action_machine(
        ds, cache, cfg, nrm, train_s, plan.repetition, s);
    const std::vector<int> pred = action_machine_predict(
        machine, cache, cfg.feature, nrm, train_s, test_s);
    for (std::size_t i = 0; i < test_s.size(); ++i) {
      if (pred[i] == ds.action_of[test_s[i]]) ++correct;
      ++total;
    }
  }
  if (total == 0)
    throw DataError("personalization on plan: no test trials in scope");
  return 100.0 * correct / static_cast<double>(total);
}

TwoStageReport run_two_stage(const Dataset& ds, const SplitConfig& split_cfg,
                             const TwoStageConfig& cfg,
                             const FeatureCache* cache) {
  if (ds.n_subjects() < 2)
    throw DataError("two-stage needs a dataset with >= 2 subjects");

  FeatureCache local_cache;
  if (cache == nullptr) {
    local_cache = build_feature_cache(ds, cfg.feature, cfg.features,
                                      cfg.threads);
    cache = &local_cache;
  }

  const std::vector<SplitPlan> plans = plan_cross_validation(ds, split_cfg);

  TwoStageReport report;
  report.feature = cfg.feature;

  for (const SplitPlan& plan : plans) {
    const TwoStageModel model = train_two_stage(ds, plan, cfg, *cache);
    const TwoStagePrediction pred =
        predict_two_stage(ds, model, plan.test_ids, *cache);
    const std::vector<int> oracle =
        predict_actions_oracle_routed(ds, model, plan.test_ids, *cache);

    long subj_ok = 0, act_ok = 0, oracle_ok = 0;
    for (std::size_t i = 0; i < plan.test_ids.size(); ++i) {
      const int t = plan.test_ids[i];
      const bool routed_right = pred.subject[i] == ds.subject_of[t];
      const bool action_right = pred.action[i] == ds.action_of[t];
      if (routed_right) ++subj_ok;
      if (action_right) ++act_ok;
      if (oracle[i] == ds.action_of[t]) ++oracle_ok;
      if (!routed_right) {
        ++report.misroutes;
        if (action_right) ++report.misroute_then_correct;
      }
      ++report.routed_counts[ds.subjects[pred.subject[i]]];
    }

    const double n = static_cast<double>(plan.test_ids.size());
    report.per_rep_subject.push_back(100.0 * subj_ok / n);
    report.per_rep_action.push_back(100.0 * act_ok / n);
    report.per_rep_oracle.push_back(100.0 * oracle_ok / n);
    if (act_ok > oracle_ok) ++report.dominance_violations;
    report.n_train.push_back(static_cast<int>(plan.train_ids.size()));
    report.n_test.push_back(static_cast<int>(plan.test_ids.size()));
  }

  const auto mean_std = [](const std::vector<double>& v, double& mean,
                           double& std) {
    double s = 0.0;
    for (double x : v) s += x;
    mean = v.empty() ? 0.0 : s / static_cast<double>(v.size());
    double q = 0.0;
    for (double x : v) q += (x - mean) * (x - mean);
    std = v.size() < 2 ? 0.0 : std::sqrt(q / static_cast<double>(v.size()));
  };
  mean_std(report.per_rep_subject, report.subject_mean, report.subject_std);
  mean_std(report.per_rep_action, report.action_mean, report.action_std);
  return report;
}

nlohmann::json two_stage_report_to_json(const TwoStageReport& report) {
  nlohmann::json j;
  j["feature"] = feature_name(report.feature);
  j["subject_svm"] = {{"mean_pct", report.subject_mean},
                      {"std_pct", report.subject_std},
                      {"per_repetition_pct", report.per_rep_subject}};
  j["action_svms"] = {{"mean_pct", report.action_mean},
                      {"std_pct", report.action_std},
                      {"per_repetition_pct", report.per_rep_action}};
  j["oracle_routed_per_repetition_pct"] = report.per_rep_oracle;
  j["routed_counts"] = report.routed_counts;
  j["misroutes"] = report.misroutes;
  j["misroute_then_correct"] = report.misroute_then_correct;
  j["dominance_violations"] = report.dominance_violations;
  j["n_train"] = report.n_train;
  j["n_test"] = report.n_test;
  return j;
}

void two_stage_report_to_csv(const TwoStageReport& report,
                             const std::string& dataset_name,
                             std::ostream& out) {
  out << "stage,dataset,mean_pct,std_pct\n";
  out << "subject-SVM," << dataset_name << ","
      << fmt_double(report.subject_mean) << ","
      << fmt_double(report.subject_std) << "\n";
  out << "action-SVMs," << dataset_name << ","
      << fmt_double(report.action_mean) << "," << fmt_double(report.action_std)
      << "\n";
}

}  // namespace skelact

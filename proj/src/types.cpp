#include "skelact/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "skelact/errors.hpp"

namespace skelact {

std::string Trial::id() const {
  return subject + "/" + action + "/" + std::to_string(trial_index);
}

void validate_trial(const Trial& t) {
  if (t.joint_count < 1)
    throw DataError("trial " + t.id() + ": joint_count must be >= 1");
  if (t.trial_index < 0)
    throw DataError("trial " + t.id() + ": negative trial index");
  const std::size_t per_frame = 3 * static_cast<std::size_t>(t.joint_count);
  if (t.coords.empty() || t.coords.size() % per_frame != 0)
    throw DataError("trial " + t.id() +
                    ": coordinate count is not a multiple of 3*J or is empty");
  for (double v : t.coords) {
    if (!std::isfinite(v))
      throw DataError("trial " + t.id() + ": non-finite coordinate");
  }
}

Dataset Dataset::assemble(std::string name, std::vector<Trial> trials) {
  if (trials.empty()) throw DataError("empty dataset");

  Dataset ds;
  ds.name = std::move(name);
  ds.joint_count = trials.front().joint_count;

  std::set<std::tuple<std::string, std::string, int>> seen;
  for (const Trial& t : trials) {
    validate_trial(t);
    if (t.joint_count != ds.joint_count)
      throw DataError("trial " + t.id() + ": joint count " +
                      std::to_string(t.joint_count) +
                      " differs from dataset joint count " +
                      std::to_string(ds.joint_count));
    if (!seen.insert({t.subject, t.action, t.trial_index}).second)
      throw DataError("duplicate trial id " + t.id());
  }

  std::set<std::string> subj, act;
  for (const Trial& t : trials) {
    subj.insert(t.subject);
    act.insert(t.action);
  }
  ds.subjects.assign(subj.begin(), subj.end());
  ds.actions.assign(act.begin(), act.end());

  std::map<std::string, int> subj_idx, act_idx;
  for (int i = 0; i < static_cast<int>(ds.subjects.size()); ++i)
    subj_idx[ds.subjects[i]] = i;
  for (int i = 0; i < static_cast<int>(ds.actions.size()); ++i)
    act_idx[ds.actions[i]] = i;

  ds.trials = std::move(trials);
  ds.subject_of.reserve(ds.trials.size());
  ds.action_of.reserve(ds.trials.size());
  for (const Trial& t : ds.trials) {
    ds.subject_of.push_back(subj_idx[t.subject]);
    ds.action_of.push_back(act_idx[t.action]);
  }
  return ds;
}

std::vector<std::vector<int>> Dataset::trials_by_subject() const {
  std::vector<std::vector<int>> out(subjects.size());
  for (int i = 0; i < n_trials(); ++i) out[subject_of[i]].push_back(i);
  return out;
}

std::vector<std::vector<int>> Dataset::trials_by_action() const {
  std::vector<std::vector<int>> out(actions.size());
  for (int i = 0; i < n_trials(); ++i) out[action_of[i]].push_back(i);
  return out;
}

}  // namespace skelact

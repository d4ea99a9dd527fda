#pragma once

#include <span>
#include <string>
#include <vector>

namespace skelact {

// One recorded action instance: a tau-frame sequence of J joints, each a
// 3D position. Coordinates are stored flat, frame-major:
// frame t occupies coords[t*3J .. t*3J+3J), laid out j0x j0y j0z j1x ...
struct Trial {
  std::string subject;
  std::string action;
  int trial_index = 0;
  int joint_count = 0;
  std::vector<double> coords;

  int frame_count() const {
    return joint_count > 0
               ? static_cast<int>(coords.size() / (3 * joint_count))
               : 0;
  }

  std::span<const double> frame(int t) const {
    const std::size_t n = 3 * static_cast<std::size_t>(joint_count);
    return {coords.data() + static_cast<std::size_t>(t) * n, n};
  }

  std::string id() const;

  bool operator==(const Trial&) const = default;
};

// Throws DataError if the trial violates its invariants (tau >= 1,
// J >= 1, coords length consistent, all values finite).
void validate_trial(const Trial& t);

// A named collection of trials with uniform joint count. Subject and
// action labels are opaque strings, mapped to dense indices (sorted
// lexicographically) when the dataset is assembled.
struct Dataset {
  std::string name;
  int joint_count = 0;
  std::vector<Trial> trials;

  std::vector<std::string> subjects;  // sorted unique labels
  std::vector<std::string> actions;   // sorted unique labels
  std::vector<int> subject_of;        // dense subject index per trial
  std::vector<int> action_of;         // dense action index per trial

  int n_trials() const { return static_cast<int>(trials.size()); }
  int n_subjects() const { return static_cast<int>(subjects.size()); }
  int n_actions() const { return static_cast<int>(actions.size()); }

  // Trial indices grouped by dense subject / action index.
  std::vector<std::vector<int>> trials_by_subject() const;
  std::vector<std::vector<int>> trials_by_action() const;

  // Validates every trial, checks J uniformity and (subject, action,
  // trial_index) uniqueness, then builds the label index.
  static Dataset assemble(std::string name, std::vector<Trial> trials);
};

}  // namespace skelact

#pragma once

#include <cstdint>

#include "skelact/types.hpp"

namespace skelact {

// Parameters of the synthetic MoCap generator. subject_style_scale
// drives how differently subjects perform the same action (per-joint
// offset plus a personal tempo); intra_noise_scale drives trial-to-trial
// jitter of one subject repeating one action.
struct SynthConfig {
  int n_subjects = 5;
  int n_actions = 8;
  int trials_per_pair = 6;
  int joint_count = 6;
  int frame_count_min = 20;
  int frame_count_max = 40;
  double subject_style_scale = 1.0;
  double intra_noise_scale = 0.1;
  std::uint64_t seed = 0;

  // Throws ConfigError on invalid values (covariance needs tau >= 2).
  void validate() const;
};

// Deterministic given the config (including seed): every random draw
// happens on a stream derived from (seed, purpose, indices), so the
// result is independent of generation order. Construction: each action
// has a smooth-random-walk template per joint; each (subject, action)
// pair draws a fixed style once (per-joint constant offset + global
// temporal speed factor); each trial adds i.i.d. per-frame noise and a
// random length in [frame_count_min, frame_count_max].
Dataset generate_synthetic(const SynthConfig& cfg);

}  // namespace skelact

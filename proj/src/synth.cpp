#include "skelact/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "skelact/errors.hpp"
#include "skelact/rng.hpp"

namespace skelact {

namespace {

// Stream tags; part of the generator's determinism contract.
constexpr std::uint64_t kTagBackbone = 0x11;
constexpr std::uint64_t kTagTemplate = 0x22;
constexpr std::uint64_t kTagStyle = 0x33;
constexpr std::uint64_t kTagTrial = 0x44;

// Generator shape constants. The ratios below set how strongly the
// subject style scale maps onto spatial offsets (visible to DTW) and
// onto the personal tempo (visible to the covariance descriptor, which
// is offset-invariant).
constexpr int kKnots = 64;
constexpr int kSmoothWindow = 7;
constexpr double kWalkStep = 0.2;
constexpr double kBackboneStep = 1.2;
constexpr double kJointSpread = 1.0;
constexpr double kOffsetScale = 0.5;
constexpr double kSpeedScale = 1.3;
constexpr double kMaxLogSpeed = 2.5;

// One smooth random walk: cumulative Gaussian steps, then a moving
// average pass to remove frame-scale roughness.
std::vector<double> smooth_walk(Rng& rng, int knots, double step) {
  std::vector<double> w(knots);
  double acc = 0.0;
  for (int i = 0; i < knots; ++i) {
    acc += step * rng.next_normal();
    w[i] = acc;
  }
  std::vector<double> out(knots);
  const int half = kSmoothWindow / 2;
  for (int i = 0; i < knots; ++i) {
    double sum = 0.0;
    int count = 0;
    for (int k = std::max(0, i - half); k <= std::min(knots - 1, i + half);
         ++k) {
      sum += w[k];
      ++count;
    }
    out[i] = sum / count;
  }
  return out;
}

// Piecewise-linear evaluation of a knot sequence at u in [0, 1].
double eval_walk(const std::vector<double>& knots, double u) {
  const double x = u * (knots.size() - 1);
  const int lo = std::clamp(static_cast<int>(std::floor(x)), 0,
                            static_cast<int>(knots.size()) - 2);
  const double f = x - lo;
  return knots[lo] * (1.0 - f) + knots[lo + 1] * f;
}

std::string padded_label(const char* prefix, int idx, int total) {
  int width = 2;
  for (int v = total - 1; v >= 100; v /= 10) ++width;
  std::string digits = std::to_string(idx);
  while (static_cast<int>(digits.size()) < width) digits.insert(0, "0");
  return prefix + digits;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_subjects < 1 || n_actions < 1 || trials_per_pair < 1)
    throw ConfigError("subjects, actions and trials per pair must be >= 1");
  if (joint_count < 1) throw ConfigError("joint_count must be >= 1");
  if (frame_count_min < 2)
    throw ConfigError("frame_count_min must be >= 2 (covariance needs tau >= 2)");
  if (frame_count_max < frame_count_min)
    throw ConfigError("frame_count_max must be >= frame_count_min");
  if (subject_style_scale < 0.0 || intra_noise_scale < 0.0)
    throw ConfigError("style and noise scales must be nonnegative");
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();

  const int J = cfg.joint_count;
  const int coords_per_joint = 3;

  // Dataset-level backbone shared by all actions; it makes action
  // templates mutually similar so that classification is not trivially
  // solvable from coarse geometry alone.
  std::vector<std::vector<double>> backbone(J * coords_per_joint);
  {
    Rng rng(derive_seed(cfg.seed, kTagBackbone));
    for (auto& channel : backbone)
      channel = smooth_walk(rng, kKnots, kBackboneStep);
  }

  // Action templates: backbone + action-specific walk + per-joint base
  // offset spreading the joints in space.
  struct Template {
    std::vector<std::vector<double>> channels;  // J*3 knot sequences
    std::vector<double> base;                   // J*3 offsets
  };
  std::vector<Template> templates(cfg.n_actions);
  for (int a = 0; a < cfg.n_actions; ++a) {
    Rng rng(derive_seed(cfg.seed, kTagTemplate, a));
    Template& t = templates[a];
    t.channels.resize(J * coords_per_joint);
    t.base.resize(J * coords_per_joint);
    for (int c = 0; c < J * coords_per_joint; ++c)
      t.channels[c] = smooth_walk(rng, kKnots, kWalkStep);
    for (int c = 0; c < J * coords_per_joint; ++c)
      t.base[c] = kJointSpread * rng.next_normal();
  }

  std::vector<Trial> trials;
  trials.reserve(static_cast<std::size_t>(cfg.n_subjects) * cfg.n_actions *
                 cfg.trials_per_pair);

  for (int s = 0; s < cfg.n_subjects; ++s) {
    for (int a = 0; a < cfg.n_actions; ++a) {
      // Fixed style of subject s performing action a.
      std::vector<double> offset(J * coords_per_joint);
      double gamma = 1.0;
      {
        Rng rng(derive_seed(cfg.seed, kTagStyle, s, a));
        for (double& o : offset)
          o = cfg.subject_style_scale * kOffsetScale * rng.next_normal();
        // Soft saturation keeps the tempo bounded while staying
        // injective in the draw (a hard clamp would make extreme
        // subjects collide on identical tempos).
        const double raw =
            cfg.subject_style_scale * kSpeedScale * rng.next_normal();
        gamma = std::exp(kMaxLogSpeed * std::tanh(raw / kMaxLogSpeed));
      }

      for (int k = 0; k < cfg.trials_per_pair; ++k) {
        Rng rng(derive_seed(cfg.seed, kTagTrial, s, a, k));
        const int tau = rng.next_int(cfg.frame_count_min, cfg.frame_count_max);

        Trial t;
        t.subject = padded_label("s", s, cfg.n_subjects);
        t.action = padded_label("a", a, cfg.n_actions);
        t.trial_index = k;
        t.joint_count = J;
        t.coords.resize(static_cast<std::size_t>(tau) * J * coords_per_joint);

        const Template& tpl = templates[a];
        for (int f = 0; f < tau; ++f) {
          const double u = tau == 1 ? 0.0 : static_cast<double>(f) / (tau - 1);
          const double warped = std::pow(u, gamma);
          for (int c = 0; c < J * coords_per_joint; ++c) {
            double v = eval_walk(backbone[c], warped) +
                       eval_walk(tpl.channels[c], warped) + tpl.base[c] +
                       offset[c];
            if (cfg.intra_noise_scale > 0.0)
              v += cfg.intra_noise_scale * rng.next_normal();
            t.coords[static_cast<std::size_t>(f) * J * coords_per_joint + c] = v;
          }
        }
        trials.push_back(std::move(t));
      }
    }
  }

  Dataset ds = Dataset::assemble("synthetic", std::move(trials));
  return ds;
}

}  // namespace skelact

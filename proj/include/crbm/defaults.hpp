#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "crbm/panel.hpp"
#include "crbm/pipeline.hpp"
#include "crbm/sweep.hpp"
#include "crbm/training.hpp"

namespace crbm::defaults {

inline constexpr int kTwinCount = 100;
inline constexpr int kEpochs = 1000;
inline constexpr double kWeightPenalty = 0.001;
inline constexpr int kMcSteps = 25;
inline constexpr double kAlpha = 0.05;

inline SplitRatios split_ratios() { return {0.5, 0.2, 0.3}; }

/// Hyperparameter grid of a component model.
inline GridSpec grid(ModelKind k) {
  if (k == ModelKind::three_month)
    return {{{"batch_size", {400, 600, 800}},
             {"learning_rate", {0.002, 0.004, 0.008, 0.012, 0.016}},
             {"beta_std", {0.15, 0.30, 0.45}},
             {"adversary_weight", {0.0, 0.15, 0.30}},
             {"hidden_units", {65, 130, 195}}}};
  return {{{"batch_size", {100, 200, 400}},
           {"learning_rate", {0.004, 0.008, 0.012, 0.016, 0.024, 0.032}},
           {"beta_std", {0.15, 0.30, 0.45}},
           {"adversary_weight", {0.0, 0.15, 0.30}},
           {"hidden_units", {32, 64}}}};
}

/// Fixed settings shared by every grid point.
inline TrainConfig base_config(std::uint64_t seed = 0) {
  TrainConfig c;
  c.epochs = kEpochs;
  c.weight_penalty = kWeightPenalty;
  c.mc_steps = kMcSteps;
  c.seed = seed;
  return c;
}

/// The selected configuration of a component model.
inline TrainConfig selected_config(ModelKind k, std::uint64_t seed = 0) {
  TrainConfig c = base_config(seed);
  if (k == ModelKind::three_month) {
    c.batch_size = 400;
    c.learning_rate = 0.016;
    c.beta_std = 0.15;
    c.adversary_weight = 0.30;
    c.hidden_units = 65;
  } else {
    c.batch_size = 100;
    c.learning_rate = 0.032;
    c.beta_std = 0.15;
    c.adversary_weight = 0.0;
    c.hidden_units = 32;
  }
  return c;
}

inline std::vector<std::string> selection_metric_names(ModelKind k) {
  std::vector<std::string> out;
  for (const auto& c : selection_columns(k)) out.push_back(c.name);
  return out;
}

/// Modeled variable count and follow-up visits of the reference data, whose
/// calibration grid sets the Bonferroni threshold.
inline constexpr std::size_t kCalibrationVariables = 21;
inline constexpr std::size_t kCalibrationVisits = 6;

}  // namespace crbm::defaults

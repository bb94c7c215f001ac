#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cseg/augmentation.hpp"
#include "cseg/cascade.hpp"
#include "cseg/losses.hpp"

namespace cseg {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct InferConfig {
  Shape3 patch_size{96, 96, 96};
  Shape3 stride{48, 48, 48};
  std::array<double, 3> thresholds{0.5, 0.5, 0.5};
  GateMode gate = GateMode::Hard;

  void validate() const;
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 1;
  double lr_initial = 1e-3;
  double lr_after_plateau = 5e-4;
  int plateau_patience_epochs = 5;
  double plateau_min_rel_improvement = 1e-4;
  Shape3 patch_size{96, 96, 96};
  double foreground_prob = 0.0;
  std::uint64_t seed = 0;
  /// Keep a numbered checkpoint every N epochs in addition to the rolling one (0 = never).
  int keep_checkpoint_every = 0;

  AdamConfig adam;
  FocalParams focal;
  std::array<double, 3> aux_weights{0.5, 0.5, 0.5};
  std::array<double, 3> step_weights{1.0, 1.0, 1.0};
  AugmentConfig augment;
  CascadeConfig cascade;
  InferConfig infer;

  void validate() const;
};

/// Parses INI text with sections [train] [adam] [loss] [augment] [cascade] [infer].
/// Missing keys keep their defaults; unknown sections or keys are errors.
TrainConfig parse_train_config(const std::string& ini_text);
TrainConfig load_train_config(const std::filesystem::path& path);

/// Applies "section.key=value" overrides on top of `ini_text`.
TrainConfig parse_train_config(const std::string& ini_text, const std::vector<std::string>& overrides);

/// Full effective configuration, every key written.
std::string format_train_config(const TrainConfig& cfg);

}  // namespace cseg

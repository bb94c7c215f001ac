#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "cseg/augmentation.hpp"
#include "cseg/checkpoint.hpp"
#include "cseg/config.hpp"

namespace cseg {

/// Learning rate for the next epoch given the mean losses of completed epochs. Stays at
/// lr_initial until the best loss has gone plateau_patience_epochs consecutive epochs without a
/// relative improvement of plateau_min_rel_improvement, then lr_after_plateau for good.
double update_learning_rate(const std::vector<double>& history, const TrainConfig& cfg);

struct IterationLog {
  std::int64_t iteration = 0;  // 1-based optimizer step
  int epoch = 0;               // 1-based
  std::array<double, 3> step_loss{};
  double total = 0.0;
  double lr = 0.0;
};

struct TrainOptions {
  std::optional<std::filesystem::path> resume;      // checkpoint to continue from
  std::function<void(const IterationLog&)> on_iteration;
  std::function<void(int epoch, double mean_loss, double lr)> on_epoch;
};

struct TrainResult {
  std::filesystem::path run_dir;
  std::filesystem::path checkpoint;   // rolling checkpoint after the last epoch
  std::vector<double> epoch_losses;
  std::int64_t iterations = 0;
};

/// Run directory contents: config.ini, loss_log.csv, checkpoint.ckpt and optional
/// checkpoint_epoch_NNN.ckpt snapshots.
TrainResult train_run(const TrainConfig& cfg, const std::vector<Sample>& dataset,
                      const std::filesystem::path& run_dir, const TrainOptions& options = {});

/// Loads every labelled case under `data_dir` and trains on it.
TrainResult train_run(const TrainConfig& cfg, const std::filesystem::path& data_dir,
                      const std::filesystem::path& run_dir, const TrainOptions& options = {});

/// Parses loss_log.csv.
std::vector<IterationLog> read_loss_log(const std::filesystem::path& path);

}  // namespace cseg

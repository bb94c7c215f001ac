#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cseg/adam.hpp"
#include "cseg/cascade.hpp"
#include "cseg/config.hpp"

namespace cseg {

/// Resumable training progress stored next to the weights.
struct TrainingState {
  int epoch = 0;                    // completed epochs
  std::int64_t iteration = 0;       // completed optimizer steps
  std::vector<double> epoch_losses; // mean total loss per completed epoch
  std::string rng_state;
  std::string config_ini;           // effective training configuration
};

/// Single-file archive: magic, version, JSON header, raw float64 payload, CRC-32.
void save_checkpoint(const std::filesystem::path& path, CascadeModel& model, Adam* optimizer,
                     const TrainingState& state);

/// Restores weights (and optimizer moments when `optimizer` is non-null). Throws on a corrupt
/// file or when the stored cascade configuration differs from the model's.
TrainingState load_checkpoint(const std::filesystem::path& path, CascadeModel& model,
                              Adam* optimizer = nullptr);

/// Reads only the header: the cascade configuration and training state.
CascadeConfig checkpoint_config(const std::filesystem::path& path, TrainingState* state = nullptr);

/// Builds a model from a checkpoint.
CascadeModel load_model(const std::filesystem::path& path, TrainingState* state = nullptr);

/// Single-network variants.
void save_unet(const std::filesystem::path& path, UNet& net);
void load_unet(const std::filesystem::path& path, UNet& net);

}  // namespace cseg

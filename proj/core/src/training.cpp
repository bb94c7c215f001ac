#include "cseg/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cseg/dataset.hpp"
#include "cseg/losses.hpp"
#include "cseg/patching.hpp"

namespace cseg {
namespace {

constexpr const char* kLogHeader = "iteration,epoch,step1,step2,step3,total,lr";

std::string format_row(const IterationLog& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%d,%.17g,%.17g,%.17g,%.17g,%.17g", static_cast<long long>(r.iteration),
                r.epoch, r.step_loss[0], r.step_loss[1], r.step_loss[2], r.total, r.lr);
  return buf;
}

IterationLog parse_row(const std::string& line) {
  IterationLog r;
  std::stringstream ss(line);
  std::string cell;
  std::vector<std::string> cells;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (cells.size() != 7) throw Error("loss log: malformed row '" + line + "'");
  try {
    r.iteration = std::stoll(cells[0]);
    r.epoch = std::stoi(cells[1]);
    for (int k = 0; k < 3; ++k) r.step_loss[k] = std::stod(cells[2 + k]);
    r.total = std::stod(cells[5]);
    r.lr = std::stod(cells[6]);
  } catch (const std::exception&) {
    throw Error("loss log: malformed row '" + line + "'");
  }
  return r;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
}

}  // namespace

double update_learning_rate(const std::vector<double>& history, const TrainConfig& cfg) {
  if (history.empty()) return cfg.lr_initial;
  double best = history[0];
  int stale = 0;
  for (std::size_t e = 1; e < history.size(); ++e) {
    if (best - history[e] >= cfg.plateau_min_rel_improvement * std::abs(best) && history[e] < best) {
      best = history[e];
      stale = 0;
    } else if (++stale >= cfg.plateau_patience_epochs) {
      return cfg.lr_after_plateau;
    }
  }
  return cfg.lr_initial;
}

std::vector<IterationLog> read_loss_log(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kLogHeader) throw Error("loss log: bad header in " + path.string());
  std::vector<IterationLog> rows;
  while (std::getline(is, line)) {
    if (!line.empty()) rows.push_back(parse_row(line));
  }
  return rows;
}

TrainResult train_run(const TrainConfig& cfg, const std::vector<Sample>& dataset,
                      const std::filesystem::path& run_dir, const TrainOptions& options) {
  cfg.validate();
  if (dataset.empty()) throw Error("train: empty dataset");
  for (const auto& s : dataset) {
    s.images.validate();
    const Shape3 shape = s.images.shape();
    if (!(s.labels.shape() == shape)) throw Error("train: label shape differs for case " + s.images.case_id);
    for (int a = 0; a < 3; ++a) {
      if (cfg.patch_size[a] > shape[a]) {
        throw Error("train: patch " + cfg.patch_size.str() + " larger than case " + s.images.case_id + " " +
                    shape.str());
      }
    }
  }
  std::filesystem::create_directories(run_dir);

  CascadeModel model(cfg.cascade, cfg.seed);
  Adam optimizer(model.parameters(), cfg.adam);
  Rng rng(cfg.seed);
  TrainingState state;
  state.config_ini = format_train_config(cfg);

  const auto log_path = run_dir / "loss_log.csv";
  std::vector<std::string> kept_rows;
  if (options.resume) {
    state = load_checkpoint(*options.resume, model, &optimizer);
    restore_rng_state(rng, state.rng_state);
    state.config_ini = format_train_config(cfg);
    if (std::filesystem::exists(log_path)) {
      for (const auto& row : read_loss_log(log_path)) {
        if (row.iteration <= state.iteration) kept_rows.push_back(format_row(row));
      }
    }
  }
  write_text(run_dir / "config.ini", state.config_ini);

  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw Error("cannot write " + log_path.string());
  log << kLogHeader << '\n';
  for (const auto& row : kept_rows) log << row << '\n';
  log.flush();

  const auto params = model.parameters();
  TrainResult result;
  result.run_dir = run_dir;
  result.checkpoint = run_dir / "checkpoint.ckpt";

  std::vector<std::size_t> order(dataset.size());
  for (int epoch = state.epoch + 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = update_learning_rate(state.epoch_losses, cfg);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_sum = 0.0;
    for (std::size_t idx : order) {
      model.zero_grad();
      IterationLog row;
      row.iteration = state.iteration + 1;
      row.epoch = epoch;
      row.lr = lr;
      for (int b = 0; b < cfg.batch_size; ++b) {
        const Sample& src = dataset[idx];
        Sample patch = sample_patch(src.images, src.labels, cfg.patch_size, rng, cfg.foreground_prob);
        patch = augment(std::move(patch), cfg.augment, rng);
        const std::array<RegionMask, 3> targets = {region_mask_from_labels(patch.labels, Region::WT),
                                                   region_mask_from_labels(patch.labels, Region::TC),
                                                   region_mask_from_labels(patch.labels, Region::ET)};
        const CascadeOutput out =
            model.forward(patch.images[Modality::Flair], patch.images[Modality::T1ce], cfg.cascade.train_gate);
        std::array<StepGrad, 3> grads;
        const CascadeLoss loss = cascade_loss(out, targets, cfg.step_weights, cfg.aux_weights, cfg.focal, &grads);
        for (int k = 0; k < 3; ++k) {
          if (!std::isfinite(loss.step[k])) {
            throw Error("train: non-finite loss in step " + std::to_string(k + 1) + " at iteration " +
                        std::to_string(row.iteration) + " (case " + src.images.case_id + ")");
          }
        }
        model.backward(grads);
        for (int k = 0; k < 3; ++k) row.step_loss[k] += loss.step[k] / cfg.batch_size;
        row.total += loss.total / cfg.batch_size;
      }
      if (cfg.batch_size > 1) {
        const double scale = 1.0 / cfg.batch_size;
        for (auto* p : params) {
          for (double& g : p->grad) g *= scale;
        }
      }
      optimizer.step(lr);
      state.iteration = row.iteration;
      epoch_sum += row.total;
      log << format_row(row) << '\n';
      if (options.on_iteration) options.on_iteration(row);
    }
    log.flush();

    const double mean = epoch_sum / static_cast<double>(order.size());
    state.epoch = epoch;
    state.epoch_losses.push_back(mean);
    state.rng_state = rng_state(rng);
    save_checkpoint(result.checkpoint, model, &optimizer, state);
    if (cfg.keep_checkpoint_every > 0 && epoch % cfg.keep_checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_epoch_%03d.ckpt", epoch);
      std::filesystem::copy_file(result.checkpoint, run_dir / name,
                                 std::filesystem::copy_options::overwrite_existing);
    }
    if (options.on_epoch) options.on_epoch(epoch, mean, lr);
  }

  result.epoch_losses = state.epoch_losses;
  result.iterations = state.iteration;
  if (!std::filesystem::exists(result.checkpoint)) save_checkpoint(result.checkpoint, model, &optimizer, state);
  return result;
}

TrainResult train_run(const TrainConfig& cfg, const std::filesystem::path& data_dir,
                      const std::filesystem::path& run_dir, const TrainOptions& options) {
  std::vector<Sample> dataset;
  for (const auto& id : list_cases(data_dir)) {
    Case c = load_case(data_dir, id, true);
    dataset.push_back({std::move(c.images), std::move(*c.truth)});
  }
  if (dataset.empty()) throw Error("train: no cases found in " + data_dir.string());
  return train_run(cfg, dataset, run_dir, options);
}

}  // namespace cseg

#include "cseg/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cseg/checkpoint.hpp"
#include "cseg/dataset.hpp"
#include "cseg/inference.hpp"
#include "cseg/metrics.hpp"
#include "cseg/nifti.hpp"
#include "cseg/phantom.hpp"
#include "cseg/preprocessing.hpp"
#include "cseg/training.hpp"

namespace cseg::cli {
namespace {

namespace fs = std::filesystem;

void check_device() {
  const char* dev = std::getenv("CSEG_DEVICE");
  if (dev && std::string(dev) != "cpu" && std::string(dev) != "") {
    throw Error(std::string("CSEG_DEVICE=") + dev + ": only the cpu backend is available");
  }
}

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw Error(std::string(what) + " directory not found: " + p.string());
}

/// Runs fn(i) for i in [0, n) on `workers` threads; rethrows the first failure.
template <class F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  const int count = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(workers)));
  std::vector<std::thread> pool;
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i, w);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct SynthArgs {
  int cases = 0;
  int size = 0;
  std::string out;
  std::uint64_t seed = 0;
  double noise = 0.05;
  double bias_amplitude = 0.2;
  int bias_degree = 2;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.cases < 1) throw Error("synth: --cases must be >= 1");
  fs::create_directories(a.out);
  Rng rng(a.seed);
  for (int i = 0; i < a.cases; ++i) {
    const std::uint64_t case_seed = rng();
    const std::uint64_t bias_seed = rng();
    PhantomParams p = PhantomParams::defaults_for({a.size, a.size, a.size});
    p.seed = case_seed;
    p.noise_sigma = a.noise;
    char id[32];
    std::snprintf(id, sizeof(id), "phantom_%03d", i);
    p.case_id = id;
    if (a.bias_amplitude > 0.0) p.bias = BiasFieldSpec::random(a.bias_degree, a.bias_amplitude, bias_seed);
    const PhantomCase c = generate_case(p);
    save_case(a.out, c.images, &c.labels);
    out << "wrote " << p.case_id << "\n";
  }
}

struct PreprocessArgs {
  std::string in, out;
  int bias_degree = 3;
  std::string external_cmd;
  bool no_bias = false;
  int workers = 1;
};

void cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
  require_dir(a.in, "input");
  PreprocessOptions opts;
  opts.bias.degree = a.bias_degree;
  opts.correct_bias = !a.no_bias;
  if (!a.external_cmd.empty()) opts.external_bias_cmd = a.external_cmd;
  const auto ids = list_cases(a.in);
  if (ids.empty()) throw Error("preprocess: no cases in " + a.in);
  fs::create_directories(a.out);
  std::mutex mu;
  parallel_for(ids.size(), a.workers, [&](std::size_t i, int) {
    const Case c = load_case(a.in, ids[i], false);
    const ModalityStack pre = preprocess_case(c.images, opts);
    save_case(a.out, pre, c.truth ? &*c.truth : nullptr);
    std::lock_guard lock(mu);
    out << "preprocessed " << ids[i] << "\n";
  });
}

struct TrainArgs {
  std::string data, config, out, resume;
  std::vector<std::string> overrides;
  bool quiet = false;
};

void cmd_train(const TrainArgs& a, std::ostream& out) {
  require_dir(a.data, "data");
  std::string ini;
  if (!a.config.empty()) {
    std::ifstream is(a.config);
    if (!is) throw Error("cannot read config " + a.config);
    std::stringstream ss;
    ss << is.rdbuf();
    ini = ss.str();
  }
  const TrainConfig cfg = parse_train_config(ini, a.overrides);
  TrainOptions opts;
  if (!a.resume.empty()) opts.resume = a.resume;
  if (!a.quiet) {
    opts.on_epoch = [&out](int epoch, double mean, double lr) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "epoch %d  loss %.6f  lr %g\n", epoch, mean, lr);
      out << buf << std::flush;
    };
  }
  const TrainResult r = train_run(cfg, fs::path(a.data), fs::path(a.out), opts);
  out << "checkpoint " << r.checkpoint.string() << "\n";
}

struct InferArgs {
  std::string checkpoint, data, out;
  bool save_probs = false;
  std::vector<int> patch_size, stride;
  int workers = 1;
};

Shape3 shape_arg(const std::vector<int>& v, const char* flag) {
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw Error(std::string(flag) + " takes 1 or 3 values");
}

void cmd_infer(const InferArgs& a, std::ostream& out) {
  require_dir(a.data, "data");
  if (!fs::is_regular_file(a.checkpoint)) throw Error("checkpoint not found: " + a.checkpoint);
  TrainingState state;
  checkpoint_config(a.checkpoint, &state);
  InferConfig icfg = parse_train_config(state.config_ini).infer;
  if (!a.patch_size.empty()) icfg.patch_size = shape_arg(a.patch_size, "--patch-size");
  if (!a.stride.empty()) icfg.stride = shape_arg(a.stride, "--stride");
  for (int ax = 0; ax < 3; ++ax) icfg.stride[ax] = std::min(icfg.stride[ax], icfg.patch_size[ax]);

  const auto ids = list_cases(a.data);
  if (ids.empty()) throw Error("infer: no cases in " + a.data);
  fs::create_directories(a.out);
  const int workers = std::max(1, std::min<int>(a.workers, static_cast<int>(ids.size())));
  std::vector<CascadeModel> models;
  for (int w = 0; w < workers; ++w) models.push_back(load_model(a.checkpoint));
  std::mutex mu;
  parallel_for(ids.size(), workers, [&](std::size_t i, int w) {
    const Case c = load_case(a.data, ids[i], false);
    const Prediction p = predict_case(models[w], c.images, icfg);
    const fs::path base = fs::path(a.out) / ids[i];
    write_nifti_labels(base.string() + "_pred.nii.gz", p.labels.labels, p.labels.spacing);
    if (a.save_probs) {
      const char* names[3] = {"wt", "tc", "et"};
      for (int k = 0; k < 3; ++k) {
        write_nifti(base.string() + "_prob_" + names[k] + ".nii.gz", p.probs[k], c.images.spacing,
                    NiftiType::Float32);
      }
    }
    std::lock_guard lock(mu);
    out << "predicted " << ids[i] << "\n";
  });
}

fs::path find_prediction(const fs::path& pred, const std::string& id) {
  const fs::path candidates[] = {pred / (id + "_pred.nii.gz"), pred / id / (id + "_pred.nii.gz"),
                                 pred / id / (id + "_seg.nii.gz")};
  for (const auto& c : candidates) {
    if (fs::is_regular_file(c)) return c;
  }
  throw Error("no prediction for case " + id + " under " + pred.string());
}

struct EvaluateArgs {
  std::string pred, truth, out;
  double percentile = 100.0;
  int workers = 1;
};

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  require_dir(a.pred, "prediction");
  require_dir(a.truth, "truth");
  if (!(a.percentile > 0.0 && a.percentile <= 100.0)) throw Error("--hausdorff-percentile must be in (0,100]");
  std::vector<std::string> ids;
  for (const auto& id : list_cases(a.truth)) {
    if (fs::is_regular_file(case_file(a.truth, id, "seg"))) ids.push_back(id);
  }
  if (ids.empty()) throw Error("evaluate: no labelled cases in " + a.truth);
  std::vector<std::array<MetricsRecord, 3>> per_case(ids.size());
  parallel_for(ids.size(), a.workers, [&](std::size_t i, int) {
    Spacing sp;
    LabelMap truth{read_nifti_labels(case_file(a.truth, ids[i], "seg"), &sp), sp};
    LabelMap pred{read_nifti_labels(find_prediction(a.pred, ids[i])), sp};
    if (!(pred.shape() == truth.shape())) {
      throw Error("evaluate: shape mismatch for case " + ids[i] + ": " + pred.shape().str() + " vs " +
                  truth.shape().str());
    }
    per_case[i] = evaluate_case(pred, truth, ids[i], a.percentile);
  });
  std::vector<MetricsRecord> records;
  for (const auto& rs : per_case) records.insert(records.end(), rs.begin(), rs.end());
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  write_metrics_csv(a.out, records);
  out << "evaluated " << ids.size() << " cases\n";
}

struct ReportArgs {
  std::string metrics, out, dataset = "dataset";
};

void cmd_report(const ReportArgs& a, std::ostream& out) {
  if (!fs::is_regular_file(a.metrics)) throw Error("metrics file not found: " + a.metrics);
  const auto rows = summarize(read_metrics_csv(a.metrics));
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  write_summary_csv(a.out, rows, a.dataset);
  out << "summarized " << rows.size() << " regions\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cascaded 3D U-Net brain tumor segmentation pipeline", "cseg"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate synthetic phantom cases");
  s->add_option("--cases", synth.cases, "Number of cases")->required();
  s->add_option("--size", synth.size, "Cubic volume extent")->required()->check(CLI::Range(32, 1024));
  s->add_option("--out", synth.out, "Output dataset directory")->required();
  s->add_option("--seed", synth.seed, "Random seed");
  s->add_option("--noise", synth.noise, "Noise sigma relative to brain intensity")->check(CLI::Range(0.0, 10.0));
  s->add_option("--bias-amplitude", synth.bias_amplitude, "Injected bias amplitude (0 disables)")
      ->check(CLI::Range(0.0, 0.5));
  s->add_option("--bias-degree", synth.bias_degree, "Injected bias polynomial degree")->check(CLI::Range(1, 3));

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Bias-correct and normalize a dataset");
  p->add_option("--in", pre.in, "Input dataset directory")->required();
  p->add_option("--out", pre.out, "Output dataset directory")->required();
  p->add_option("--bias-degree", pre.bias_degree, "Polynomial degree of the estimated field")->check(CLI::Range(1, 4));
  p->add_option("--external-bias-cmd", pre.external_cmd, "Command with {in} and {out} placeholders");
  p->add_flag("--no-bias-correction", pre.no_bias, "Normalize only");
  p->add_option("--workers", pre.workers, "Parallel cases")->check(CLI::PositiveNumber);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the cascade");
  t->add_option("--data", train.data, "Preprocessed dataset directory")->required();
  t->add_option("--config", train.config, "INI configuration file");
  t->add_option("--out", train.out, "Run directory")->required();
  t->add_option("--set", train.overrides, "Override a config key: section.key=value");
  t->add_option("--resume", train.resume, "Checkpoint to resume from");
  t->add_flag("--quiet", train.quiet, "No per-epoch output");

  InferArgs infer;
  auto* i = app.add_subcommand("infer", "Predict label maps");
  i->add_option("--checkpoint", infer.checkpoint, "Trained checkpoint")->required();
  i->add_option("--data", infer.data, "Preprocessed dataset directory")->required();
  i->add_option("--out", infer.out, "Output directory")->required();
  i->add_flag("--save-probs", infer.save_probs, "Also write per-step probability maps");
  i->add_option("--patch-size", infer.patch_size, "Patch extent (1 or 3 values)")->expected(1, 3);
  i->add_option("--stride", infer.stride, "Grid stride (1 or 3 values)")->expected(1, 3);
  i->add_option("--workers", infer.workers, "Parallel cases")->check(CLI::PositiveNumber);

  EvaluateArgs eval;
  auto* e = app.add_subcommand("evaluate", "Per-case metrics against reference labels");
  e->add_option("--pred", eval.pred, "Prediction directory")->required();
  e->add_option("--truth", eval.truth, "Reference dataset directory")->required();
  e->add_option("--out", eval.out, "metrics.csv path")->required();
  e->add_option("--hausdorff-percentile", eval.percentile, "Hausdorff percentile (100 = maximum)");
  e->add_option("--workers", eval.workers, "Parallel cases")->check(CLI::PositiveNumber);

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Boxplot statistics per region and metric");
  r->add_option("--metrics", report.metrics, "metrics.csv from evaluate")->required();
  r->add_option("--out", report.out, "summary.csv path")->required();
  r->add_option("--dataset", report.dataset, "Dataset label written in every row");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << "cseg: " << ex.what() << "\n";
    return 2;
  }

  try {
    check_device();
    if (s->parsed()) cmd_synth(synth, out);
    else if (p->parsed()) cmd_preprocess(pre, out);
    else if (t->parsed()) cmd_train(train, out);
    else if (i->parsed()) cmd_infer(infer, out);
    else if (e->parsed()) cmd_evaluate(eval, out);
    else if (r->parsed()) cmd_report(report, out);
  } catch (const std::exception& ex) {
    std::string msg = ex.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "cseg: error: " << msg << "\n";
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace cseg::cli

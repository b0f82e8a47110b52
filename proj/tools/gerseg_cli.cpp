// Command-line front end: dataset synthesis, training, evaluation,
// parameter accounting, and equivariance verification.
//
// Exit codes: 0 ok, 1 verification failure, 2 usage error, 3 config error,
// 4 file format error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gerseg/checkpoint.hpp"
#include "gerseg/common.hpp"
#include "gerseg/data.hpp"
#include "gerseg/equicheck.hpp"
#include "gerseg/io.hpp"
#include "gerseg/metrics.hpp"
#include "gerseg/model.hpp"
#include "gerseg/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitFormat = 4;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gerseg::ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw gerseg::FormatError("cannot write file: " + path);
  out << text;
}

// ---- train run configuration (model + train + paths) ----

struct RunConfig {
  gerseg::models::ModelConfig model;
  gerseg::train::TrainConfig train;
  std::string data_dir;
  std::string out_dir;
  std::string dtype = "f32";
};

json run_config_to_json(const RunConfig& rc) {
  return json{{"model", json::parse(gerseg::models::model_config_to_json_text(rc.model, -1))},
              {"train", json::parse(gerseg::train::train_config_to_json_text(rc.train, -1))},
              {"data_dir", rc.data_dir},
              {"out_dir", rc.out_dir},
              {"dtype", rc.dtype}};
}

RunConfig run_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw gerseg::ConfigError(std::string("bad run config JSON: ") + e.what());
  }
  if (!j.is_object()) throw gerseg::ConfigError("run config must be a JSON object");
  RunConfig rc;
  for (const auto& [key, value] : j.items()) {
    if (key == "model") {
      rc.model = gerseg::models::model_config_from_json_text(value.dump());
    } else if (key == "train") {
      rc.train = gerseg::train::train_config_from_json_text(value.dump());
    } else if (key == "data_dir") {
      rc.data_dir = value.get<std::string>();
    } else if (key == "out_dir") {
      rc.out_dir = value.get<std::string>();
    } else if (key == "dtype") {
      rc.dtype = value.get<std::string>();
    } else {
      throw gerseg::ConfigError("unknown run config key '" + key + "'");
    }
  }
  if (rc.data_dir.empty()) throw gerseg::ConfigError("run config: data_dir is required");
  if (rc.out_dir.empty()) throw gerseg::ConfigError("run config: out_dir is required");
  if (rc.dtype != "f32" && rc.dtype != "f64") {
    throw gerseg::ConfigError("run config: dtype must be 'f32' or 'f64'");
  }
  return rc;
}

json report_to_json(const gerseg::metrics::MetricsReport& r) {
  return json{{"dice", r.dice},
              {"hausdorff", r.hausdorff},
              {"jaccard", r.jaccard},
              {"precision", r.precision},
              {"recall", r.recall},
              {"specificity", r.specificity},
              {"f1", r.f1},
              {"n_images", r.n_images},
              {"n_hausdorff_undefined", r.n_hausdorff_undefined}};
}

json history_to_json(const gerseg::train::History& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"loss", e.mean_loss},
                      {"val_dice", e.val_dice},
                      {"lr", e.lr},
                      {"seconds", e.seconds}});
  }
  return json{{"epochs", std::move(epochs)},
              {"best_epoch", h.best_epoch},
              {"best_val_dice", h.best_val_dice},
              {"train_count", h.train_count},
              {"val_count", h.val_count}};
}

// ---- subcommands ----

int run_synth(const std::string& spec_path, const std::string& out_dir, bool print_defaults) {
  gerseg::data::SynthSpec spec;
  if (print_defaults) {
    std::cout << gerseg::data::synth_spec_to_json_text(spec) << "\n";
    return kExitOk;
  }
  if (!spec_path.empty()) {
    spec = gerseg::data::synth_spec_from_json_text(read_text_file(spec_path));
  }
  const gerseg::data::Dataset ds = gerseg::data::generate(spec);
  gerseg::data::save_dataset(out_dir, ds, spec);
  std::cout << "wrote " << ds.count() << " samples to " << out_dir << "\n";
  return kExitOk;
}

template <typename T>
int run_train_typed(const RunConfig& rc) {
  const gerseg::data::Dataset ds = gerseg::data::load_dataset(rc.data_dir);
  auto model = gerseg::models::build_model<T>(rc.model);
  model->init_params(rc.train.seed);
  fs::create_directories(rc.out_dir);
  write_text_file((fs::path(rc.out_dir) / "config.json").string(), run_config_to_json(rc).dump(2) + "\n");
  const std::string ckpt = (fs::path(rc.out_dir) / "checkpoint.geru").string();
  const gerseg::train::History hist = gerseg::train::train_model(*model, ds, rc.train, ckpt, &std::cout);
  write_text_file((fs::path(rc.out_dir) / "history.json").string(), history_to_json(hist).dump(2) + "\n");
  std::cout << "best epoch " << hist.best_epoch << " val_dice " << hist.best_val_dice << "\n";
  std::cout << "checkpoint " << ckpt << "\n";
  return kExitOk;
}

int run_train(const std::string& config_path, bool print_defaults) {
  if (print_defaults) {
    std::cout << run_config_to_json(RunConfig{}).dump(2) << "\n";
    return kExitOk;
  }
  if (config_path.empty()) throw gerseg::ConfigError("train: --config is required");
  const RunConfig rc = run_config_from_json_text(read_text_file(config_path));
  return rc.dtype == "f64" ? run_train_typed<double>(rc) : run_train_typed<float>(rc);
}

template <typename T>
int run_eval_typed(const std::string& ckpt_path, const gerseg::models::ModelConfig& cfg,
                   const std::string& data_dir, const std::string& report_path,
                   const std::string& dump_dir, double hd_percentile) {
  auto model = gerseg::models::build_model<T>(cfg);
  gerseg::checkpoint::load_model(ckpt_path, *model);
  const gerseg::data::Dataset ds = gerseg::data::load_dataset(data_dir);
  gerseg::models::SegNet<T>& net = *model;

  const auto preds = gerseg::train::predict_masks(net, ds);
  gerseg::metrics::MetricsAccumulator acc;
  for (int i = 0; i < ds.count(); ++i) {
    acc.add(preds[static_cast<size_t>(i)], ds.samples[static_cast<size_t>(i)].mask, hd_percentile);
  }
  const gerseg::metrics::MetricsReport report = acc.report();

  const json jr = report_to_json(report);
  if (!report_path.empty()) write_text_file(report_path, jr.dump(2) + "\n");
  std::cout << jr.dump(2) << "\n";

  if (!dump_dir.empty()) {
    fs::create_directories(dump_dir);
    for (int i = 0; i < ds.count(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "pred_%05d.pgm", i);
      gerseg::io::write_pgm((fs::path(dump_dir) / name).string(), preds[static_cast<size_t>(i)]);
    }
  }
  return kExitOk;
}

int run_eval(const std::string& ckpt_path, const std::string& data_dir, const std::string& report_path,
             const std::string& dump_dir, const std::string& dtype_flag, double hd_percentile) {
  const gerseg::checkpoint::CheckpointInfo info = gerseg::checkpoint::peek_checkpoint(ckpt_path);
  const std::string dtype = dtype_flag.empty() ? info.dtype : dtype_flag;
  if (dtype == "f64") {
    return run_eval_typed<double>(ckpt_path, info.config, data_dir, report_path, dump_dir, hd_percentile);
  }
  return run_eval_typed<float>(ckpt_path, info.config, data_dir, report_path, dump_dir, hd_percentile);
}

int run_params(const std::vector<std::string>& archs, int base_channels, const std::string& json_path) {
  json out = json::object();
  int64_t group_total = -1, regular_total = -1;
  for (const auto& arch : archs) {
    gerseg::models::ModelConfig cfg;
    cfg.arch = arch;
    cfg.base_channels = base_channels;
    auto model = gerseg::models::build_model<float>(cfg);
    const auto table = model->layer_table();
    int64_t total = 0;
    json jlayers = json::array();
    std::cout << arch << " (base_channels " << base_channels << ")\n";
    for (const auto& [name, count] : table) {
      std::printf("  %-14s %10lld\n", name.c_str(), static_cast<long long>(count));
      jlayers.push_back({{"name", name}, {"params", count}});
      total += count;
    }
    std::printf("  %-14s %10lld\n", "total", static_cast<long long>(total));
    out[arch] = json{{"total", total}, {"layers", std::move(jlayers)}};
    (arch == "ger-unet" ? group_total : regular_total) = total;
  }
  if (group_total > 0 && regular_total > 0) {
    const double ratio = static_cast<double>(group_total) / static_cast<double>(regular_total);
    std::printf("ratio ger-unet/r-unet: %.4f\n", ratio);
    out["ratio"] = ratio;
  }
  if (!json_path.empty()) write_text_file(json_path, out.dump(2) + "\n");
  return kExitOk;
}

template <typename T>
int run_equicheck_typed(const std::string& arch, const std::string& ckpt_path, int base_channels,
                        int trials, int size, uint64_t seed, double tolerance,
                        const std::string& json_path) {
  gerseg::models::ModelConfig cfg;
  cfg.arch = arch;
  cfg.base_channels = base_channels;
  std::unique_ptr<gerseg::models::SegNet<T>> model;
  if (!ckpt_path.empty()) {
    const auto info = gerseg::checkpoint::peek_checkpoint(ckpt_path);
    if (info.config.arch != arch) {
      throw gerseg::ConfigError("equicheck: checkpoint arch '" + info.config.arch +
                                "' does not match --arch '" + arch + "'");
    }
    model = gerseg::models::build_model<T>(info.config);
    gerseg::checkpoint::load_model(ckpt_path, *model);
  } else {
    model = gerseg::models::build_model<T>(cfg);
    model->init_params(seed);
  }

  std::vector<gerseg::equicheck::CheckRow> rows =
      arch == "ger-unet" ? gerseg::equicheck::layer_checks<T>(trials, seed)
                         : gerseg::equicheck::plain_layer_checks<T>(trials, seed);
  rows.push_back(gerseg::equicheck::model_check(*model, trials, seed + 1, size));

  json jrows = json::array();
  double worst = 0;
  std::printf("%-26s", "layer");
  for (int gi = 0; gi < gerseg::kGroupSize; ++gi) std::printf("        g%d", gi);
  std::printf("       max\n");
  for (const auto& row : rows) {
    std::printf("%-26s", row.name.c_str());
    json jerr = json::array();
    for (double e : row.err) {
      std::printf("  %8.1e", e);
      jerr.push_back(e);
    }
    std::printf("  %8.1e\n", row.max_err());
    worst = std::max(worst, row.max_err());
    jrows.push_back({{"name", row.name}, {"errors", std::move(jerr)}, {"max", row.max_err()}});
  }
  const bool pass = worst <= tolerance;
  std::printf("max error %.3e, tolerance %.3e: %s\n", worst, tolerance, pass ? "PASS" : "FAIL");
  if (!json_path.empty()) {
    write_text_file(json_path, json{{"arch", arch},
                                    {"dtype", std::is_same_v<T, double> ? "f64" : "f32"},
                                    {"trials", trials},
                                    {"tolerance", tolerance},
                                    {"rows", std::move(jrows)},
                                    {"max_error", worst},
                                    {"pass", pass}}
                                   .dump(2) +
                                   "\n");
  }
  return pass ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group-equivariant segmentation toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_spec, synth_out;
  bool synth_defaults = false;
  synth->add_option("--spec", synth_spec, "synth spec JSON file");
  synth->add_option("--out", synth_out, "output dataset directory");
  synth->add_flag("--print-defaults", synth_defaults, "print the default spec and exit");

  // train
  auto* train = app.add_subcommand("train", "train a model");
  std::string train_config;
  bool train_defaults = false;
  train->add_option("--config", train_config, "run config JSON file");
  train->add_flag("--print-defaults", train_defaults, "print the default run config and exit");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string eval_ckpt, eval_data, eval_report, eval_dump, eval_dtype;
  double eval_hd_pct = 100.0;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--report", eval_report, "metrics report JSON output path");
  eval->add_option("--dump-masks", eval_dump, "directory for predicted masks as PGM");
  eval->add_option("--dtype", eval_dtype, "evaluate at this precision (default: checkpoint's)")
      ->check(CLI::IsMember({"f32", "f64"}));
  eval->add_option("--hausdorff-percentile", eval_hd_pct, "percentile Hausdorff variant (default 100 = max)")
      ->check(CLI::Range(1.0, 100.0));

  // params
  auto* params = app.add_subcommand("params", "parameter counts per layer");
  std::vector<std::string> params_archs;
  int params_base = 32;
  std::string params_json;
  params->add_option("--arch", params_archs, "architecture (repeatable)")
      ->required()
      ->check(CLI::IsMember({"ger-unet", "r-unet"}));
  params->add_option("--base-channels", params_base, "regular model width (default 32)")
      ->check(CLI::PositiveNumber);
  params->add_option("--json", params_json, "write the table as JSON here");

  // equicheck
  auto* equi = app.add_subcommand("equicheck", "measure equivariance errors");
  std::string equi_arch = "ger-unet", equi_ckpt, equi_dtype = "f64", equi_json;
  int equi_trials = 3, equi_base = 16, equi_size = 64;
  uint64_t equi_seed = 7;
  double equi_tol = 1e-8;
  equi->add_option("--arch", equi_arch, "architecture")->check(CLI::IsMember({"ger-unet", "r-unet"}));
  equi->add_option("--checkpoint", equi_ckpt, "use trained weights from this checkpoint");
  equi->add_option("--trials", equi_trials, "random trials (default 3)")->check(CLI::PositiveNumber);
  equi->add_option("--dtype", equi_dtype, "precision (default f64)")
      ->check(CLI::IsMember({"f32", "f64"}));
  equi->add_option("--tolerance", equi_tol, "max allowed relative error (default 1e-8)");
  equi->add_option("--base-channels", equi_base, "model width for random-weight checks (default 16)")
      ->check(CLI::PositiveNumber);
  equi->add_option("--size", equi_size, "input size for the end-to-end check (default 64)");
  equi->add_option("--seed", equi_seed, "random seed");
  equi->add_option("--json", equi_json, "write results as JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      if (!synth_defaults && synth_out.empty()) {
        std::cerr << "synth: --out is required\n";
        return kExitUsage;
      }
      return run_synth(synth_spec, synth_out, synth_defaults);
    }
    if (train->parsed()) return run_train(train_config, train_defaults);
    if (eval->parsed()) {
      return run_eval(eval_ckpt, eval_data, eval_report, eval_dump, eval_dtype, eval_hd_pct);
    }
    if (params->parsed()) return run_params(params_archs, params_base, params_json);
    if (equi->parsed()) {
      if (equi_size % 8 != 0) {
        std::cerr << "equicheck: --size must be divisible by 8\n";
        return kExitUsage;
      }
      return equi_dtype == "f32"
                 ? run_equicheck_typed<float>(equi_arch, equi_ckpt, equi_base, equi_trials, equi_size,
                                              equi_seed, equi_tol, equi_json)
                 : run_equicheck_typed<double>(equi_arch, equi_ckpt, equi_base, equi_trials, equi_size,
                                               equi_seed, equi_tol, equi_json);
    }
  } catch (const gerseg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gerseg::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const gerseg::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerification;
  }
  return kExitUsage;
}

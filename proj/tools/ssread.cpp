// Command-line front end: trains GNN classifiers with global or structural
// semantic readout on TU-format datasets, exports node-position alignments
// and CAM explanations from saved checkpoints.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ssread/checkpoint.hpp"
#include "ssread/folds.hpp"
#include "ssread/train.hpp"

namespace {

using nlohmann::json;
using namespace ssread;

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;   // dataset parse error
constexpr int kExitConfig = 2;  // configuration / lookup error
constexpr int kExitDiverged = 3;

struct CommonArgs {
  std::string data_dir;
  std::string name;  // defaults to the basename of data_dir

  std::string dataset_name() const {
    if (!name.empty()) return name;
    return std::filesystem::path(data_dir).filename().string();
  }
};

struct TrainArgs {
  CommonArgs common;
  std::string out_dir = "out";
  std::string readout = "ssread";
  std::string agg = "sum";
  std::string mode = "supervised";
  std::string optimizer = "adam";
  std::string features = "auto";
  std::string classifier = "linear";
  ModelConfig cfg;
  bool no_stratify = false;
};

ModelConfig resolve_config(TrainArgs& args) {
  ModelConfig cfg = args.cfg;
  cfg.readout = readout_from_name(args.readout);
  cfg.agg = agg_from_name(args.agg);
  cfg.mode = mode_from_name(args.mode);
  cfg.feature_policy = policy_from_name(args.features);
  cfg.optimizer = args.optimizer == "sgd" ? OptimizerKind::GradientDescent : OptimizerKind::Adam;
  cfg.classifier = args.classifier == "mlp" ? ClassifierKind::Mlp : ClassifierKind::Linear;
  cfg.stratify = !args.no_stratify;
  if (const char* env_seed = std::getenv("SSREAD_SEED")) cfg.seed = std::stoull(env_seed);
  validate_config(cfg);
  return cfg;
}

int cmd_train(TrainArgs& args) {
  const ModelConfig cfg = resolve_config(args);
  const Dataset ds =
      parse_tu(args.common.data_dir, args.common.dataset_name(), cfg.feature_policy, cfg.degree_cap);
  const FoldPlan plan = make_folds(ds, cfg.folds, cfg.seed, cfg.stratify);

  const RunReport report = cfg.mode == TrainMode::Supervised
                               ? train_supervised(ds, plan, cfg)
                               : train_contrastive(ds, plan, cfg);

  const std::filesystem::path out(args.out_dir);
  std::filesystem::create_directories(out);
  write_report_csv(report, out / "report.csv");
  write_curves_csv(report, out / "curves.csv");
  write_report_json(report, out / "report.json");

  // Checkpoint the fold with the best validation metric (first on ties).
  std::size_t best = 0;
  for (std::size_t i = 1; i < report.folds.size(); ++i)
    if (report.folds[i].best_val_metric > report.folds[best].best_val_metric) best = i;
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.dataset = ds.name;
  ckpt.feature_dim = ds.feature_dim;
  ckpt.num_classes = ds.num_classes;
  ckpt.fold = report.folds[best].fold;
  ckpt.seed = report.folds[best].seed;
  ckpt.model = report.folds[best].model;
  save_checkpoint(ckpt, out / "checkpoint.json");

  std::cout << "dataset=" << ds.name << " folds=" << plan.num_folds << " repeats=" << cfg.repeats
            << " mean_accuracy=" << report.mean_accuracy << " std=" << report.std_accuracy
            << " wall_seconds=" << report.wall_seconds << "\n";
  return kExitOk;
}

json config_record(const Checkpoint& ckpt) {
  return json{{"config", config_to_json(ckpt.config)},
              {"dataset", ckpt.dataset},
              {"fold", ckpt.fold},
              {"seed", ckpt.seed}};
}

int cmd_align(const CommonArgs& common, const std::string& checkpoint_path,
              const std::string& out_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  if (!ckpt.model.prototypes)
    throw ConfigError("alignment export requires an ssread checkpoint (no prototypes found)");
  const Dataset ds = parse_tu(common.data_dir, common.dataset_name(), ckpt.config.feature_policy,
                              ckpt.config.degree_cap);

  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write " + out_path);
  out << config_record(ckpt).dump() << "\n";
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    const Graph& g = ds.graphs[i];
    const Matrix h = gcn_forward(normalize_adjacency(g), g.features, ckpt.model.theta);
    const Alignment a = align(h, *ckpt.model.prototypes);
    out << json{{"graph_id", i}, {"assign", a.assign}, {"cost", a.cost}}.dump() << "\n";
  }
  std::cout << "wrote " << ds.graphs.size() << " alignment records to " << out_path << "\n";
  return kExitOk;
}

int cmd_explain(const CommonArgs& common, const std::string& checkpoint_path,
                const std::string& out_path, int target_class,
                const std::vector<int>& graph_ids) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const Dataset ds = parse_tu(common.data_dir, common.dataset_name(), ckpt.config.feature_policy,
                              ckpt.config.degree_cap);
  if (target_class >= ds.num_classes)
    throw ConfigError("class index " + std::to_string(target_class) + " out of range [0," +
                      std::to_string(ds.num_classes) + ")");

  std::vector<int> ids = graph_ids;
  if (ids.empty()) {
    ids.resize(ds.graphs.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  }
  for (int id : ids)
    if (id < 0 || id >= static_cast<int>(ds.graphs.size()))
      throw ConfigError("graph id " + std::to_string(id) + " out of range");

  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write " + out_path);
  out << config_record(ckpt).dump() << "\n";
  for (int id : ids) {
    const Graph& g = ds.graphs[id];
    const int cls = target_class >= 0 ? target_class : g.label;
    const CamReport report = cam(g, ckpt.model, cls);
    out << json{{"graph_id", id}, {"class", cls}, {"cam", report.cam}}.dump() << "\n";
  }
  std::cout << "wrote " << ids.size() << " CAM records to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph classification with structural semantic readout over TU datasets"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Cross-validated training");
  train->set_config("--config");
  train->allow_config_extras(false);
  train->add_option("--data", train_args.common.data_dir, "TU dataset directory")->required();
  train->add_option("--name", train_args.common.name, "dataset name (default: basename of --data)");
  train->add_option("--out", train_args.out_dir, "output directory")->capture_default_str();
  train->add_option("--readout", train_args.readout, "gread|ssread")->capture_default_str();
  train->add_option("--agg", train_args.agg, "sum|max|mean|attention")->capture_default_str();
  train->add_option("--k", train_args.cfg.k, "number of structural positions (ssread)");
  train->add_option("--gamma", train_args.cfg.gamma, "soft-min smoothing")->capture_default_str();
  train->add_option("--lr", train_args.cfg.lr, "learning rate")->capture_default_str();
  train->add_option("--epochs", train_args.cfg.epochs_max, "max epochs")->capture_default_str();
  train->add_option("--patience", train_args.cfg.patience, "early-stop patience")
      ->capture_default_str();
  train->add_option("--batch", train_args.cfg.batch_size, "minibatch size")->capture_default_str();
  train->add_option("--seed", train_args.cfg.seed, "random seed (env SSREAD_SEED overrides)")
      ->capture_default_str();
  train->add_option("--folds", train_args.cfg.folds, "cross-validation folds")
      ->capture_default_str();
  train->add_option("--mode", train_args.mode, "supervised|contrastive")->capture_default_str();
  train->add_option("--jobs", train_args.cfg.jobs, "parallel fold workers")->capture_default_str();
  train->add_option("--repeats", train_args.cfg.repeats, "number of seeds to run")
      ->capture_default_str();
  train->add_option("--hidden", train_args.cfg.hidden_dim, "encoder width")->capture_default_str();
  train->add_option("--layers", train_args.cfg.num_layers, "encoder depth")->capture_default_str();
  train->add_option("--optimizer", train_args.optimizer, "adam|sgd")->capture_default_str();
  train->add_option("--classifier", train_args.classifier, "linear|mlp")->capture_default_str();
  train->add_option("--mlp-hidden", train_args.cfg.mlp_hidden,
                    "mlp classifier width (0 = encoder width)")
      ->capture_default_str();
  train->add_option("--features", train_args.features, "auto|one-hot|constant|degree")
      ->capture_default_str();
  train->add_option("--degree-cap", train_args.cfg.degree_cap, "degree feature cap")
      ->capture_default_str();
  train->add_option("--temperature", train_args.cfg.temperature, "contrastive similarity scale")
      ->capture_default_str();
  train->add_option("--drop-ratio", train_args.cfg.drop_ratio, "node-drop augmentation ratio")
      ->capture_default_str();
  train->add_flag("--no-stratify", train_args.no_stratify, "plain random folds");
  train->add_flag("--select-by-loss", train_args.cfg.select_by_loss,
                  "early-stop on validation loss instead of accuracy");
  train->add_flag("--align-into-encoder", train_args.cfg.align_into_encoder,
                  "let the alignment loss also update the encoder");

  CommonArgs align_common;
  std::string align_checkpoint, align_out = "alignment.jsonl";
  CLI::App* align_cmd = app.add_subcommand("align", "Export node-position alignments");
  align_cmd->add_option("--checkpoint", align_checkpoint, "checkpoint file")->required();
  align_cmd->add_option("--data", align_common.data_dir, "TU dataset directory")->required();
  align_cmd->add_option("--name", align_common.name, "dataset name");
  align_cmd->add_option("--out", align_out, "output JSONL file")->capture_default_str();

  CommonArgs explain_common;
  std::string explain_checkpoint, explain_out = "cam.jsonl";
  int explain_class = -1;  // -1: each graph's own label
  std::vector<int> explain_graphs;
  CLI::App* explain_cmd = app.add_subcommand("explain", "Export CAM node attributions");
  explain_cmd->add_option("--checkpoint", explain_checkpoint, "checkpoint file")->required();
  explain_cmd->add_option("--data", explain_common.data_dir, "TU dataset directory")->required();
  explain_cmd->add_option("--name", explain_common.name, "dataset name");
  explain_cmd->add_option("--class", explain_class, "target class (default: each graph's label)");
  explain_cmd->add_option("--graphs", explain_graphs, "graph ids (default: all)")->delimiter(',');
  explain_cmd->add_option("--out", explain_out, "output JSONL file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*align_cmd) return cmd_align(align_common, align_checkpoint, align_out);
    if (*explain_cmd)
      return cmd_explain(explain_common, explain_checkpoint, explain_out, explain_class,
                         explain_graphs);
  } catch (const TuParseError& e) {
    std::cerr << "dataset parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

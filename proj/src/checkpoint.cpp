#include "ssread/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace ssread {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const json& j) {
  return Matrix(j.at("rows").get<int>(), j.at("cols").get<int>(),
                j.at("data").get<std::vector<double>>());
}

const char* readout_name(ReadoutKind k) { return k == ReadoutKind::SSRead ? "ssread" : "gread"; }

const char* agg_name(AggregatorKind k) {
  switch (k) {
    case AggregatorKind::Sum: return "sum";
    case AggregatorKind::Max: return "max";
    case AggregatorKind::Mean: return "mean";
    case AggregatorKind::Attention: return "attention";
  }
  return "sum";
}

const char* mode_name(TrainMode m) {
  return m == TrainMode::Supervised ? "supervised" : "contrastive";
}

const char* policy_name(FeaturePolicy p) {
  switch (p) {
    case FeaturePolicy::Auto: return "auto";
    case FeaturePolicy::NodeLabelOneHot: return "one-hot";
    case FeaturePolicy::ConstantOne: return "constant";
    case FeaturePolicy::DegreeOneHot: return "degree";
  }
  return "auto";
}

template <typename T>
T parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, T>> table,
             const char* what) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  throw ConfigError(std::string("unknown ") + what + ": " + s);
}

}  // namespace

ReadoutKind readout_from_name(const std::string& s) {
  return parse_enum<ReadoutKind>(
      s, {{"ssread", ReadoutKind::SSRead}, {"gread", ReadoutKind::GRead}}, "readout");
}

AggregatorKind agg_from_name(const std::string& s) {
  return parse_enum<AggregatorKind>(s,
                                    {{"sum", AggregatorKind::Sum},
                                     {"max", AggregatorKind::Max},
                                     {"mean", AggregatorKind::Mean},
                                     {"attention", AggregatorKind::Attention}},
                                    "aggregator");
}

TrainMode mode_from_name(const std::string& s) {
  return parse_enum<TrainMode>(
      s, {{"supervised", TrainMode::Supervised}, {"contrastive", TrainMode::Contrastive}}, "mode");
}

FeaturePolicy policy_from_name(const std::string& s) {
  return parse_enum<FeaturePolicy>(s,
                                   {{"auto", FeaturePolicy::Auto},
                                    {"one-hot", FeaturePolicy::NodeLabelOneHot},
                                    {"constant", FeaturePolicy::ConstantOne},
                                    {"degree", FeaturePolicy::DegreeOneHot}},
                                   "feature policy");
}

json config_to_json(const ModelConfig& cfg) {
  return json{{"readout", readout_name(cfg.readout)},
              {"agg", agg_name(cfg.agg)},
              {"k", cfg.k},
              {"gamma", cfg.gamma},
              {"lr", cfg.lr},
              {"epochs", cfg.epochs_max},
              {"patience", cfg.patience},
              {"batch", cfg.batch_size},
              {"seed", cfg.seed},
              {"folds", cfg.folds},
              {"mode", mode_name(cfg.mode)},
              {"hidden_dim", cfg.hidden_dim},
              {"num_layers", cfg.num_layers},
              {"optimizer", cfg.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
              {"classifier", cfg.classifier == ClassifierKind::Linear ? "linear" : "mlp"},
              {"mlp_hidden", cfg.mlp_hidden},
              {"stratify", cfg.stratify},
              {"feature_policy", policy_name(cfg.feature_policy)},
              {"degree_cap", cfg.degree_cap},
              {"temperature", cfg.temperature},
              {"drop_ratio", cfg.drop_ratio},
              {"select_by_loss", cfg.select_by_loss},
              {"align_into_encoder", cfg.align_into_encoder},
              {"jobs", cfg.jobs},
              {"repeats", cfg.repeats}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.readout = readout_from_name(j.at("readout").get<std::string>());
  cfg.agg = agg_from_name(j.at("agg").get<std::string>());
  cfg.k = j.at("k").get<int>();
  cfg.gamma = j.at("gamma").get<double>();
  cfg.lr = j.at("lr").get<double>();
  cfg.epochs_max = j.at("epochs").get<int>();
  cfg.patience = j.at("patience").get<int>();
  cfg.batch_size = j.at("batch").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.folds = j.at("folds").get<int>();
  cfg.mode = mode_from_name(j.at("mode").get<std::string>());
  cfg.hidden_dim = j.at("hidden_dim").get<int>();
  cfg.num_layers = j.at("num_layers").get<int>();
  cfg.optimizer = j.at("optimizer").get<std::string>() == "adam" ? OptimizerKind::Adam
                                                                 : OptimizerKind::GradientDescent;
  cfg.classifier =
      j.at("classifier").get<std::string>() == "mlp" ? ClassifierKind::Mlp : ClassifierKind::Linear;
  cfg.mlp_hidden = j.at("mlp_hidden").get<int>();
  cfg.stratify = j.at("stratify").get<bool>();
  cfg.feature_policy = policy_from_name(j.at("feature_policy").get<std::string>());
  cfg.degree_cap = j.at("degree_cap").get<int>();
  cfg.temperature = j.at("temperature").get<double>();
  cfg.drop_ratio = j.at("drop_ratio").get<double>();
  cfg.select_by_loss = j.at("select_by_loss").get<bool>();
  cfg.align_into_encoder = j.at("align_into_encoder").get<bool>();
  cfg.jobs = j.at("jobs").get<int>();
  cfg.repeats = j.at("repeats").get<int>();
  return cfg;
}

json model_to_json(const ModelState& state) {
  json j;
  j["gcn_weights"] = json::array();
  for (const Matrix& w : state.theta.weights) j["gcn_weights"].push_back(matrix_to_json(w));
  j["prototypes"] = state.prototypes ? matrix_to_json(state.prototypes->p) : json(nullptr);
  json clf;
  clf["kind"] = state.clf.kind == ClassifierKind::Linear ? "linear" : "mlp";
  if (state.clf.kind == ClassifierKind::Linear) {
    clf["w"] = json::array();
    for (const Matrix& w : state.clf.w) clf["w"].push_back(matrix_to_json(w));
    clf["b"] = matrix_to_json(state.clf.b);
  } else {
    clf["w1"] = matrix_to_json(state.clf.w1);
    clf["b1"] = matrix_to_json(state.clf.b1);
    clf["w2"] = matrix_to_json(state.clf.w2);
    clf["b2"] = matrix_to_json(state.clf.b2);
  }
  j["classifier"] = std::move(clf);
  j["aggregator"] = agg_name(state.agg.kind);
  j["attention_gate"] =
      state.agg.kind == AggregatorKind::Attention ? matrix_to_json(state.agg.gate) : json(nullptr);
  if (state.projection) {
    j["projection"] = json{{"w1", matrix_to_json(state.projection->w1)},
                           {"b1", matrix_to_json(state.projection->b1)},
                           {"w2", matrix_to_json(state.projection->w2)},
                           {"b2", matrix_to_json(state.projection->b2)}};
  } else {
    j["projection"] = json(nullptr);
  }
  return j;
}

ModelState model_from_json(const json& j) {
  ModelState state;
  for (const auto& w : j.at("gcn_weights")) state.theta.weights.push_back(matrix_from_json(w));
  if (!j.at("prototypes").is_null())
    state.prototypes = Prototypes{matrix_from_json(j.at("prototypes"))};
  const json& clf = j.at("classifier");
  if (clf.at("kind").get<std::string>() == "linear") {
    state.clf.kind = ClassifierKind::Linear;
    for (const auto& w : clf.at("w")) state.clf.w.push_back(matrix_from_json(w));
    state.clf.b = matrix_from_json(clf.at("b"));
  } else {
    state.clf.kind = ClassifierKind::Mlp;
    state.clf.w1 = matrix_from_json(clf.at("w1"));
    state.clf.b1 = matrix_from_json(clf.at("b1"));
    state.clf.w2 = matrix_from_json(clf.at("w2"));
    state.clf.b2 = matrix_from_json(clf.at("b2"));
  }
  state.agg.kind = agg_from_name(j.at("aggregator").get<std::string>());
  if (!j.at("attention_gate").is_null()) state.agg.gate = matrix_from_json(j.at("attention_gate"));
  if (!j.at("projection").is_null()) {
    ProjectionHead head;
    head.w1 = matrix_from_json(j.at("projection").at("w1"));
    head.b1 = matrix_from_json(j.at("projection").at("b1"));
    head.w2 = matrix_from_json(j.at("projection").at("w2"));
    head.b2 = matrix_from_json(j.at("projection").at("b2"));
    state.projection = std::move(head);
  }
  return state;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json j;
  j["format"] = "ssread-checkpoint-v1";
  j["config"] = config_to_json(ckpt.config);
  j["dataset"] = ckpt.dataset;
  j["feature_dim"] = ckpt.feature_dim;
  j["num_classes"] = ckpt.num_classes;
  j["fold"] = ckpt.fold;
  j["seed"] = ckpt.seed;
  j["model"] = model_to_json(ckpt.model);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  json j;
  in >> j;
  if (j.value("format", "") != "ssread-checkpoint-v1")
    throw std::runtime_error("unrecognized checkpoint format in " + path.string());
  Checkpoint ckpt;
  ckpt.config = config_from_json(j.at("config"));
  ckpt.dataset = j.at("dataset").get<std::string>();
  ckpt.feature_dim = j.at("feature_dim").get<int>();
  ckpt.num_classes = j.at("num_classes").get<int>();
  ckpt.fold = j.at("fold").get<int>();
  ckpt.seed = j.at("seed").get<std::uint64_t>();
  ckpt.model = model_from_json(j.at("model"));
  return ckpt;
}

std::string config_header_line(const ModelConfig& cfg, const std::string& dataset) {
  const json j = config_to_json(cfg);
  std::ostringstream out;
  out << "# ssread dataset=" << dataset;
  for (const auto& [key, value] : j.items()) out << " " << key << "=" << value.dump();
  return out.str();
}

void write_report_csv(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << config_header_line(report.config, report.dataset) << "\n";
  out << "seed,fold,test_accuracy,best_val_metric,best_epoch,epochs_run\n";
  char buf[64];
  for (const FoldResult& f : report.folds) {
    std::snprintf(buf, sizeof buf, "%.17g", f.test_accuracy);
    out << f.seed << "," << f.fold << "," << buf << ",";
    std::snprintf(buf, sizeof buf, "%.17g", f.best_val_metric);
    out << buf << "," << f.best_epoch << "," << f.epochs_run << "\n";
  }
}

void write_curves_csv(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write curves: " + path.string());
  out << config_header_line(report.config, report.dataset) << "\n";
  out << "seed,fold,epoch,l_class,l_align,val_metric\n";
  char buf[64];
  for (const FoldResult& f : report.folds) {
    for (std::size_t e = 0; e < f.curve.size(); ++e) {
      out << f.seed << "," << f.fold << "," << (e + 1);
      for (const double v : {f.curve[e].l_class, f.curve[e].l_align, f.curve[e].val_metric}) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << "," << buf;
      }
      out << "\n";
    }
  }
}

void write_report_json(const RunReport& report, const std::filesystem::path& path) {
  json j;
  j["config"] = config_to_json(report.config);
  j["dataset"] = report.dataset;
  j["mean_accuracy"] = report.mean_accuracy;
  j["std_accuracy"] = report.std_accuracy;
  j["seed_means"] = report.seed_means;
  j["wall_seconds"] = report.wall_seconds;
  j["folds"] = json::array();
  for (const FoldResult& f : report.folds) {
    j["folds"].push_back(json{{"seed", f.seed},
                              {"fold", f.fold},
                              {"test_accuracy", f.test_accuracy},
                              {"best_val_metric", f.best_val_metric},
                              {"best_epoch", f.best_epoch},
                              {"epochs_run", f.epochs_run}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace ssread

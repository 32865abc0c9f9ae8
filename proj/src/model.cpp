#include "ssread/model.hpp"

namespace ssread {

void validate_config(const ModelConfig& cfg) {
  if (cfg.readout == ReadoutKind::SSRead && cfg.k < 1)
    throw ConfigError("ssread readout requires the number of structural positions (--k)");
  if (cfg.gamma < 0.0) throw ConfigError("gamma must be >= 0");
  if (cfg.lr <= 0.0) throw ConfigError("learning rate must be positive");
  if (cfg.epochs_max < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.patience < 1 || cfg.patience > cfg.epochs_max)
    throw ConfigError("patience must be in [1, epochs]");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (cfg.mode == TrainMode::Contrastive && cfg.batch_size < 2)
    throw ConfigError("contrastive mode needs batch size >= 2 (in-batch negatives)");
  if (cfg.folds < 2) throw ConfigError("folds must be >= 2");
  if (cfg.hidden_dim < 1 || cfg.num_layers < 1) throw ConfigError("bad encoder dimensions");
  if (cfg.drop_ratio < 0.0 || cfg.drop_ratio >= 1.0) throw ConfigError("drop ratio must be in [0, 1)");
  if (cfg.temperature <= 0.0) throw ConfigError("temperature must be positive");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (cfg.repeats < 1) throw ConfigError("repeats must be >= 1");
}

ModelState init_model(const ModelConfig& cfg, int feature_dim, int num_classes,
                      std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x5555));
  ModelState state;
  state.theta = init_gcn(feature_dim, cfg.hidden_dim, cfg.num_layers, rng);
  if (cfg.readout == ReadoutKind::SSRead)
    state.prototypes = init_prototypes(cfg.k, cfg.hidden_dim, rng);
  state.clf = init_classifier(num_classes, cfg.positions(), cfg.hidden_dim, rng, cfg.classifier,
                              cfg.mlp_hidden);
  state.agg = make_aggregator(cfg.agg, cfg.hidden_dim);
  if (cfg.mode == TrainMode::Contrastive) {
    const int flat = cfg.positions() * cfg.hidden_dim;
    ProjectionHead head;
    head.w1 = rng.glorot_matrix(flat, cfg.hidden_dim);
    head.b1 = Matrix(1, cfg.hidden_dim);
    head.w2 = rng.glorot_matrix(cfg.hidden_dim, cfg.hidden_dim);
    head.b2 = Matrix(1, cfg.hidden_dim);
    state.projection = std::move(head);
  }
  return state;
}

Matrix model_summary(const ModelState& state, const Matrix& h, ReadoutCache* cache,
                     Alignment* alignment_out) {
  if (state.prototypes) return ssread(h, *state.prototypes, state.agg, cache, alignment_out);
  return gread(h, state.agg, cache);
}

CamReport cam(const Graph& g, const ModelState& state, int target_class) {
  if (target_class < 0 || target_class >= state.clf.num_classes())
    throw std::invalid_argument("cam: class index out of range");
  const NormAdj adj = normalize_adjacency(g);
  const Matrix h = gcn_forward(adj, g.features, state.theta);
  ReadoutCache cache;
  const Matrix summary = model_summary(state, h, &cache);
  const Matrix d_summary = score_grad_h_bar(summary, state.clf, target_class);
  const ReadoutGrads grads = readout_backward(cache, d_summary);

  CamReport report;
  report.target_class = target_class;
  report.cam.resize(g.num_nodes);
  for (int n = 0; n < g.num_nodes; ++n) report.cam[n] = dot(grads.d_h.row(n), h.row(n));
  return report;
}

}  // namespace ssread

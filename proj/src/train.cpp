#include "ssread/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <span>
#include <thread>

#include "ssread/contrastive.hpp"

namespace ssread {

namespace {

std::vector<NormAdj> dataset_adjacencies(const Dataset& ds) {
  std::vector<NormAdj> adjs;
  adjs.reserve(ds.graphs.size());
  for (const Graph& g : ds.graphs) adjs.push_back(normalize_adjacency(g));
  return adjs;
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct EvalDetail {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::vector<int> predictions;
};

EvalDetail eval_with_adjs(const ModelState& state, const Dataset& ds,
                          const std::vector<NormAdj>& adjs, const std::vector<int>& indices) {
  if (indices.empty()) throw std::invalid_argument("evaluate: empty index set");
  EvalDetail out;
  out.predictions.reserve(indices.size());
  int hits = 0;
  for (int idx : indices) {
    const Graph& g = ds.graphs[idx];
    const Matrix h = gcn_forward(adjs[idx], g.features, state.theta);
    const Matrix summary = model_summary(state, h);
    const auto s = scores(summary, state.clf);
    const int pred = argmax(s);
    out.predictions.push_back(pred);
    hits += (pred == g.label);
    out.mean_loss += cross_entropy(s, g.label).loss;
  }
  out.accuracy = static_cast<double>(hits) / static_cast<double>(indices.size());
  out.mean_loss /= static_cast<double>(indices.size());
  return out;
}

// Every learnable tensor with its gradient accumulator and optimizer slot.
struct ParamBank {
  std::vector<Matrix*> params;
  std::vector<Matrix> grads;
  std::vector<int> slots;

  int add(Matrix* p, Optimizer& opt) {
    params.push_back(p);
    grads.emplace_back(p->rows(), p->cols());
    slots.push_back(opt.add_slot(p->rows(), p->cols()));
    return static_cast<int>(params.size()) - 1;
  }
  void zero() {
    for (auto& g : grads) g.fill(0.0);
  }
  void step(Optimizer& opt, double scale) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (scale != 1.0) scale_inplace(grads[i], scale);
      opt.step(slots[i], *params[i], grads[i]);
    }
  }
};

struct ParamIndex {
  std::vector<int> theta;
  int gate = -1;
  std::vector<int> clf_w;
  int clf_b = -1, clf_w1 = -1, clf_b1 = -1, clf_w2 = -1, clf_b2 = -1;
  int protos = -1;
  int proj_w1 = -1, proj_b1 = -1, proj_w2 = -1, proj_b2 = -1;
};

// Registration order is fixed; it is part of run determinism.
ParamIndex register_params(ModelState& m, Optimizer& opt, ParamBank& bank, bool with_classifier,
                           bool with_projection) {
  ParamIndex ix;
  for (Matrix& w : m.theta.weights) ix.theta.push_back(bank.add(&w, opt));
  if (m.agg.kind == AggregatorKind::Attention) ix.gate = bank.add(&m.agg.gate, opt);
  if (with_classifier) {
    if (m.clf.kind == ClassifierKind::Linear) {
      for (Matrix& w : m.clf.w) ix.clf_w.push_back(bank.add(&w, opt));
      ix.clf_b = bank.add(&m.clf.b, opt);
    } else {
      ix.clf_w1 = bank.add(&m.clf.w1, opt);
      ix.clf_b1 = bank.add(&m.clf.b1, opt);
      ix.clf_w2 = bank.add(&m.clf.w2, opt);
      ix.clf_b2 = bank.add(&m.clf.b2, opt);
    }
  }
  if (m.prototypes) ix.protos = bank.add(&m.prototypes->p, opt);
  if (with_projection && m.projection) {
    ix.proj_w1 = bank.add(&m.projection->w1, opt);
    ix.proj_b1 = bank.add(&m.projection->b1, opt);
    ix.proj_w2 = bank.add(&m.projection->w2, opt);
    ix.proj_b2 = bank.add(&m.projection->b2, opt);
  }
  return ix;
}

void add_theta_grads(ParamBank& bank, const ParamIndex& ix, const GcnGrads& gg) {
  for (std::size_t l = 0; l < ix.theta.size(); ++l)
    axpy(1.0, gg.d_weights[l], bank.grads[ix.theta[l]]);
}

// Forward/backward over one minibatch, accumulating gradients into the bank.
// The cross-entropy path updates the encoder, classifier and gate; the
// alignment path updates only the prototypes (unless align_into_encoder).
std::pair<double, double> supervised_accumulate(const Dataset& ds,
                                                const std::vector<NormAdj>& adjs,
                                                std::span<const int> batch,
                                                const ModelState& model, const ModelConfig& cfg,
                                                ParamBank& bank, const ParamIndex& ix) {
  double class_sum = 0.0, align_sum = 0.0;
  for (int idx : batch) {
    const Graph& g = ds.graphs[idx];
    GcnCache cache;
    const Matrix h = gcn_forward(adjs[idx], g.features, model.theta, &cache);
    ReadoutCache rcache;
    const Matrix summary = model_summary(model, h, &rcache);
    const auto s = scores(summary, model.clf);
    const CrossEntropy ce = cross_entropy(s, g.label);
    class_sum += ce.loss;

    if (!cfg.disable_class_loss) {
      Matrix d_summary;
      const ClassifierGrads cg = classifier_backward(summary, model.clf, ce.d_scores, &d_summary);
      const ReadoutGrads rg = readout_backward(rcache, d_summary);
      const GcnGrads gg = gcn_backward(cache, model.theta, rg.d_h);
      add_theta_grads(bank, ix, gg);
      if (ix.gate >= 0) axpy(1.0, rg.d_gate, bank.grads[ix.gate]);
      if (model.clf.kind == ClassifierKind::Linear) {
        for (std::size_t c = 0; c < cg.d_w.size(); ++c)
          axpy(1.0, cg.d_w[c], bank.grads[ix.clf_w[c]]);
        axpy(1.0, cg.d_b, bank.grads[ix.clf_b]);
      } else {
        axpy(1.0, cg.d_w1, bank.grads[ix.clf_w1]);
        axpy(1.0, cg.d_b1, bank.grads[ix.clf_b1]);
        axpy(1.0, cg.d_w2, bank.grads[ix.clf_w2]);
        axpy(1.0, cg.d_b2, bank.grads[ix.clf_b2]);
      }
    }

    if (model.prototypes) {
      const SoftSsaResult ssa = soft_ssa(h, *model.prototypes, cfg.gamma);
      align_sum += ssa.value;
      if (!cfg.disable_align_loss) {
        axpy(1.0, ssa.d_prototypes, bank.grads[ix.protos]);
        if (cfg.align_into_encoder) {
          const GcnGrads ga = gcn_backward(cache, model.theta, ssa.d_h);
          add_theta_grads(bank, ix, ga);
        }
      }
    }
  }
  return {class_sum, align_sum};
}

template <typename T>
std::vector<std::span<const T>> chunk(const std::vector<T>& v, int size) {
  std::vector<std::span<const T>> out;
  for (std::size_t i = 0; i < v.size(); i += size)
    out.emplace_back(v.data() + i, std::min<std::size_t>(size, v.size() - i));
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

void finalize_report(RunReport& report, const ModelConfig& cfg) {
  for (int r = 0; r < cfg.repeats; ++r) {
    std::vector<double> accs;
    for (const FoldResult& f : report.folds)
      if (f.seed == cfg.seed + static_cast<std::uint64_t>(r)) accs.push_back(f.test_accuracy);
    report.seed_means.push_back(mean(accs));
  }
  report.mean_accuracy = mean(report.seed_means);
  if (cfg.repeats > 1) {
    report.std_accuracy = stddev(report.seed_means);
  } else {
    std::vector<double> accs;
    for (const FoldResult& f : report.folds) accs.push_back(f.test_accuracy);
    report.std_accuracy = stddev(accs);
  }
}

RunReport run_folds(const Dataset& ds, const FoldPlan& plan, const ModelConfig& cfg,
                    FoldResult (*fold_fn)(const Dataset&, const FoldPlan&, const ModelConfig&, int,
                                          std::uint64_t)) {
  validate_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  struct Task {
    int fold;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int r = 0; r < cfg.repeats; ++r)
    for (int f = 0; f < plan.num_folds; ++f)
      tasks.push_back({f, cfg.seed + static_cast<std::uint64_t>(r)});

  RunReport report;
  report.config = cfg;
  report.dataset = ds.name;
  report.folds.resize(tasks.size());

  const int workers = std::min<int>(cfg.jobs, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      report.folds[i] = fold_fn(ds, plan, cfg, tasks[i].fold, tasks[i].seed);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          report.folds[i] = fold_fn(ds, plan, cfg, tasks[i].fold, tasks[i].seed);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
  }

  finalize_report(report, cfg);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

constexpr double kProbeLr = 1e-2;
constexpr int kProbeEpochs = 300;
constexpr int kProbePatience = 50;

// Trains a linear classifier on frozen flattened summaries; the encoder and
// prototypes are read-only here.
double probe_fold(const ModelState& frozen, const Dataset& ds, const std::vector<NormAdj>& adjs,
                  const FoldPlan& plan, int fold, std::uint64_t seed,
                  ClassifierParams* probe_out) {
  std::vector<Matrix> summaries(ds.graphs.size());
  auto summarize = [&](const std::vector<int>& idx) {
    for (int i : idx) {
      if (summaries[i].size() != 0) continue;
      const Matrix h = gcn_forward(adjs[i], ds.graphs[i].features, frozen.theta);
      summaries[i] = model_summary(frozen, h);
    }
  };
  summarize(plan.train[fold]);
  summarize(plan.val[fold]);
  summarize(plan.test[fold]);

  Rng rng(mix_seed(seed, 0x9506e + static_cast<std::uint64_t>(fold)));
  const int positions = frozen.prototypes ? frozen.prototypes->k() : 1;
  const int dim = frozen.theta.weights.back().cols();
  ClassifierParams probe = init_classifier(ds.num_classes, positions, dim, rng);

  Optimizer opt(OptimizerKind::Adam, kProbeLr);
  ParamBank bank;
  std::vector<int> w_ix;
  for (Matrix& w : probe.w) w_ix.push_back(bank.add(&w, opt));
  const int b_ix = bank.add(&probe.b, opt);

  auto probe_accuracy = [&](const std::vector<int>& idx) {
    int hits = 0;
    for (int i : idx) hits += (argmax(scores(summaries[i], probe)) == ds.graphs[i].label);
    return static_cast<double>(hits) / static_cast<double>(idx.size());
  };

  ClassifierParams best = probe;
  double best_val = -1.0;
  int best_epoch = 0;
  for (int epoch = 1; epoch <= kProbeEpochs; ++epoch) {
    bank.zero();
    for (int i : plan.train[fold]) {
      const CrossEntropy ce = cross_entropy(scores(summaries[i], probe), ds.graphs[i].label);
      const ClassifierGrads cg = classifier_backward(summaries[i], probe, ce.d_scores, nullptr);
      for (std::size_t c = 0; c < cg.d_w.size(); ++c) axpy(1.0, cg.d_w[c], bank.grads[w_ix[c]]);
      axpy(1.0, cg.d_b, bank.grads[b_ix]);
    }
    bank.step(opt, 1.0 / static_cast<double>(plan.train[fold].size()));
    const double val = plan.val[fold].empty() ? probe_accuracy(plan.train[fold])
                                              : probe_accuracy(plan.val[fold]);
    if (val > best_val) {
      best_val = val;
      best = probe;
      best_epoch = epoch;
    } else if (epoch - best_epoch >= kProbePatience) {
      break;
    }
  }
  probe = best;
  if (probe_out) *probe_out = probe;

  int hits = 0;
  for (int i : plan.test[fold]) hits += (argmax(scores(summaries[i], probe)) == ds.graphs[i].label);
  return static_cast<double>(hits) / static_cast<double>(plan.test[fold].size());
}

}  // namespace

EvalResult evaluate(const ModelState& state, const Dataset& ds, const std::vector<int>& indices) {
  const std::vector<NormAdj> adjs = dataset_adjacencies(ds);
  const EvalDetail detail = eval_with_adjs(state, ds, adjs, indices);
  return {detail.accuracy, detail.predictions};
}

FoldResult train_supervised_fold(const Dataset& ds, const FoldPlan& plan, const ModelConfig& cfg,
                                 int fold, std::uint64_t seed) {
  validate_config(cfg);
  const std::vector<NormAdj> adjs = dataset_adjacencies(ds);
  const std::uint64_t fold_seed = mix_seed(seed, 0xF01d0 + static_cast<std::uint64_t>(fold));

  FoldResult result;
  result.fold = fold;
  result.seed = seed;

  ModelState model = init_model(cfg, ds.feature_dim, ds.num_classes, fold_seed);
  Optimizer opt(cfg.optimizer, cfg.lr);
  ParamBank bank;
  const ParamIndex ix = register_params(model, opt, bank, true, false);

  Rng shuffle_rng(mix_seed(fold_seed, 0xba7c4));
  std::vector<int> order = plan.train[fold];

  ModelState best = model;
  double best_metric = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
    shuffle_rng.shuffle(order);
    double class_sum = 0.0, align_sum = 0.0;
    for (const auto batch : chunk(order, cfg.batch_size)) {
      bank.zero();
      const auto [cls, aln] = supervised_accumulate(ds, adjs, batch, model, cfg, bank, ix);
      if (!std::isfinite(cls) || !std::isfinite(aln))
        throw DivergenceError("non-finite loss at fold " + std::to_string(fold) + ", epoch " +
                              std::to_string(epoch));
      class_sum += cls;
      align_sum += aln;
      bank.step(opt, 1.0 / static_cast<double>(batch.size()));
    }

    const EvalDetail val = eval_with_adjs(model, ds, adjs, plan.val[fold]);
    const double metric = cfg.select_by_loss ? -val.mean_loss : val.accuracy;
    const double n_train = static_cast<double>(order.size());
    result.curve.push_back({class_sum / n_train, align_sum / n_train, metric});
    result.epochs_run = epoch;

    if (metric > best_metric) {
      best_metric = metric;
      best = model;
      best_epoch = epoch;
    } else if (epoch - best_epoch >= cfg.patience) {
      break;
    }
  }

  result.model = std::move(best);
  result.best_epoch = best_epoch;
  result.best_val_metric = best_metric;
  result.test_accuracy = eval_with_adjs(result.model, ds, adjs, plan.test[fold]).accuracy;
  return result;
}

RunReport train_supervised(const Dataset& ds, const FoldPlan& plan, const ModelConfig& cfg) {
  return run_folds(ds, plan, cfg, &train_supervised_fold);
}

ModelState train_steps(const Dataset& ds, const std::vector<int>& train_idx,
                       const ModelConfig& cfg, int steps, std::uint64_t seed) {
  validate_config(cfg);
  const std::vector<NormAdj> adjs = dataset_adjacencies(ds);
  ModelState model = init_model(cfg, ds.feature_dim, ds.num_classes, seed);
  Optimizer opt(cfg.optimizer, cfg.lr);
  ParamBank bank;
  const ParamIndex ix = register_params(model, opt, bank, true, false);

  Rng shuffle_rng(mix_seed(seed, 0xba7c4));
  std::vector<int> order = train_idx;
  int done = 0;
  while (done < steps) {
    shuffle_rng.shuffle(order);
    for (const auto batch : chunk(order, cfg.batch_size)) {
      if (done >= steps) break;
      bank.zero();
      supervised_accumulate(ds, adjs, batch, model, cfg, bank, ix);
      bank.step(opt, 1.0 / static_cast<double>(batch.size()));
      ++done;
    }
  }
  return model;
}

FoldResult train_contrastive_fold(const Dataset& ds, const FoldPlan& plan, const ModelConfig& cfg,
                                  int fold, std::uint64_t seed) {
  validate_config(cfg);
  if (cfg.mode != TrainMode::Contrastive)
    throw ConfigError("train_contrastive_fold: config mode is not contrastive");
  const std::vector<NormAdj> adjs = dataset_adjacencies(ds);
  const std::uint64_t fold_seed = mix_seed(seed, 0xc047 + static_cast<std::uint64_t>(fold));

  FoldResult result;
  result.fold = fold;
  result.seed = seed;

  ModelState model = init_model(cfg, ds.feature_dim, ds.num_classes, fold_seed);
  Optimizer opt(cfg.optimizer, cfg.lr);
  ParamBank bank;
  const ParamIndex ix = register_params(model, opt, bank, false, true);

  Rng shuffle_rng(mix_seed(fold_seed, 0xba7c4));
  std::vector<int> order = plan.train[fold];
  if (order.size() < 2) throw ConfigError("contrastive training needs at least 2 graphs");

  // Batches of < 2 graphs cannot form negatives; a trailing singleton is
  // merged into the previous batch.
  auto make_batches = [&](const std::vector<int>& idx) {
    std::vector<std::vector<int>> batches;
    for (std::size_t i = 0; i < idx.size(); i += cfg.batch_size) {
      const std::size_t end = std::min(idx.size(), i + cfg.batch_size);
      batches.emplace_back(idx.begin() + i, idx.begin() + end);
    }
    if (batches.size() >= 2 && batches.back().size() < 2) {
      batches[batches.size() - 2].push_back(batches.back()[0]);
      batches.pop_back();
    }
    return batches;
  };

  auto batch_forward = [&](const std::vector<int>& batch, Rng& aug_rng, bool with_grads,
                           double* align_loss_out) {
    std::vector<const Graph*> originals;
    std::vector<Graph> augmented;
    for (int i : batch) {
      originals.push_back(&ds.graphs[i]);
      augmented.push_back(node_drop(ds.graphs[i], cfg.drop_ratio, aug_rng));
    }
    const ContrastiveResult res =
        contrastive_loss_and_grads(originals, augmented, model, cfg.temperature);
    if (align_loss_out && model.prototypes) {
      double align_sum = 0.0;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const Matrix h =
            gcn_forward(adjs[batch[b]], ds.graphs[batch[b]].features, model.theta);
        const SoftSsaResult ssa = soft_ssa(h, *model.prototypes, cfg.gamma);
        align_sum += ssa.value;
        if (with_grads && !cfg.disable_align_loss)
          axpy(1.0 / static_cast<double>(batch.size()), ssa.d_prototypes, bank.grads[ix.protos]);
      }
      *align_loss_out = align_sum / static_cast<double>(batch.size());
    }
    if (with_grads && !cfg.disable_class_loss) {
      for (std::size_t l = 0; l < ix.theta.size(); ++l)
        axpy(1.0, res.d_theta[l], bank.grads[ix.theta[l]]);
      if (ix.gate >= 0) axpy(1.0, res.d_gate, bank.grads[ix.gate]);
      axpy(1.0, res.d_projection.w1, bank.grads[ix.proj_w1]);
      axpy(1.0, res.d_projection.b1, bank.grads[ix.proj_b1]);
      axpy(1.0, res.d_projection.w2, bank.grads[ix.proj_w2]);
      axpy(1.0, res.d_projection.b2, bank.grads[ix.proj_b2]);
    }
    return res.loss;
  };

  ModelState best = model;
  double best_metric = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
    shuffle_rng.shuffle(order);
    Rng aug_rng(mix_seed(fold_seed, 0xa06000 + static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0, align_sum = 0.0;
    int batch_count = 0;
    for (const auto& batch : make_batches(order)) {
      bank.zero();
      double align_loss = 0.0;
      const double loss = batch_forward(batch, aug_rng, true, &align_loss);
      if (!std::isfinite(loss) || !std::isfinite(align_loss))
        throw DivergenceError("non-finite loss at fold " + std::to_string(fold) + ", epoch " +
                              std::to_string(epoch));
      loss_sum += loss;
      align_sum += align_loss;
      ++batch_count;
      bank.step(opt, 1.0);  // contrastive gradients are already per-anchor means
    }

    // Validation contrastive loss with fixed augmentations for comparability.
    double val_metric = 0.0;
    if (plan.val[fold].size() >= 2) {
      Rng val_rng(mix_seed(fold_seed, 0xe7a1));
      double val_loss = 0.0;
      int val_batches = 0;
      for (const auto& batch : make_batches(plan.val[fold])) {
        val_loss += batch_forward(batch, val_rng, false, nullptr);
        ++val_batches;
      }
      val_metric = -val_loss / static_cast<double>(val_batches);
    } else {
      val_metric = -loss_sum / static_cast<double>(batch_count);
    }

    result.curve.push_back(
        {loss_sum / static_cast<double>(batch_count), align_sum / static_cast<double>(batch_count), val_metric});
    result.epochs_run = epoch;

    if (val_metric > best_metric) {
      best_metric = val_metric;
      best = model;
      best_epoch = epoch;
    } else if (epoch - best_epoch >= cfg.patience) {
      break;
    }
  }

  model = std::move(best);
  result.best_epoch = best_epoch;
  result.best_val_metric = best_metric;

  ClassifierParams probe;
  result.test_accuracy = probe_fold(model, ds, adjs, plan, fold, seed, &probe);
  model.clf = probe;  // checkpointed model carries the probe head
  result.model = std::move(model);
  return result;
}

RunReport train_contrastive(const Dataset& ds, const FoldPlan& plan, const ModelConfig& cfg) {
  return run_folds(ds, plan, cfg, &train_contrastive_fold);
}

RunReport linear_probe(const ModelState& frozen, const Dataset& ds, const FoldPlan& plan,
                       const ModelConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<NormAdj> adjs = dataset_adjacencies(ds);

  RunReport report;
  report.config = cfg;
  report.dataset = ds.name;
  for (int f = 0; f < plan.num_folds; ++f) {
    FoldResult r;
    r.fold = f;
    r.seed = cfg.seed;
    ClassifierParams probe;
    r.test_accuracy = probe_fold(frozen, ds, adjs, plan, f, cfg.seed, &probe);
    r.model = frozen;
    r.model.clf = probe;
    report.folds.push_back(std::move(r));
  }
  ModelConfig one = cfg;
  one.repeats = 1;
  finalize_report(report, one);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace ssread

#include "canopy/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <stdexcept>

#include "canopy/csv.hpp"

namespace canopy {

ClassWeighting parse_weighting(std::string_view name) {
  if (name == "none") return ClassWeighting::none;
  if (name == "balanced") return ClassWeighting::balanced;
  throw std::invalid_argument("unknown class weighting '" + std::string(name) +
                              "' (expected none or balanced)");
}

std::string weighting_name(ClassWeighting w) {
  return w == ClassWeighting::balanced ? "balanced" : "none";
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::optional<TensorF> weights_tensor(const std::vector<double>& weights) {
  if (weights.empty()) return std::nullopt;
  TensorF t({weights.size()});
  for (std::size_t i = 0; i < weights.size(); ++i) t[i] = static_cast<float>(weights[i]);
  return t;
}

struct SplitEval {
  double mean_loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;
};

// Inference pass: weighted mean loss, accuracy, confusion counts.
SplitEval evaluate_images(const ModelSpec& spec, const ModelParamsF& params, const ImageSet& set,
                          const std::optional<TensorF>& weights) {
  SplitEval ev;
  const std::size_t k = spec.n_classes;
  ev.confusion.assign(k, std::vector<std::size_t>(k, 0));
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (const auto& item : set.items) {
    const TensorF logits = model_forward(spec, params, item.image, /*training=*/false);
    const auto xent =
        softmax_cross_entropy(logits, static_cast<std::size_t>(item.label), weights);
    loss_sum += static_cast<double>(xent.loss);
    std::size_t pred = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (logits[c] > logits[pred]) pred = c;
    }
    ev.confusion[static_cast<std::size_t>(item.label)][pred]++;
    if (pred == static_cast<std::size_t>(item.label)) ++correct;
  }
  ev.mean_loss = loss_sum / static_cast<double>(set.items.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(set.items.size());
  return ev;
}

}  // namespace

std::string TrainHistory::serialize() const {
  std::string out = "epoch,train_loss,val_loss,val_accuracy\n";
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    out += std::to_string(i + 1) + "," + format_double(epochs[i].train_loss) + "," +
           format_double(epochs[i].val_loss) + "," + format_double(epochs[i].val_accuracy) + "\n";
  }
  return out;
}

EvalReport report_from_confusion(const std::vector<std::vector<std::size_t>>& confusion,
                                 std::optional<double> loss, double epochs_trained) {
  EvalReport r;
  r.confusion = confusion;
  r.loss = loss;
  r.epochs_trained = epochs_trained;
  const std::size_t k = confusion.size();
  std::size_t total = 0, diag = 0;
  double recall_sum = 0.0, precision_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t row_sum = 0, col_sum = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row_sum += confusion[c][j];
      col_sum += confusion[j][c];
      total += confusion[c][j];
    }
    diag += confusion[c][c];
    recall_sum += row_sum ? static_cast<double>(confusion[c][c]) / static_cast<double>(row_sum)
                          : 0.0;
    precision_sum += col_sum ? static_cast<double>(confusion[c][c]) / static_cast<double>(col_sum)
                             : 0.0;
  }
  r.accuracy = total ? static_cast<double>(diag) / static_cast<double>(total) : 0.0;
  r.avg_class_recall = k ? recall_sum / static_cast<double>(k) : 0.0;
  r.avg_class_precision = k ? precision_sum / static_cast<double>(k) : 0.0;
  return r;
}

TrainResult train(const TrainConfig& config, const ImageSet& train_set, const ImageSet& val_set) {
  if (train_set.items.empty() || val_set.items.empty()) {
    throw std::invalid_argument("train: empty split");
  }
  if (train_set.classes != val_set.classes) {
    throw std::invalid_argument("train: train/validation class tables differ");
  }
  ModelSpec spec = config.model;
  if (spec.n_classes != train_set.classes.size()) {
    throw std::invalid_argument("train: model expects " + std::to_string(spec.n_classes) +
                                " classes but the dataset has " +
                                std::to_string(train_set.classes.size()));
  }
  spec.validate();
  {
    std::set<std::string> train_ids;
    for (const auto& item : train_set.items) train_ids.insert(item.id);
    for (const auto& item : val_set.items) {
      if (train_ids.count(item.id)) {
        throw std::invalid_argument("train: splits are not disjoint; id '" + item.id +
                                    "' appears in both");
      }
    }
  }
  if (config.max_epochs < 1 || config.batch_size < 1) {
    throw std::invalid_argument("train: max_epochs and batch_size must be >= 1");
  }

  std::vector<double> class_weights;
  if (config.weighting == ClassWeighting::balanced) {
    const TensorD w = compute_class_weights(train_set.class_counts());
    class_weights.assign(w.data(), w.data() + w.size());
  }
  const std::optional<TensorF> weights = weights_tensor(class_weights);

  const RngStream root(config.seed);
  ModelParamsF params = build_model<float>(spec, root);
  auto param_ptrs = params.tensors();
  OptimizerState<float> opt_state =
      init_state<float>(config.optimizer, config.effective_hyper(), params.shapes());

  const std::size_t n = train_set.items.size();
  std::vector<std::size_t> order(n);

  TrainResult result;
  result.history.best_val_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    // deterministic per-epoch shuffle
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    RngStream shuffle_rng = root.substream("shuffle", static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    const RngStream epoch_rng = root.substream("epoch", static_cast<std::uint64_t>(epoch));

    double epoch_loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      const std::size_t members = stop - start;

      std::vector<TensorF> grad_accum;
      grad_accum.reserve(param_ptrs.size());
      for (const auto* p : param_ptrs) grad_accum.emplace_back(p->shape());

      double batch_loss = 0.0;
      for (std::size_t pos = start; pos < stop; ++pos) {
        const LabeledImage& item = train_set.items[order[pos]];
        const RngStream item_rng = epoch_rng.substream("item", pos);
        TensorF image = item.image;
        if (config.augment) {
          image = augment(image, *config.augment, item_rng.substream("augment"));
        }
        ModelTape<float> tape;
        model_forward_tape(spec, params, image, /*training=*/true,
                           item_rng.substream("forward"), &tape);
        const auto xent =
            softmax_cross_entropy(tape.logits, static_cast<std::size_t>(item.label), weights);
        batch_loss += static_cast<double>(xent.loss);
        const auto grads = model_backward(spec, params, tape, xent.d_logits);
        for (std::size_t g = 0; g < grads.size(); ++g) {
          for (std::size_t v = 0; v < grads[g].size(); ++v) grad_accum[g][v] += grads[g][v];
        }
      }
      batch_loss /= static_cast<double>(members);
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: non-finite training loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_index));
      }
      epoch_loss_sum += batch_loss * static_cast<double>(members);
      const float inv = 1.0f / static_cast<float>(members);
      std::vector<const TensorF*> grad_const;
      grad_const.reserve(grad_accum.size());
      for (auto& g : grad_accum) {
        for (std::size_t v = 0; v < g.size(); ++v) g[v] *= inv;
        grad_const.push_back(&g);
      }
      apply_step(opt_state, param_ptrs, grad_const);
      ++batch_index;
    }

    const SplitEval val = evaluate_images(spec, params, val_set, weights);
    EpochStats stats;
    stats.train_loss = epoch_loss_sum / static_cast<double>(n);
    stats.val_loss = val.mean_loss;
    stats.val_accuracy = val.accuracy;
    result.history.epochs.push_back(stats);

    if (val.mean_loss < result.history.best_val_loss) {
      result.history.best_val_loss = val.mean_loss;
      result.history.best_epoch = epoch;
      result.checkpoint.params = params;
    }
  }

  result.checkpoint.spec = spec;
  result.checkpoint.label = model_label(config);
  result.checkpoint.class_names = train_set.classes;
  result.checkpoint.class_weights = class_weights;
  result.checkpoint.seed = config.seed;
  result.checkpoint.epoch = static_cast<std::uint32_t>(result.history.best_epoch);
  result.checkpoint.val_loss = result.history.best_val_loss;
  return result;
}

EvalReport evaluate(const Checkpoint& checkpoint, const ImageSet& test_set,
                    const std::vector<double>& class_weights) {
  if (test_set.items.empty()) throw std::invalid_argument("evaluate: empty test set");
  // Remap test labels onto the checkpoint's class table.
  std::vector<int> label_map(test_set.classes.size(), -1);
  for (std::size_t c = 0; c < test_set.classes.size(); ++c) {
    const auto it = std::find(checkpoint.class_names.begin(), checkpoint.class_names.end(),
                              test_set.classes[c]);
    if (it == checkpoint.class_names.end()) {
      throw std::invalid_argument("evaluate: species '" + test_set.classes[c] +
                                  "' absent from training labels");
    }
    label_map[c] = static_cast<int>(it - checkpoint.class_names.begin());
  }

  const std::optional<TensorF> weights = weights_tensor(class_weights);
  const ModelSpec& spec = checkpoint.spec;
  const std::size_t k = spec.n_classes;
  std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
  double loss_sum = 0.0;
  for (const auto& item : test_set.items) {
    const std::size_t mapped =
        static_cast<std::size_t>(label_map[static_cast<std::size_t>(item.label)]);
    const TensorF logits = model_forward(spec, checkpoint.params, item.image, false);
    const auto xent = softmax_cross_entropy(logits, mapped, weights);
    loss_sum += static_cast<double>(xent.loss);
    std::size_t pred = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (logits[c] > logits[pred]) pred = c;
    }
    confusion[mapped][pred]++;
  }
  return report_from_confusion(confusion, loss_sum / static_cast<double>(test_set.items.size()),
                               static_cast<double>(checkpoint.epoch));
}

CrossValResult cross_validate(const TrainConfig& config, const ImageSet& all_data, std::size_t k) {
  if (all_data.items.empty()) throw std::invalid_argument("cross_validate: empty dataset");
  std::vector<std::string> labels;
  labels.reserve(all_data.items.size());
  for (const auto& item : all_data.items) {
    labels.push_back(all_data.classes[static_cast<std::size_t>(item.label)]);
  }
  const auto fold_of = stratified_kfold_labels(labels, k, config.seed);

  CrossValResult result;
  for (std::size_t fold = 0; fold < k; ++fold) {
    ImageSet train_part, held_out;
    train_part.classes = all_data.classes;
    held_out.classes = all_data.classes;
    for (std::size_t i = 0; i < all_data.items.size(); ++i) {
      (fold_of[i] == fold ? held_out : train_part).items.push_back(all_data.items[i]);
    }
    try {
      // The held-out fold doubles as the validation split: the spec trains on
      // the other k-1 folds in full, so there is no spare split to validate on.
      const TrainResult tr = train(config, train_part, held_out);
      result.folds.push_back(
          evaluate(tr.checkpoint, held_out, tr.checkpoint.class_weights));
    } catch (const std::exception& e) {
      throw std::runtime_error("cross_validate: fold " + std::to_string(fold) + ": " + e.what());
    }
  }

  EvalReport agg;
  agg.loss = std::nullopt;
  for (const auto& fr : result.folds) {
    agg.accuracy += fr.accuracy;
    agg.avg_class_recall += fr.avg_class_recall;
    agg.avg_class_precision += fr.avg_class_precision;
    agg.epochs_trained += fr.epochs_trained;
  }
  const double kd = static_cast<double>(result.folds.size());
  agg.accuracy /= kd;
  agg.avg_class_recall /= kd;
  agg.avg_class_precision /= kd;
  agg.epochs_trained /= kd;
  result.aggregate = agg;
  return result;
}

std::string model_label(const TrainConfig& config) {
  std::string label = "x" + std::to_string(config.model.n_blocks) + " Conv block (" +
                      optimizer_name(config.optimizer) + " " + config.model.initializer.name();
  if (config.model.kernel_size != 3) {
    label += " " + std::to_string(config.model.kernel_size) + "x" +
             std::to_string(config.model.kernel_size) + " kernel";
  }
  if (config.model.dropout_rate > 0.0) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %g%% dropout", config.model.dropout_rate * 100.0);
    label += buf;
  }
  if (config.weighting == ClassWeighting::balanced) label += " balanced";
  label += ")";
  return label;
}

namespace {
std::string format_pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}
}  // namespace

std::string results_csv_row(const std::string& label, const EvalReport& report) {
  char loss_buf[32];
  std::string loss = "-NA-";
  if (report.loss) {
    std::snprintf(loss_buf, sizeof(loss_buf), "%.4f", *report.loss);
    loss = loss_buf;
  }
  char epochs_buf[32];
  std::snprintf(epochs_buf, sizeof(epochs_buf), "%g", report.epochs_trained);
  return csv_join({label, loss, format_pct(report.accuracy), format_pct(report.avg_class_recall),
                   format_pct(report.avg_class_precision), epochs_buf});
}

std::string results_csv_row_failed(const std::string& label, const std::string& error) {
  return csv_join({label, "failed: " + error, "", "", "", ""});
}

std::string results_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kResultsCsvHeader) + "\n";
  for (const auto& row : rows) {
    out += row.report ? results_csv_row(row.label, *row.report)
                      : results_csv_row_failed(row.label, row.error);
    out += "\n";
  }
  return out;
}

std::vector<SweepRow> sweep(const TrainConfig& base, const SweepGrid& grid,
                            const ImageSet& train_set, const ImageSet& val_set,
                            const ImageSet& test_set) {
  const std::vector<int> blocks = grid.blocks.empty() ? std::vector<int>{base.model.n_blocks}
                                                      : grid.blocks;
  const std::vector<OptimizerKind> opts =
      grid.optimizers.empty() ? std::vector<OptimizerKind>{base.optimizer} : grid.optimizers;
  const std::vector<InitializerKind> inits =
      grid.initializers.empty() ? std::vector<InitializerKind>{base.model.initializer}
                                : grid.initializers;
  const std::vector<double> dropouts =
      grid.dropouts.empty() ? std::vector<double>{base.model.dropout_rate} : grid.dropouts;
  const std::vector<ClassWeighting> weightings =
      grid.weightings.empty() ? std::vector<ClassWeighting>{base.weighting} : grid.weightings;

  std::vector<SweepRow> rows;
  for (int n_blocks : blocks) {
    for (OptimizerKind opt : opts) {
      for (const InitializerKind& init : inits) {
        for (double dropout : dropouts) {
          for (ClassWeighting weighting : weightings) {
            SweepRow row;
            row.config = base;
            row.config.model.n_blocks = n_blocks;
            // keep an explicit filter list consistent with the swept depth
            auto& filters = row.config.model.filters;
            if (!filters.empty()) {
              const auto n = static_cast<std::size_t>(n_blocks);
              if (filters.size() > n) filters.resize(n);
              while (filters.size() < n) {
                filters.push_back(std::min<std::size_t>(filters.back() * 2, 256));
              }
            }
            row.config.optimizer = opt;
            if (!base.hyper) row.config.hyper.reset();  // per-optimizer defaults
            row.config.model.initializer = init;
            row.config.model.dropout_rate = dropout;
            row.config.weighting = weighting;
            row.label = model_label(row.config);
            try {
              const TrainResult tr = train(row.config, train_set, val_set);
              row.report = evaluate(tr.checkpoint, test_set, tr.checkpoint.class_weights);
            } catch (const std::exception& e) {
              row.error = e.what();
            }
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.report && b.report) return a.report->accuracy > b.report->accuracy;
    return static_cast<bool>(a.report) > static_cast<bool>(b.report);
  });
  return rows;
}

}  // namespace canopy

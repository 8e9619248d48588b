#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "canopy/augment.hpp"
#include "canopy/dataset.hpp"
#include "canopy/model.hpp"
#include "canopy/optim.hpp"

namespace canopy {

enum class ClassWeighting { none, balanced };

ClassWeighting parse_weighting(std::string_view name);
std::string weighting_name(ClassWeighting w);

struct TrainConfig {
  int max_epochs = 100;
  int batch_size = 32;
  OptimizerKind optimizer = OptimizerKind::sgd;
  std::optional<OptimizerHyper> hyper;  // nullopt -> default_hyper(optimizer)
  ModelSpec model;
  ClassWeighting weighting = ClassWeighting::none;
  std::uint64_t seed = 0;
  std::optional<AugmentParams> augment;  // nullopt -> no augmentation

  OptimizerHyper effective_hyper() const { return hyper ? *hyper : default_hyper(optimizer); }
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  bool operator==(const EpochStats&) const = default;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;  // 1-based, first attainment of the minimum
  double best_val_loss = 0.0;

  /// Line-delimited per-epoch records: epoch,train_loss,val_loss,val_accuracy.
  std::string serialize() const;

  bool operator==(const TrainHistory&) const = default;
};

/// The results-table row schema: loss, accuracy, unweighted mean per-class
/// recall/precision, best epoch, and the confusion matrix behind them
/// (rows = true class, columns = predicted).
struct EvalReport {
  std::optional<double> loss;  // nullopt renders as -NA- (cross-validation aggregate)
  double accuracy = 0.0;
  double avg_class_recall = 0.0;
  double avg_class_precision = 0.0;
  double epochs_trained = 0.0;
  std::vector<std::vector<std::size_t>> confusion;
};

/// accuracy/recall/precision as pure functions of the confusion matrix, with
/// 0 substituted where a denominator is 0.
EvalReport report_from_confusion(const std::vector<std::vector<std::size_t>>& confusion,
                                 std::optional<double> loss, double epochs_trained);

struct TrainResult {
  Checkpoint checkpoint;
  TrainHistory history;
};

/// Runs at most max_epochs epochs, evaluating validation loss after each and
/// keeping the parameters of the smallest one. Deterministic given the seed:
/// data order, dropout masks and augmentation draws all derive from it.
TrainResult train(const TrainConfig& config, const ImageSet& train_set, const ImageSet& val_set);

/// Single inference pass with dropout off.
EvalReport evaluate(const Checkpoint& checkpoint, const ImageSet& test_set,
                    const std::vector<double>& class_weights = {});

struct CrossValResult {
  std::vector<EvalReport> folds;
  EvalReport aggregate;  // unweighted mean per metric; loss reported as -NA-
};

/// 5-fold stratified cross-validation: each fold is held out once while the
/// model trains on the others.
CrossValResult cross_validate(const TrainConfig& config, const ImageSet& all_data,
                              std::size_t k = 5);

/// One axis list per swept parameter; an empty axis keeps the base config's
/// value.
struct SweepGrid {
  std::vector<int> blocks;
  std::vector<OptimizerKind> optimizers;
  std::vector<InitializerKind> initializers;
  std::vector<double> dropouts;
  std::vector<ClassWeighting> weightings;
};

struct SweepRow {
  std::string label;
  TrainConfig config;
  std::optional<EvalReport> report;
  std::string error;  // set when the run failed; the sweep continues
};

/// Trains and evaluates every grid combination from the same seed family and
/// returns rows sorted by accuracy (failed rows last).
std::vector<SweepRow> sweep(const TrainConfig& base, const SweepGrid& grid,
                            const ImageSet& train_set, const ImageSet& val_set,
                            const ImageSet& test_set);

inline constexpr const char* kResultsCsvHeader =
    "model,loss,accuracy_pct,avg_class_recall_pct,avg_class_precision_pct,epochs";

std::string model_label(const TrainConfig& config);
std::string results_csv_row(const std::string& label, const EvalReport& report);
std::string results_csv_row_failed(const std::string& label, const std::string& error);
std::string results_csv(const std::vector<SweepRow>& rows);

}  // namespace canopy

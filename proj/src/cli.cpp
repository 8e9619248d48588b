#include "canopy/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "canopy/augment.hpp"
#include "canopy/csv.hpp"
#include "canopy/data/inventory.hpp"
#include "canopy/data/split.hpp"
#include "canopy/data/tiles.hpp"
#include "canopy/dataset.hpp"
#include "canopy/image_io.hpp"
#include "canopy/train.hpp"

namespace fs = std::filesystem;

namespace canopy::cli {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_resolved_config(CLI::App* root, const fs::path& out_dir) {
  write_text(out_dir / "config_resolved.toml", root->config_to_str(true, true));
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size() && !text.empty()) {
    const auto comma = text.find(',', pos);
    const std::string token =
        text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      out.push_back(std::stod(token));
    } catch (...) {
      throw std::runtime_error(std::string(what) + ": bad number '" + token + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// ---- shared model/training options ----------------------------------------

struct ModelOptions {
  int blocks = 1;
  int kernel = 3;
  std::string filters;  // comma list; empty selects the default progression
  std::size_t fc_width = 128;
  double dropout = 0.0;
  std::string initializer = "he_uniform";
  std::string optimizer = "sgd";
  double learning_rate = -1.0;  // <0 selects the per-optimizer default
  int epochs = 100;
  int batch_size = 32;
  std::string weighting = "none";
  std::uint64_t seed = 0;

  bool augment_enabled = false;
  double rotation = 40.0;
  double width_shift = 0.2;
  double height_shift = 0.2;
  double horizontal_flip = 0.5;
  std::string zoom = "0.8,1.2";
  std::string brightness = "0.8,1.2";
};

void add_model_options(CLI::App* cmd, ModelOptions& o) {
  cmd->add_option("--blocks", o.blocks, "Number of conv blocks N in {1..6}")
      ->capture_default_str();
  cmd->add_option("--kernel", o.kernel, "Odd conv kernel size")->capture_default_str();
  cmd->add_option("--filters", o.filters,
                  "Per-block filter counts, e.g. 32,64,128 (default doubles, capped at 256)")
      ->capture_default_str();
  cmd->add_option("--fc-width", o.fc_width, "Hidden FC width")->capture_default_str();
  cmd->add_option("--dropout", o.dropout, "Dropout rate in [0,1)")->capture_default_str();
  cmd->add_option("--initializer", o.initializer, "Kernel initializer")->capture_default_str();
  cmd->add_option("--optimizer", o.optimizer, "Optimizer rule")->capture_default_str();
  cmd->add_option("--lr", o.learning_rate, "Learning rate (omit for per-optimizer default)")
      ->capture_default_str();
  cmd->add_option("--epochs", o.epochs, "Maximum training epochs")->capture_default_str();
  cmd->add_option("--batch-size", o.batch_size, "Minibatch size")->capture_default_str();
  cmd->add_option("--weighting", o.weighting, "Class weighting: none | balanced")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Root RNG seed")->capture_default_str();

  cmd->add_flag("--augment", o.augment_enabled, "Enable training-time augmentation");
  cmd->add_option("--rotation", o.rotation, "Augment: max rotation degrees")
      ->capture_default_str();
  cmd->add_option("--width_shift", o.width_shift, "Augment: max width shift fraction")
      ->capture_default_str();
  cmd->add_option("--height_shift", o.height_shift, "Augment: max height shift fraction")
      ->capture_default_str();
  cmd->add_option("--horizontal_flip", o.horizontal_flip, "Augment: flip probability")
      ->capture_default_str();
  cmd->add_option("--zoom", o.zoom, "Augment: zoom range lo,hi")->capture_default_str();
  cmd->add_option("--brightness", o.brightness, "Augment: brightness range lo,hi")
      ->capture_default_str();
}

TrainConfig to_train_config(const ModelOptions& o, const ImageSet& reference) {
  if (reference.items.empty()) throw std::runtime_error("dataset split is empty");
  TrainConfig c;
  c.max_epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.optimizer = parse_optimizer(o.optimizer);
  if (o.learning_rate >= 0.0) {
    OptimizerHyper h = default_hyper(c.optimizer);
    h.learning_rate = o.learning_rate;
    c.hyper = h;
  }
  c.weighting = parse_weighting(o.weighting);
  c.seed = o.seed;
  c.model.n_blocks = o.blocks;
  c.model.kernel_size = o.kernel;
  for (double f : parse_double_list(o.filters, "--filters")) {
    c.model.filters.push_back(static_cast<std::size_t>(f));
  }
  c.model.fc_width = o.fc_width;
  c.model.dropout_rate = o.dropout;
  c.model.initializer = InitializerKind::parse(o.initializer);
  c.model.input_h = reference.items[0].image.dim(0);
  c.model.input_w = reference.items[0].image.dim(1);
  c.model.n_classes = reference.classes.size();
  if (o.augment_enabled) {
    const auto zoom = parse_double_list(o.zoom, "--zoom");
    const auto brightness = parse_double_list(o.brightness, "--brightness");
    if (zoom.size() != 2 || brightness.size() != 2) {
      throw std::runtime_error("--zoom and --brightness take exactly two values lo,hi");
    }
    AugmentParams a;
    a.rotation_max = o.rotation;
    a.width_shift_max = o.width_shift;
    a.height_shift_max = o.height_shift;
    a.hflip_prob = o.horizontal_flip;
    a.zoom_range = {zoom[0], zoom[1]};
    a.brightness_range = {brightness[0], brightness[1]};
    a.validate();
    c.augment = a;
  }
  return c;
}

DatasetManifest load_manifest(const fs::path& data_dir) {
  return DatasetManifest::parse(read_text(data_dir / "manifest.txt"));
}

nlohmann::json report_to_json(const std::string& label, const EvalReport& r,
                              const std::vector<std::string>& classes) {
  nlohmann::json j;
  j["model"] = label;
  if (r.loss) j["loss"] = *r.loss;
  else j["loss"] = nullptr;
  j["accuracy_pct"] = r.accuracy * 100.0;
  j["avg_class_recall_pct"] = r.avg_class_recall * 100.0;
  j["avg_class_precision_pct"] = r.avg_class_precision * 100.0;
  j["epochs"] = r.epochs_trained;
  j["classes"] = classes;
  j["confusion"] = r.confusion;
  return j;
}

std::string confusion_csv(const EvalReport& r, const std::vector<std::string>& classes) {
  std::string out = "true\\predicted";
  for (const auto& c : classes) out += "," + csv_escape(c);
  out += "\n";
  for (std::size_t i = 0; i < r.confusion.size(); ++i) {
    out += csv_escape(classes[i]);
    for (std::size_t j = 0; j < r.confusion[i].size(); ++j) {
      out += "," + std::to_string(r.confusion[i][j]);
    }
    out += "\n";
  }
  return out;
}

// ---- dataset build ---------------------------------------------------------

struct DatasetOptions {
  std::string inventory;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::size_t top_k = 6;
  int zoom = 20;
  int tile_size = 200;
  std::string ratios = "0.7,0.2,0.1";
  bool mock_tiles = false;
  int parallelism = 4;
  double rate_limit = 0.0;
  int max_retries = 3;
  int backoff_ms = 250;
  int crop_bottom_px = 0;
  std::size_t oversample = 0;
  std::string base_url = "https://maps.googleapis.com/maps/api/staticmap";
  std::string species_column = "Common Name";
  std::string lat_column = "Latitude";
  std::string lon_column = "Longitude";
  std::string id_column = "Identifier";
};

int run_dataset_build(const DatasetOptions& o, CLI::App* cmd) {
  const fs::path out_dir = o.out_dir;
  fs::create_directories(out_dir);

  ColumnMap columns;
  columns.species = o.species_column;
  columns.latitude = o.lat_column;
  columns.longitude = o.lon_column;
  columns.id = o.id_column;

  const auto parsed = parse_inventory(read_text(o.inventory), columns);
  {
    std::string rejects = "row,reason\n";
    for (const auto& r : parsed.rejected) {
      rejects += std::to_string(r.row) + "," + csv_escape(r.reason) + "\n";
    }
    write_text(out_dir / "rejections.csv", rejects);
  }
  std::cout << "inventory: " << parsed.records.size() << " records kept, "
            << parsed.rejected.size() << " rejected\n";

  const auto top = select_top_species(parsed.records, o.top_k);
  for (const auto& w : top.warnings) std::cerr << "warning: " << w << "\n";

  const auto ratio_values = parse_double_list(o.ratios, "--ratios");
  if (ratio_values.size() != 3) throw std::runtime_error("--ratios takes three values");
  SplitRatios ratios{ratio_values[0], ratio_values[1], ratio_values[2]};
  DatasetManifest manifest = stratified_split(top.records, ratios, o.seed);
  for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";

  TileConfig tile_config;
  tile_config.zoom = o.zoom;
  tile_config.width = o.tile_size;
  tile_config.height = o.tile_size;
  tile_config.base_url = o.base_url;

  std::string api_key = "mock";
  MockTileClient mock_client;
  HttpTileClient http_client;
  TileClient* client = &mock_client;
  if (!o.mock_tiles) {
    api_key = tile_api_key(tile_config);  // throws MissingApiKeyError before any network use
    client = &http_client;
  }

  std::vector<TileRequest> requests;
  requests.reserve(top.records.size());
  for (const auto& rec : top.records) requests.push_back(make_tile_request(rec, tile_config));

  FetchOptions fetch_options;
  fetch_options.cache_dir = out_dir / "cache";
  fetch_options.parallelism = o.parallelism;
  fetch_options.requests_per_second = o.rate_limit;
  fetch_options.max_retries = o.max_retries;
  fetch_options.backoff_initial_ms = o.backoff_ms;
  const auto statuses = fetch_tiles(requests, *client, tile_config, api_key, fetch_options);

  std::size_t ok = 0;
  for (std::size_t i = 0; i < statuses.size(); ++i) {
    auto& entry = manifest.entries[i];
    if (statuses[i].outcome == FetchOutcome::failed) {
      entry.status = "failed";
      std::cerr << "warning: tile fetch failed for " << entry.id << ": " << statuses[i].error
                << "\n";
      continue;
    }
    const fs::path dest = out_dir / entry.path;
    fs::create_directories(dest.parent_path());
    if (o.crop_bottom_px > 0) {
      ImageU8 img = read_png_file(statuses[i].path.string());
      if (static_cast<std::size_t>(o.crop_bottom_px) >= img.height) {
        throw std::runtime_error("--crop-bottom-px removes the whole image");
      }
      img.height -= static_cast<std::size_t>(o.crop_bottom_px);
      img.rgb.resize(img.height * img.width * 3);
      write_png_file(dest.string(), img);
    } else {
      fs::copy_file(statuses[i].path, dest, fs::copy_options::overwrite_existing);
    }
    entry.status = "ok";
    ++ok;
  }
  std::cout << "tiles: " << ok << "/" << statuses.size() << " stored\n";

  if (o.oversample > 0) {
    // materialize augmented copies for the train split, one substream per
    // (image, copy)
    std::map<std::string, std::vector<const ManifestEntry*>> train_by_species;
    for (const auto& e : manifest.entries) {
      if (e.split == Split::train && e.status == "ok") train_by_species[e.species].push_back(&e);
    }
    std::vector<std::size_t> counts;
    std::vector<std::string> species_order;
    for (const auto& [species, entries] : train_by_species) {
      species_order.push_back(species);
      counts.push_back(entries.size());
    }
    const auto plan = oversample_plan(counts, o.oversample);
    const AugmentParams params;  // conventional default ranges
    const RngStream root(o.seed);
    std::vector<ManifestEntry> augmented_entries;
    for (std::size_t s = 0; s < species_order.size(); ++s) {
      const auto& originals = train_by_species[species_order[s]];
      for (std::size_t i = 0; i < originals.size(); ++i) {
        const ManifestEntry& src = *originals[i];
        const TensorF image = image_to_tensor(read_png_file((out_dir / src.path).string()));
        for (std::size_t copy = 0; copy < plan[s][i]; ++copy) {
          const RngStream rng =
              root.substream("oversample").substream(src.id).substream(copy);
          const TensorF out_img = augment(image, params, rng);
          ManifestEntry aug = src;
          aug.id = src.id + "_aug" + std::to_string(copy + 1);
          aug.path = src.path.substr(0, src.path.size() - 4) + "_aug" +
                     std::to_string(copy + 1) + ".png";
          write_png_file((out_dir / aug.path).string(), tensor_to_image(out_img));
          augmented_entries.push_back(std::move(aug));
        }
      }
    }
    for (auto& e : augmented_entries) manifest.entries.push_back(std::move(e));
    std::cout << "oversample: " << augmented_entries.size() << " augmented images written\n";
  }

  write_text(out_dir / "manifest.txt", manifest.serialize());
  write_resolved_config(cmd, out_dir);
  std::cout << "manifest: " << (out_dir / "manifest.txt").string() << "\n";
  return 0;
}

// ---- train / eval / cv / sweep --------------------------------------------

int run_train(const ModelOptions& o, const std::string& data_dir, const std::string& out_dir,
              CLI::App* cmd) {
  const auto manifest = load_manifest(data_dir);
  const auto train_set = load_split_images(manifest, data_dir, Split::train);
  const auto val_set = load_split_images(manifest, data_dir, Split::validate);
  const TrainConfig config = to_train_config(o, train_set);

  const auto result = train(config, train_set, val_set);
  const fs::path out = out_dir;
  fs::create_directories(out);
  save_checkpoint((out / "checkpoint.bin").string(), result.checkpoint);
  write_text(out / "history.csv", result.history.serialize());
  write_resolved_config(cmd, out);
  std::cout << "best epoch " << result.history.best_epoch << ", validation loss "
            << result.history.best_val_loss << "\n"
            << "checkpoint: " << (out / "checkpoint.bin").string() << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& data_dir,
             const std::string& split, const std::string& out_dir, CLI::App* cmd) {
  const auto ck = load_checkpoint(checkpoint_path);
  const auto manifest = load_manifest(data_dir);
  const auto set = load_split_images(manifest, data_dir, parse_split(split));
  const auto report = evaluate(ck, set, ck.class_weights);

  const fs::path out = out_dir;
  fs::create_directories(out);
  const std::string label = ck.label.empty() ? "model" : ck.label;
  write_text(out / "eval_report.csv",
             std::string(kResultsCsvHeader) + "\n" + results_csv_row(label, report) + "\n");
  write_text(out / "eval_report.json", report_to_json(label, report, ck.class_names).dump(2));
  write_text(out / "confusion.csv", confusion_csv(report, ck.class_names));
  write_resolved_config(cmd, out);
  std::cout << results_csv_row(label, report) << "\n";
  return 0;
}

ImageSet load_all_splits(const DatasetManifest& manifest, const std::string& data_dir) {
  ImageSet all = load_split_images(manifest, data_dir, Split::train);
  for (Split s : {Split::validate, Split::test}) {
    ImageSet part = load_split_images(manifest, data_dir, s);
    for (auto& item : part.items) all.items.push_back(std::move(item));
  }
  return all;
}

int run_cv(const ModelOptions& o, const std::string& data_dir, std::size_t folds,
           const std::string& out_dir, CLI::App* cmd) {
  const auto manifest = load_manifest(data_dir);
  const ImageSet all = load_all_splits(manifest, data_dir);
  const TrainConfig config = to_train_config(o, all);
  const auto cv = cross_validate(config, all, folds);

  std::string csv = std::string(kResultsCsvHeader) + "\n";
  const std::string label = model_label(config);
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    csv += results_csv_row(label + " fold " + std::to_string(f + 1), cv.folds[f]) + "\n";
  }
  csv += results_csv_row(label + " " + std::to_string(folds) + "-fold Cross Val", cv.aggregate) +
         "\n";
  const fs::path out = out_dir;
  fs::create_directories(out);
  write_text(out / "cv_results.csv", csv);
  write_resolved_config(cmd, out);
  std::cout << csv;
  return 0;
}

SweepGrid parse_grid(const std::vector<std::string>& tokens) {
  SweepGrid grid;
  for (const auto& token : tokens) {
    if (token.empty()) continue;
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("grid token '" + token + "' is not key=v1,v2,...");
    }
    const std::string key = token.substr(0, eq);
    std::vector<std::string> values;
    std::string rest = token.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      values.push_back(rest.substr(pos, comma == std::string::npos ? comma : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (values.empty()) throw std::runtime_error("grid axis '" + key + "' has no values");
    if (key == "blocks") {
      for (const auto& v : values) grid.blocks.push_back(std::stoi(v));
    } else if (key == "optimizer") {
      for (const auto& v : values) grid.optimizers.push_back(parse_optimizer(v));
    } else if (key == "initializer") {
      for (const auto& v : values) grid.initializers.push_back(InitializerKind::parse(v));
    } else if (key == "dropout") {
      for (const auto& v : values) grid.dropouts.push_back(std::stod(v));
    } else if (key == "weighting") {
      for (const auto& v : values) grid.weightings.push_back(parse_weighting(v));
    } else {
      throw std::runtime_error("unknown grid axis '" + key +
                               "' (blocks, optimizer, initializer, dropout, weighting)");
    }
  }
  return grid;
}

int run_sweep(const ModelOptions& o, const std::string& data_dir,
              const std::vector<std::string>& grid_tokens, int cv_top,
              const std::string& out_dir, CLI::App* cmd) {
  const auto manifest = load_manifest(data_dir);
  const auto train_set = load_split_images(manifest, data_dir, Split::train);
  const auto val_set = load_split_images(manifest, data_dir, Split::validate);
  const auto test_set = load_split_images(manifest, data_dir, Split::test);
  const TrainConfig base = to_train_config(o, train_set);
  const SweepGrid grid = parse_grid(grid_tokens);

  auto rows = sweep(base, grid, train_set, val_set, test_set);

  std::string csv = results_csv(rows);
  if (cv_top > 0) {
    const ImageSet all = load_all_splits(manifest, data_dir);
    int done = 0;
    for (const auto& row : rows) {
      if (!row.report) continue;
      if (done++ >= cv_top) break;
      const auto cv = cross_validate(row.config, all, 5);
      csv += results_csv_row(row.label + " 5-fold Cross Val", cv.aggregate) + "\n";
    }
  }
  const fs::path out = out_dir;
  fs::create_directories(out);
  write_text(out / "results.csv", csv);
  write_resolved_config(cmd, out);
  std::cout << csv;
  return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
  struct Row {
    std::vector<std::string> fields;
    double accuracy = -1.0;
  };
  std::vector<Row> rows;
  for (const auto& input : inputs) {
    const auto parsed = parse_csv(read_text(input));
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      if (parsed[i].empty() || (parsed[i].size() == 1 && parsed[i][0].empty())) continue;
      if (i == 0) {
        if (csv_join(parsed[i]) != kResultsCsvHeader) {
          throw std::runtime_error(input + ": unexpected results header");
        }
        continue;
      }
      Row row;
      row.fields = parsed[i];
      try {
        row.accuracy = std::stod(parsed[i].at(2));
      } catch (...) {
        row.accuracy = -1.0;  // failed rows sort last
      }
      rows.push_back(std::move(row));
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.accuracy > b.accuracy; });
  std::string csv = std::string(kResultsCsvHeader) + "\n";
  for (const auto& row : rows) csv += csv_join(row.fields) + "\n";
  const fs::path out = out_dir;
  fs::create_directories(out);
  write_text(out / "summary.csv", csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"aerial tree-species dataset and CNN training toolkit", "canopy"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file with one [section] per subcommand");

  // dataset build
  auto* dataset_cmd = app.add_subcommand("dataset", "Dataset generation");
  dataset_cmd->require_subcommand(1);
  auto* build_cmd = dataset_cmd->add_subcommand(
      "build", "Clean an inventory, fetch tiles and write a split dataset");
  DatasetOptions ds;
  dataset_cmd->fallthrough();
  build_cmd->fallthrough();
  build_cmd->add_option("--inventory", ds.inventory, "Inventory CSV path")->required();
  build_cmd->add_option("--out", ds.out_dir, "Output directory")->capture_default_str();
  build_cmd->add_option("--seed", ds.seed, "Root RNG seed")->capture_default_str();
  build_cmd->add_option("--top-k", ds.top_k, "Keep the k most frequent species")
      ->capture_default_str();
  build_cmd->add_option("--zoom", ds.zoom, "Tile zoom level")->capture_default_str();
  build_cmd->add_option("--tile-size", ds.tile_size, "Square tile size in pixels")
      ->capture_default_str();
  build_cmd->add_option("--ratios", ds.ratios, "train,validate,test ratios")
      ->capture_default_str();
  build_cmd->add_flag("--mock-tiles", ds.mock_tiles,
                      "Serve deterministic synthetic tiles; never touches the network");
  build_cmd->add_option("--parallelism", ds.parallelism, "Concurrent fetch workers")
      ->capture_default_str();
  build_cmd->add_option("--rate-limit", ds.rate_limit, "Max requests per second (0 = off)")
      ->capture_default_str();
  build_cmd->add_option("--max-retries", ds.max_retries, "Retries for 429/5xx responses")
      ->capture_default_str();
  build_cmd->add_option("--backoff-ms", ds.backoff_ms, "Initial retry backoff (doubles)")
      ->capture_default_str();
  build_cmd->add_option("--crop-bottom-px", ds.crop_bottom_px,
                        "Crop attribution rows off stored tiles")
      ->capture_default_str();
  build_cmd->add_option("--oversample", ds.oversample,
                        "Materialize augmented train copies up to this per-class count")
      ->capture_default_str();
  build_cmd->add_option("--base-url", ds.base_url, "Static map endpoint")->capture_default_str();
  build_cmd->add_option("--species-column", ds.species_column, "Inventory species column")
      ->capture_default_str();
  build_cmd->add_option("--lat-column", ds.lat_column, "Inventory latitude column")
      ->capture_default_str();
  build_cmd->add_option("--lon-column", ds.lon_column, "Inventory longitude column")
      ->capture_default_str();
  build_cmd->add_option("--id-column", ds.id_column, "Inventory id column")
      ->capture_default_str();
  build_cmd->callback([&] { run_dataset_build(ds, &app); });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train one model and checkpoint the best epoch");
  ModelOptions train_opts;
  std::string train_data, train_out = "out";
  train_cmd->fallthrough();
  train_cmd->add_option("--data", train_data, "Dataset directory (from `dataset build`)")
      ->required();
  train_cmd->add_option("--out", train_out, "Output directory")->capture_default_str();
  add_model_options(train_cmd, train_opts);
  train_cmd->callback([&] { run_train(train_opts, train_data, train_out, &app); });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  std::string eval_ck, eval_data, eval_split = "test", eval_out = "out";
  eval_cmd->fallthrough();
  eval_cmd->add_option("--checkpoint", eval_ck, "Checkpoint path")->required();
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--split", eval_split, "Split: train | validate | test")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "Output directory")->capture_default_str();
  eval_cmd->callback([&] { run_eval(eval_ck, eval_data, eval_split, eval_out, &app); });

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "Stratified k-fold cross-validation");
  ModelOptions cv_opts;
  std::string cv_data, cv_out = "out";
  std::size_t cv_folds = 5;
  cv_cmd->fallthrough();
  cv_cmd->add_option("--data", cv_data, "Dataset directory")->required();
  cv_cmd->add_option("--folds", cv_folds, "Number of folds")->capture_default_str();
  cv_cmd->add_option("--out", cv_out, "Output directory")->capture_default_str();
  add_model_options(cv_cmd, cv_opts);
  cv_cmd->callback([&] { run_cv(cv_opts, cv_data, cv_folds, cv_out, &app); });

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Train/evaluate a parameter grid");
  ModelOptions sweep_opts;
  std::string sweep_data, sweep_out = "out";
  std::vector<std::string> grid_tokens;
  int cv_top = 0;
  sweep_cmd->fallthrough();
  sweep_cmd->add_option("--data", sweep_data, "Dataset directory")->required();
  sweep_cmd->add_option("--grid", grid_tokens,
                        "Axes like blocks=1,2 optimizer=sgd,adamax dropout=0,0.2");
  sweep_cmd->add_option("--cv-top", cv_top, "Re-run 5-fold CV on the best N rows")
      ->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "Output directory")->capture_default_str();
  add_model_options(sweep_cmd, sweep_opts);
  sweep_cmd->callback(
      [&] { run_sweep(sweep_opts, sweep_data, grid_tokens, cv_top, sweep_out, &app); });

  // report
  auto* report_cmd = app.add_subcommand("report", "Merge results tables into one summary");
  report_cmd->fallthrough();
  std::vector<std::string> report_inputs;
  std::string report_out = "out";
  report_cmd->add_option("--inputs", report_inputs, "results.csv files to merge")->required();
  report_cmd->add_option("--out", report_out, "Output directory")->capture_default_str();
  report_cmd->callback([&] { run_report(report_inputs, report_out); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const MissingApiKeyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace canopy::cli

// emomap command-line entry point.
//
// Every subcommand first resolves its flags into a JSON config with all
// defaults filled in, then runs from that config alone. The config is written
// to a manifest next to the output, and `run --manifest` feeds it back through
// the same handler, so a replay reproduces the outputs byte for byte.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "emomap/emomap.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace emomap;
using namespace emomap::cnn;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

// ---------------------------------------------------------------------------
// Output helpers

double g9(double x) { return round_g9(x); }

void emit_text(const std::string& out, const std::string& text, RunContext& ctx) {
  if (out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + out + "' for writing");
  f << text;
  if (!f) throw IoError("failed writing '" + out + "'");
  ctx.outputs.push_back(out);
}

std::string csv_join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    const auto& c = cells[i];
    if (c.find_first_of(",\"\n") != std::string::npos) {
      line += '"';
      for (char ch : c) line += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      line += '"';
    } else {
      line += c;
    }
  }
  return line + '\n';
}

std::size_t thread_budget() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BSF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ValidationError("BSF_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    hw = std::min(hw, static_cast<std::size_t>(v));
  }
  return hw;
}

Dataset load_input(const json& cfg, RunContext& ctx) {
  const auto path = cfg.at("in").get<std::string>();
  ctx.inputs.push_back(path);
  return load_dataset(path);
}

ElectrodeMap load_montage(const json& cfg, RunContext& ctx) {
  const auto table = cfg.at("table").get<std::string>();
  if (!table.empty()) {
    ctx.inputs.push_back(table);
    return load_coordinate_table(table);
  }
  return builtin_coordinates(cfg.at("montage").get<std::string>());
}

PrepConfig prep_from(const json& cfg) {
  PrepConfig p;
  p.window = cfg.at("window").get<std::size_t>();
  p.mode = parse_baseline_mode(cfg.at("mode").get<std::string>());
  p.zscore = cfg.at("zscore").get<bool>();
  p.order = parse_process_order(cfg.at("order").get<std::string>());
  return p;
}

// ---------------------------------------------------------------------------
// Handlers

void run_gen(const json& cfg, RunContext& ctx) {
  SyntheticSpec spec;
  from_json(cfg.at("spec"), spec);
  const auto ds = generate_synthetic(spec, cfg.at("seed").get<std::uint64_t>());
  const auto out = cfg.at("out").get<std::string>();
  store_dataset(ds, out);
  ctx.outputs.push_back(out);
}

void run_prep(const json& cfg, RunContext& ctx) {
  const auto ds = load_input(cfg, ctx);
  validate(ds);
  const auto prep = prep_from(cfg);
  Dataset out;
  out.channels = ds.channels;
  out.attributes = ds.attributes;
  out.attributes["preprocessing"] = {{"window", prep.window},
                                     {"mode", std::string(to_string(prep.mode))},
                                     {"zscore", prep.zscore},
                                     {"order", std::string(to_string(prep.order))}};
  std::size_t zeroed = 0;
  for (const auto& rec : ds.recordings) {
    auto processed = process_trial(rec, prep);
    zeroed += processed.zeroed_columns;
    for (const auto& seg : processed.segments) {
      TrialRecording r;
      r.subject_id = rec.subject_id;
      r.trial_id = rec.trial_id;
      r.sample_rate = rec.sample_rate;
      r.baseline_frames = 0;
      r.ratings = rec.ratings;
      r.origin = seg.origin;
      r.samples = Matrix<float>(seg.values.rows(), seg.values.cols());
      for (std::size_t e = 0; e < seg.values.size(); ++e) r.samples.flat()[e] = static_cast<float>(seg.values.flat()[e]);
      out.recordings.push_back(std::move(r));
    }
  }
  if (zeroed) std::cerr << "warning: " << zeroed << " zero-variance frames were set to zero during z-scoring\n";
  const auto path = cfg.at("out").get<std::string>();
  store_dataset(out, path);
  ctx.outputs.push_back(path);
}

json mean_std_json(const MeanStd& m) { return {{"mean", g9(m.mean)}, {"std", g9(m.std)}}; }

void run_simreport(const json& cfg, RunContext& ctx) {
  const auto ds = load_input(cfg, ctx);
  SimilarityConfig sc;
  sc.window = cfg.at("window").get<std::size_t>();
  sc.zscore = cfg.at("zscore").get<bool>();
  sc.pair_cap = cfg.at("pair_cap").get<std::size_t>();
  sc.seed = cfg.at("seed").get<std::uint64_t>();
  const auto report = similarity_report(ds, sc);

  std::string text;
  if (cfg.at("json").get<bool>()) {
    json rows = json::array();
    for (const auto& r : report.rows) {
      rows.push_back({{"category", std::string(to_string(r.category))},
                      {"pairs", r.pairs},
                      {"euclidean", mean_std_json(r.s1)},
                      {"euclidean_normalized", mean_std_json(r.s1_normalized)},
                      {"cosine", mean_std_json(r.s2)},
                      {"cosine_abs", mean_std_json(r.s2_abs)},
                      {"pearson", mean_std_json(r.s3)},
                      {"pearson_abs", mean_std_json(r.s3_abs)}});
    }
    text = json{{"rows", rows}}.dump(2) + "\n";
  } else {
    text = csv_join({"category", "pairs", "euclidean_mean", "euclidean_std", "euclidean_norm_mean",
                     "euclidean_norm_std", "cosine_mean", "cosine_std", "cosine_abs_mean", "cosine_abs_std",
                     "pearson_mean", "pearson_std", "pearson_abs_mean", "pearson_abs_std"});
    for (const auto& r : report.rows) {
      text += csv_join({std::string(to_string(r.category)), std::to_string(r.pairs), format_g9(r.s1.mean),
                        format_g9(r.s1.std), format_g9(r.s1_normalized.mean), format_g9(r.s1_normalized.std),
                        format_g9(r.s2.mean), format_g9(r.s2.std), format_g9(r.s2_abs.mean), format_g9(r.s2_abs.std),
                        format_g9(r.s3.mean), format_g9(r.s3.std), format_g9(r.s3_abs.mean), format_g9(r.s3_abs.std)});
    }
  }
  emit_text(cfg.at("out").get<std::string>(), text, ctx);
}

void run_audit_cmd(const json& cfg, RunContext& ctx) {
  const auto ds = load_input(cfg, ctx);
  AuditConfig ac;
  ac.modes.clear();
  for (const auto& m : cfg.at("modes")) ac.modes.push_back(parse_audit_mode(m.get<std::string>()));
  ac.splits.clear();
  for (const auto& s : cfg.at("splits")) ac.splits.push_back(parse_split_plan(s.get<std::string>()));
  ac.classifiers.clear();
  for (const auto& c : cfg.at("classifiers")) ac.classifiers.push_back(parse_classifier(c.get<std::string>()));
  ac.scales = cfg.at("scales").get<std::vector<std::string>>();
  ac.window = cfg.at("window").get<std::size_t>();
  ac.zscore = cfg.at("zscore").get<bool>();
  ac.knn_k = cfg.at("knn_k").get<std::size_t>();
  ac.tree_depth = cfg.at("tree_depth").get<std::size_t>();
  ac.svm_epochs = cfg.at("svm_epochs").get<std::size_t>();
  ac.svm_lambda = cfg.at("svm_lambda").get<double>();
  ac.seed = cfg.at("seed").get<std::uint64_t>();
  const auto report = run_audit(ds, ac);

  std::string text;
  if (cfg.at("json").get<bool>()) {
    json cells = json::array();
    for (const auto& c : report.cells) {
      cells.push_back({{"mode", std::string(to_string(c.mode))},
                       {"split", c.split},
                       {"classifier", std::string(to_string(c.classifier))},
                       {"scale", c.scale},
                       {"accuracy", g9(c.accuracy)},
                       {"n_train", c.n_train},
                       {"n_test", c.n_test}});
    }
    text = json{{"cells", cells}, {"metadata", report.metadata}}.dump(2) + "\n";
  } else {
    text = csv_join({"mode", "split", "classifier", "scale", "accuracy", "n_train", "n_test"});
    for (const auto& c : report.cells) {
      text += csv_join({std::string(to_string(c.mode)), c.split, std::string(to_string(c.classifier)), c.scale,
                        format_g9(c.accuracy), std::to_string(c.n_train), std::to_string(c.n_test)});
    }
  }
  emit_text(cfg.at("out").get<std::string>(), text, ctx);
}

json coord_json(const GridCoord& c) { return json::array({c.x, c.y, c.z}); }

void run_map(const json& cfg, RunContext& ctx) {
  const auto cns = load_montage(cfg, ctx);
  const auto level = parse_mapping_level(cfg.at("level").get<std::string>());
  const auto map = map_for_level(cns, level);

  json j;
  j["level"] = std::string(to_string(level));
  j["dims"] = json::array({map.dims.x, map.dims.y, map.dims.z});
  j["brain_center"] = coord_json(map.brain_center);
  j["cns"] = json::array();
  for (const auto& [name, c] : map.cns) j["cns"].push_back({{"name", name}, {"cell", coord_json(c)}});
  j["pns"] = json::array();
  for (const auto& p : map.pns) {
    j["pns"].push_back({{"type", std::string(to_string(p.type))},
                        {"region", p.region},
                        {"region_center", coord_json(p.dpc)},
                        {"cell", coord_json(p.cell)}});
  }
  j["occupied_cells"] = map.cns.size() + map.pns.size();

  const auto in = cfg.at("in").get<std::string>();
  const auto dump_dir = cfg.at("dump_dir").get<std::string>();
  if (!dump_dir.empty()) {
    if (in.empty()) throw ValidationError("--dump-dir needs --in");
    const auto ds = load_input(cfg, ctx);
    validate(ds);
    const auto prep = prep_from(cfg);
    const auto limit = cfg.at("dump_limit").get<std::size_t>();
    fs::create_directories(dump_dir);
    json dumps = json::array();
    for (const auto& rec : ds.recordings) {
      if (dumps.size() >= limit) break;
      for (const auto& seg : process_trial(rec, prep).segments) {
        if (dumps.size() >= limit) break;
        const auto t = assemble_tensor(seg.values, ds.channels, map);
        char name[96];
        std::snprintf(name, sizeof name, "s%03d_t%03d_w%03zu.npy", seg.origin.subject_id, seg.origin.trial_id,
                      seg.origin.segment_index);
        const auto path = (fs::path(dump_dir) / name).string();
        write_npy(path, t.values,
                  {t.frames, static_cast<std::size_t>(t.dims.x), static_cast<std::size_t>(t.dims.y),
                   static_cast<std::size_t>(t.dims.z)});
        ctx.outputs.push_back(path);
        dumps.push_back(name);
      }
    }
    j["tensor_dumps"] = dumps;
  }
  emit_text(cfg.at("out").get<std::string>(), j.dump(2) + "\n", ctx);
}

NetworkConfig network_from(const json& cfg) {
  NetworkConfig n = with_combo(NetworkConfig{}, parse_layer_combo(cfg.at("layers").get<std::string>()));
  n.dropout = cfg.at("dropout").get<double>();
  n.batch_norm = cfg.at("batch_norm").get<bool>();
  return n;
}

TrainConfig train_from(const json& cfg) {
  TrainConfig tc;
  tc.epochs = cfg.at("epochs").get<std::size_t>();
  tc.batch_size = cfg.at("batch_size").get<std::size_t>();
  tc.folds = cfg.at("folds").get<std::size_t>();
  tc.seed = cfg.at("seed").get<std::uint64_t>();
  tc.adam.lr = cfg.at("lr").get<double>();
  tc.adam.l2 = cfg.at("l2").get<double>();
  tc.threads = thread_budget();
  return tc;
}

PipelineConfig pipeline_from(const json& cfg) {
  PipelineConfig p;
  p.prep = prep_from(cfg);
  p.level = parse_mapping_level(cfg.at("level").get<std::string>());
  p.scale = cfg.at("scale").get<std::string>();
  return p;
}

json fold_json(const FoldResult& r) {
  json folds = json::array();
  for (std::size_t k = 0; k < r.accuracies.size(); ++k) {
    json curve = json::array();
    for (double l : r.loss_curves[k]) curve.push_back(g9(l));
    folds.push_back({{"fold", k}, {"accuracy", g9(r.accuracies[k])}, {"loss_curve", curve}});
  }
  return {{"mean_accuracy", g9(r.mean)}, {"std_accuracy", g9(r.std)}, {"folds", folds}};
}

void run_train(const json& cfg, RunContext& ctx) {
  const auto ds = load_input(cfg, ctx);
  const auto cns = load_montage(cfg, ctx);
  auto data = build_tensor_dataset(ds, cns, pipeline_from(cfg));
  auto tc = train_from(cfg);
  if (cfg.at("shuffle_labels").get<bool>()) shuffle_labels(data, tc.seed);
  const auto checkpoint = cfg.at("checkpoint").get<std::string>();
  tc.keep_parameters = !checkpoint.empty();
  const auto r = train(data, network_from(cfg), tc);

  if (!checkpoint.empty()) {
    std::vector<NamedBlob> blobs;
    for (const auto& fold : r.parameters) blobs.insert(blobs.end(), fold.begin(), fold.end());
    write_checkpoint(checkpoint, blobs);
    ctx.outputs.push_back(checkpoint);
  }

  std::string text;
  if (cfg.at("json").get<bool>()) {
    auto j = fold_json(r);
    j["examples"] = data.examples.size();
    j["example_shape"] = data.example_shape;
    text = j.dump(2) + "\n";
  } else {
    text = csv_join({"fold", "accuracy", "final_loss"});
    for (std::size_t k = 0; k < r.accuracies.size(); ++k) {
      text += csv_join({std::to_string(k), format_g9(r.accuracies[k]), format_g9(r.loss_curves[k].back())});
    }
    text += csv_join({"mean", format_g9(r.mean), ""});
    text += csv_join({"std", format_g9(r.std), ""});
  }
  emit_text(cfg.at("out").get<std::string>(), text, ctx);
}

std::vector<AblationVariant> grid_from(const std::string& grid, LayerCombo combo, MappingLevel level) {
  if (grid == "layers") return layer_combination_grid(level);
  if (grid == "levels") return mapping_level_grid(combo);
  if (grid == "leave-one-pns-out") return leave_one_pns_out_grid(combo);
  if (grid == "all") {
    auto v = layer_combination_grid(level);
    for (const auto& m : mapping_level_grid(combo)) {
      if (m.combo == combo && m.level == level) continue;  // already in the layer grid
      v.push_back(m);
    }
    return v;
  }
  throw ValidationError("unknown ablation grid '" + grid + "'");
}

void run_ablate(const json& cfg, RunContext& ctx) {
  const auto ds = load_input(cfg, ctx);
  const auto cns = load_montage(cfg, ctx);
  const auto pipe = pipeline_from(cfg);
  const auto tc = train_from(cfg);
  const auto base = network_from(cfg);
  const auto variants =
      grid_from(cfg.at("grid").get<std::string>(), parse_layer_combo(cfg.at("layers").get<std::string>()), pipe.level);
  const auto rows = ablate(ds, cns, pipe, base, tc, variants, cfg.at("shuffle_labels").get<bool>());

  std::string text;
  if (cfg.at("json").get<bool>()) {
    json out = json::array();
    for (const auto& r : rows) {
      auto j = fold_json(r.result);
      j["layers"] = std::string(to_string(r.variant.combo));
      j["mapping"] = std::string(to_string(r.variant.level));
      out.push_back(j);
    }
    text = json{{"rows", out}}.dump(2) + "\n";
  } else {
    std::vector<std::string> head{"layers", "mapping", "mean_accuracy", "std_accuracy"};
    for (std::size_t k = 0; k < tc.folds; ++k) head.push_back("fold" + std::to_string(k));
    text = csv_join(head);
    for (const auto& r : rows) {
      std::vector<std::string> cells{std::string(to_string(r.variant.combo)), std::string(to_string(r.variant.level)),
                                     format_g9(r.result.mean), format_g9(r.result.std)};
      for (double a : r.result.accuracies) cells.push_back(format_g9(a));
      text += csv_join(cells);
    }
  }
  emit_text(cfg.at("out").get<std::string>(), text, ctx);
}

using Handler = std::function<void(const json&, RunContext&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"gen", run_gen},     {"prep", run_prep}, {"simreport", run_simreport}, {"audit", run_audit_cmd},
      {"map", run_map},     {"train", run_train}, {"ablate", run_ablate}};
  return h;
}

std::string default_manifest_path(const json& cfg) {
  const auto out = cfg.at("out").get<std::string>();
  return out == "-" ? std::string{} : out + ".manifest.json";
}

void execute(const std::string& sub, const json& cfg, std::string manifest_path) {
  RunContext ctx;
  handlers().at(sub)(cfg, ctx);
  if (manifest_path.empty()) manifest_path = default_manifest_path(cfg);
  if (manifest_path.empty()) return;
  json m = {{"tool", "emomap"},
            {"version", kVersion},
            {"subcommand", sub},
            {"seed", cfg.contains("seed") ? cfg.at("seed") : json(nullptr)},
            {"config", cfg},
            {"inputs", ctx.inputs},
            {"outputs", ctx.outputs}};
  std::ofstream f(manifest_path, std::ios::trunc);
  if (!f) throw IoError("cannot write manifest '" + manifest_path + "'");
  f << m.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Argument grammar

struct PrepFlags {
  std::size_t window = 128;
  std::string mode = "sigmoid-filter";
  std::string zscore = "on";
  std::string order = "zscore-first";

  void add(CLI::App* app) {
    app->add_option("--window", window, "window length in frames")->capture_default_str();
    app->add_option("--mode", mode, "baseline handling: none | base-mean | sigmoid-filter")->capture_default_str();
    app->add_option("--zscore", zscore, "per-frame z-score: on | off")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    app->add_option("--order", order, "zscore-first | filter-first")->capture_default_str();
  }
  void put(json& j) const {
    j["window"] = window;
    j["mode"] = std::string(to_string(parse_baseline_mode(mode)));
    j["zscore"] = zscore == "on";
    j["order"] = std::string(to_string(parse_process_order(order)));
  }
};

struct TrainFlags {
  std::string montage = "deap32";
  std::string table;
  std::string level = "full";
  std::string scale = "valence";
  std::string layers = "3D+3D+1D";
  std::size_t epochs = 50;
  std::size_t batch_size = 240;
  std::size_t folds = 5;
  double lr = 1e-3;
  double l2 = 1e-3;
  double dropout = 0.5;
  std::string batch_norm = "on";
  bool shuffle_labels = false;

  void add(CLI::App* app) {
    app->add_option("--montage", montage, "built-in coordinate table")->capture_default_str();
    app->add_option("--table", table, "coordinate table TSV (name x y z), overrides --montage");
    app->add_option("--level", level, "mapping level")->capture_default_str();
    app->add_option("--scale", scale, "rating scale used as label")->capture_default_str();
    app->add_option("--layers", layers, "3D | 3D+3D | 3D+1D | 3D+3D+1D")->capture_default_str();
    app->add_option("--epochs", epochs)->capture_default_str();
    app->add_option("--batch-size", batch_size)->capture_default_str();
    app->add_option("--folds", folds)->capture_default_str();
    app->add_option("--lr", lr)->capture_default_str();
    app->add_option("--l2", l2)->capture_default_str();
    app->add_option("--dropout", dropout)->capture_default_str();
    app->add_option("--batch-norm", batch_norm)->check(CLI::IsMember({"on", "off"}))->capture_default_str();
    app->add_flag("--shuffle-labels", shuffle_labels, "label-shuffled control run");
  }
  void put(json& j) const {
    j["montage"] = montage;
    j["table"] = table;
    j["level"] = std::string(to_string(parse_mapping_level(level)));
    j["scale"] = scale;
    j["layers"] = std::string(to_string(parse_layer_combo(layers)));
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["folds"] = folds;
    j["lr"] = lr;
    j["l2"] = l2;
    j["dropout"] = dropout;
    j["batch_norm"] = batch_norm == "on";
    j["shuffle_labels"] = shuffle_labels;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"emomap: baseline-leakage audit, sigmoid baseline filter, 3D brain mapping and a small 4D CNN"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::uint64_t seed = 0;
  std::string out = "-";
  std::string manifest;
  bool as_json = false;
  auto common = [&](CLI::App* sub, bool needs_file) {
    sub->add_option("--seed", seed, "master seed")->capture_default_str();
    auto* o = sub->add_option("-o,--out", out, needs_file ? "output file" : "output file, - for stdout");
    if (needs_file) o->required();
    sub->add_option("--manifest-out", manifest, "manifest path (default: <out>.manifest.json)");
  };

  // gen
  SyntheticSpec spec;
  std::string signal_mode = "pure_random";
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset container");
  gen->add_option("--subjects", spec.subjects)->capture_default_str();
  gen->add_option("--trials", spec.trials)->capture_default_str();
  gen->add_option("--channels", spec.channels)->capture_default_str();
  gen->add_option("--frames", spec.frames, "frames per trial, baseline included")->capture_default_str();
  gen->add_option("--baseline-frames", spec.baseline_frames)->capture_default_str();
  gen->add_option("--sample-rate", spec.sample_rate)->capture_default_str();
  gen->add_option("--signal-mode", signal_mode, "pure_random | class_correlated")->capture_default_str();
  gen->add_option("--amplitude", spec.amplitude)->capture_default_str();
  gen->add_option("--signal-scale", spec.signal_scale)->capture_default_str();
  gen->add_option("--freq-negative", spec.freq_negative_hz, "Hz, 0 = sample_rate / 8")->capture_default_str();
  gen->add_option("--freq-positive", spec.freq_positive_hz, "Hz, 0 = sample_rate / 4")->capture_default_str();
  gen->add_option("--channel-fraction", spec.channel_fraction)->capture_default_str();
  common(gen, true);

  // prep
  std::string in;
  PrepFlags prep;
  auto* prep_cmd = app.add_subcommand("prep", "window and baseline-process a dataset into a segment container");
  prep_cmd->add_option("--in", in, "input container")->required();
  prep.add(prep_cmd);
  common(prep_cmd, true);

  // simreport
  PrepFlags sim_prep;
  sim_prep.window = 16;
  std::size_t pair_cap = 10000;
  auto* sim = app.add_subcommand("simreport", "pair-category similarity report");
  sim->add_option("--in", in, "input container")->required();
  sim->add_option("--window", sim_prep.window)->capture_default_str();
  sim->add_option("--zscore", sim_prep.zscore)->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  sim->add_option("--pair-cap", pair_cap, "pairs sampled per category")->capture_default_str();
  sim->add_flag("--json", as_json);
  common(sim, false);

  // audit
  std::string modes = "raw,base_mean,sigmoid_filter,random_data";
  std::string splits = "by_data:0.8,by_index:0.2";
  std::string classifiers = "dt,knn,svm";
  std::string scales = "arousal,valence";
  AuditConfig audit_defaults;
  std::size_t audit_window = 16;
  std::string audit_zscore = "on";
  auto* audit = app.add_subcommand("audit", "leakage audit: preprocessing x split x classifier grid");
  audit->add_option("--in", in, "input container")->required();
  audit->add_option("--modes", modes, "comma list of raw, base_mean, sigmoid_filter, random_data")->capture_default_str();
  audit->add_option("--splits", splits, "comma list of mode:train_ratio")->capture_default_str();
  audit->add_option("--classifiers", classifiers, "comma list of dt, knn, svm")->capture_default_str();
  audit->add_option("--scales", scales)->capture_default_str();
  audit->add_option("--window", audit_window)->capture_default_str();
  audit->add_option("--zscore", audit_zscore)->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  audit->add_option("--knn-k", audit_defaults.knn_k)->capture_default_str();
  audit->add_option("--tree-depth", audit_defaults.tree_depth)->capture_default_str();
  audit->add_option("--svm-epochs", audit_defaults.svm_epochs)->capture_default_str();
  audit->add_option("--svm-lambda", audit_defaults.svm_lambda)->capture_default_str();
  audit->add_flag("--json", as_json);
  common(audit, false);

  // map
  TrainFlags map_flags;
  PrepFlags map_prep;
  std::string dump_dir;
  std::size_t dump_limit = 4;
  auto* map_cmd = app.add_subcommand("map", "resolve the 3D electrode map, optionally dumping mapped tensors");
  map_cmd->add_option("--montage", map_flags.montage)->capture_default_str();
  map_cmd->add_option("--table", map_flags.table, "coordinate table TSV (name x y z)");
  map_cmd->add_option("--level", map_flags.level)->capture_default_str();
  map_cmd->add_option("--in", in, "container whose segments are dumped as tensors");
  map_prep.add(map_cmd);
  map_cmd->add_option("--dump-dir", dump_dir, "directory for .npy tensor dumps");
  map_cmd->add_option("--dump-limit", dump_limit, "maximum number of dumped segments")->capture_default_str();
  common(map_cmd, false);

  // train / ablate
  TrainFlags train_flags;
  PrepFlags train_prep;
  std::string checkpoint;
  auto* train_cmd = app.add_subcommand("train", "five-fold training of the 4D CNN");
  train_cmd->add_option("--in", in, "input container")->required();
  train_prep.add(train_cmd);
  train_flags.add(train_cmd);
  train_cmd->add_option("--checkpoint", checkpoint, "write per-fold parameters here");
  train_cmd->add_flag("--json", as_json);
  common(train_cmd, false);

  TrainFlags ablate_flags;
  PrepFlags ablate_prep;
  std::string grid = "all";
  auto* ablate_cmd = app.add_subcommand("ablate", "layer-combination and mapping-level ablation grids");
  ablate_cmd->add_option("--in", in, "input container")->required();
  ablate_prep.add(ablate_cmd);
  ablate_flags.add(ablate_cmd);
  ablate_cmd->add_option("--grid", grid, "layers | levels | leave-one-pns-out | all")->capture_default_str();
  ablate_cmd->add_flag("--json", as_json);
  common(ablate_cmd, false);

  // run
  std::string manifest_in;
  std::string out_override;
  auto* run_cmd = app.add_subcommand("run", "replay a manifest");
  run_cmd->add_option("--manifest", manifest_in, "manifest written by an earlier run")->required();
  run_cmd->add_option("-o,--out", out_override, "write the primary output here instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorClass::parse);
  }

  json cfg;
  std::string sub;
  if (*gen) {
    sub = "gen";
    spec.signal_mode = parse_signal_mode(signal_mode);
    json s;
    to_json(s, spec);
    cfg = {{"spec", s}};
  } else if (*prep_cmd) {
    sub = "prep";
    cfg["in"] = in;
    prep.put(cfg);
  } else if (*sim) {
    sub = "simreport";
    cfg = {{"in", in}, {"window", sim_prep.window}, {"zscore", sim_prep.zscore == "on"}, {"pair_cap", pair_cap},
           {"json", as_json}};
  } else if (*audit) {
    sub = "audit";
    json m = json::array(), sp = json::array(), cl = json::array();
    for (const auto& x : split_list(modes)) m.push_back(std::string(to_string(parse_audit_mode(x))));
    for (const auto& x : split_list(splits)) {
      parse_split_plan(x);
      sp.push_back(x);
    }
    for (const auto& x : split_list(classifiers)) cl.push_back(std::string(to_string(parse_classifier(x))));
    cfg = {{"in", in},
           {"modes", m},
           {"splits", sp},
           {"classifiers", cl},
           {"scales", split_list(scales)},
           {"window", audit_window},
           {"zscore", audit_zscore == "on"},
           {"knn_k", audit_defaults.knn_k},
           {"tree_depth", audit_defaults.tree_depth},
           {"svm_epochs", audit_defaults.svm_epochs},
           {"svm_lambda", audit_defaults.svm_lambda},
           {"json", as_json}};
  } else if (*map_cmd) {
    sub = "map";
    cfg = {{"montage", map_flags.montage},
           {"table", map_flags.table},
           {"level", std::string(to_string(parse_mapping_level(map_flags.level)))},
           {"in", in},
           {"dump_dir", dump_dir},
           {"dump_limit", dump_limit}};
    map_prep.put(cfg);
  } else if (*train_cmd) {
    sub = "train";
    cfg = {{"in", in}, {"checkpoint", checkpoint}, {"json", as_json}};
    train_prep.put(cfg);
    train_flags.put(cfg);
  } else if (*ablate_cmd) {
    sub = "ablate";
    cfg = {{"in", in}, {"grid", grid}, {"json", as_json}};
    ablate_prep.put(cfg);
    ablate_flags.put(cfg);
  } else {
    std::ifstream f(manifest_in);
    if (!f) throw IoError("cannot read manifest '" + manifest_in + "'");
    json m;
    try {
      m = json::parse(f);
    } catch (const json::exception& e) {
      throw ValidationError("manifest '" + manifest_in + "' is not valid JSON: " + e.what());
    }
    if (!m.contains("subcommand") || !m.contains("config")) {
      throw ValidationError("manifest '" + manifest_in + "' lacks subcommand or config");
    }
    sub = m.at("subcommand").get<std::string>();
    if (!handlers().count(sub)) throw ValidationError("manifest names unknown subcommand '" + sub + "'");
    cfg = m.at("config");
    if (!out_override.empty()) cfg["out"] = out_override;
    execute(sub, cfg, {});
    return 0;
  }
  cfg["seed"] = seed;
  cfg["out"] = out;
  execute(sub, cfg, manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const json::exception& e) {
    std::cerr << "error: malformed configuration: " << e.what() << "\n";
    return static_cast<int>(ErrorClass::validation);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

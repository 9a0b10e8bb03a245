// tolnet command line: data preparation, training, certification and
// FGSM comparison for tolerance-trained regression networks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "tolnet/attack.hpp"
#include "tolnet/data.hpp"
#include "tolnet/interval.hpp"
#include "tolnet/losses.hpp"
#include "tolnet/model_io.hpp"
#include "tolnet/network.hpp"
#include "tolnet/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tolnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void write_resolved_config(CLI::App* cmd, const fs::path& out_dir, const std::string& name) {
  fs::create_directories(out_dir);
  std::ofstream os(out_dir / (name + ".config"));
  os << cmd->config_to_str(true, true);
}

// --stage mse:0.01:20  (kind:alpha:epochs)
Stage parse_stage(const std::string& text) {
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw ContractError("bad --stage '" + text + "', expected kind:alpha:epochs");
  Stage s;
  s.kind = loss_kind_from_name(text.substr(0, c1));
  s.alpha = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
  s.epochs = std::stoll(text.substr(c2 + 1));
  return s;
}

std::string stage_str(const Stage& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s:%g:%lld", loss_kind_name(s.kind), s.alpha,
                static_cast<long long>(s.epochs));
  return buf;
}

std::vector<double> epsilon_grid(double eps_max, double eps_step) {
  if (!(eps_step > 0) || !(eps_max >= eps_step))
    throw ContractError("epsilon grid needs 0 < step <= max");
  std::vector<double> grid;
  for (int i = 1; eps_step * i <= eps_max + 1e-12; ++i) grid.push_back(eps_step * i);
  return grid;
}

std::vector<int64_t> all_indices(const Dataset& ds) {
  std::vector<int64_t> idx(ds.size());
  for (size_t i = 0; i < ds.size(); ++i) idx[i] = static_cast<int64_t>(i);
  return idx;
}

struct DataPrepArgs {
  int64_t synthetic = 0;
  std::string tusimple, images, out;
  uint64_t seed = 0;
  int duplicate = -1;  // -1 auto: on for tusimple, off for synthetic
};

int run_data_prep(const DataPrepArgs& a, CLI::App* cmd) {
  if ((a.synthetic > 0) == !a.tusimple.empty())
    throw ContractError("choose exactly one of --synthetic or --tusimple");
  fs::create_directories(a.out);
  Dataset ds;
  json skipped = json::array();
  if (a.synthetic > 0) {
    ds = synthetic_dataset(a.synthetic, a.seed);
    if (a.duplicate == 1) ds = duplicate_rare(ds);
  } else {
    std::ifstream labels(a.tusimple);
    if (!labels) throw DataError("cannot open label file '" + a.tusimple + "'");
    std::string line;
    int64_t line_no = 0;
    while (std::getline(labels, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        LaneRecord rec = parse_lane_record(line);
        auto label = generate_label(rec);
        if (!label) {
          skipped.push_back({{"record", line_no},
                             {"raw_file", rec.raw_file},
                             {"reason", "no adjacent lane pair straddles the image center"}});
          continue;
        }
        // the native dataset ships compressed images; we read the lossless
        // conversions (see README) at the same relative path
        fs::path img = fs::path(a.images) / rec.raw_file;
        if (!fs::exists(img)) {
          fs::path pgm = img, bmp = img;
          pgm.replace_extension(".pgm");
          bmp.replace_extension(".bmp");
          if (fs::exists(pgm)) img = pgm;
          else if (fs::exists(bmp)) img = bmp;
          else {
            skipped.push_back({{"record", line_no},
                               {"raw_file", rec.raw_file},
                               {"reason", "image not found (looked for .pgm/.bmp conversion)"}});
            continue;
          }
        }
        Tensor processed = preprocess(read_image(img.string()));
        Sample s;
        s.id = rec.raw_file;
        s.label = *label;
        s.shape = processed.shape();
        s.pixels.resize(static_cast<size_t>(processed.numel()));
        for (int64_t i = 0; i < processed.numel(); ++i)
          s.pixels[static_cast<size_t>(i)] = static_cast<float>(processed[i]);
        ds.push_back(std::move(s));
      } catch (const DataError& e) {
        skipped.push_back({{"record", line_no}, {"reason", e.what()}});
      }
    }
    if (ds.empty()) throw DataError("no usable records in '" + a.tusimple + "'");
    if (a.duplicate != 0) ds = duplicate_rare(ds);
  }
  save_dataset(a.out, ds);
  {
    std::ofstream os(fs::path(a.out) / "skipped.jsonl");
    for (const json& j : skipped) os << j.dump() << "\n";
  }
  write_resolved_config(cmd, a.out, "data-prep");
  std::cout << "wrote " << ds.size() << " samples to " << a.out << " (" << skipped.size()
            << " records skipped)\n";
  return kExitOk;
}

struct TrainArgs {
  std::string data, out, val_data, init_model;
  std::vector<std::string> stage_texts;
  std::vector<uint64_t> seeds{0};
  double delta = 10.0;
  double kappa = 0.01;
  std::string layer = "fc40";
  int64_t batch_size = 32;
  int64_t top_k = 1;
  bool no_warmup = false;
  bool no_reset_adam = false;
};

int run_train(const TrainArgs& a, CLI::App* cmd) {
  Dataset train = load_dataset(a.data);
  fs::create_directories(a.out);
  write_resolved_config(cmd, a.out, "train");
  const std::string data_hash = file_hash_hex((fs::path(a.data) / "index.jsonl").string());

  std::optional<Dataset> val;
  if (!a.val_data.empty()) val = load_dataset(a.val_data);

  std::optional<LoadedModel> warm_start;
  if (!a.init_model.empty()) {
    if (a.seeds.size() != 1)
      throw ContractError("--init-model fine-tunes one model; use a single --seed");
    warm_start = load_model(a.init_model);
  }

  Network proto = warm_start ? warm_start->net : default_architecture(train.front().shape, 1);
  const int64_t l_tilde = resolve_perturb_layer(proto, a.layer);
  std::cout << "perturbation layer '" << a.layer << "' resolves to l~=" << l_tilde
            << " (feature dim "
            << shape_numel(layer_shapes(proto)[static_cast<size_t>(l_tilde - 1)]) << ")\n";

  Schedule schedule;
  schedule.batch_size = a.batch_size;
  schedule.kappa_warmup = !a.no_warmup;
  schedule.reset_adam_per_stage = !a.no_reset_adam;
  std::string schedule_text;
  for (const std::string& st : a.stage_texts) {
    Stage stage = parse_stage(st);
    if (stage.kind != LossKind::Mse) {
      stage.spec = RobustSpec{Tensor({1}, a.delta), l_tilde, a.kappa};
      stage.has_spec = true;
    }
    if (!schedule_text.empty()) schedule_text += " ";
    schedule_text += stage_str(stage);
    schedule.stages.push_back(std::move(stage));
  }
  schedule.validate();

  struct SeedResult {
    uint64_t seed;
    double val_loss;
    Network net;
    bool kept = false;
  };
  std::vector<SeedResult> results;

  for (uint64_t seed : a.seeds) {
    OptimizerConfig cfg;
    cfg.seed = seed;
    Network net = warm_start ? proto : init_weights(proto, seed);
    char metrics_name[64];
    std::snprintf(metrics_name, sizeof metrics_name, "metrics_seed%llu.jsonl",
                  static_cast<unsigned long long>(seed));
    std::ofstream metrics(fs::path(a.out) / metrics_name);
    TrainResult res = run_schedule(net, train, schedule, cfg, [&](const EpochRecord& r) {
      json line = {{"stage", r.stage},     {"kind", loss_kind_name(r.kind)},
                   {"epoch", r.epoch},     {"loss", r.loss},
                   {"wall_ms", r.wall_ms}, {"kappa", r.kappa},
                   {"seed", seed}};
      metrics << line.dump() << "\n";
      metrics.flush();
      std::cout << "seed " << seed << " stage " << r.stage << " epoch " << r.epoch << " loss "
                << r.loss << "\n";
    });
    double val_loss;
    if (val) {
      Tensor vin = make_batch_inputs(*val, all_indices(*val));
      Tensor vlb = make_batch_labels(*val, all_indices(*val));
      val_loss = interval_tolerance_loss(res.net, vin, vlb, Tensor({1}, 0.0)).value;
    } else {
      val_loss = res.log.back().loss;
    }
    results.push_back({seed, val_loss, std::move(res.net), false});
  }

  std::sort(results.begin(), results.end(),
            [](const SeedResult& x, const SeedResult& y) { return x.val_loss < y.val_loss; });
  json summary = json::array();
  for (size_t i = 0; i < results.size(); ++i) {
    SeedResult& r = results[i];
    r.kept = static_cast<int64_t>(i) < a.top_k;
    if (r.kept) {
      char name[64];
      std::snprintf(name, sizeof name, "model_seed%llu.tnmf",
                    static_cast<unsigned long long>(r.seed));
      Provenance prov{{"seed", std::to_string(r.seed)},
                      {"schedule", schedule_text},
                      {"data_hash", data_hash},
                      {"delta", std::to_string(a.delta)},
                      {"kappa", std::to_string(a.kappa)},
                      {"layer", a.layer}};
      save_model((fs::path(a.out) / name).string(), r.net, prov);
      std::cout << "kept seed " << r.seed << " (validation loss " << r.val_loss << ") -> " << name
                << "\n";
    }
    summary.push_back({{"seed", r.seed}, {"val_loss", r.val_loss}, {"kept", r.kept}});
  }
  std::ofstream os(fs::path(a.out) / "summary.json");
  os << summary.dump(2) << "\n";
  return kExitOk;
}

struct CertifyArgs {
  std::string model, data, out;
  double delta = 10.0;
  double kappa = 0.01;
  std::string layer = "fc40";
};

int run_certify(const CertifyArgs& a, CLI::App* cmd) {
  LoadedModel model = load_model(a.model);
  Dataset ds = load_dataset(a.data);
  const int64_t l_tilde = resolve_perturb_layer(model.net, a.layer);
  std::cout << "perturbation layer '" << a.layer << "' resolves to l~=" << l_tilde << "\n";
  RobustSpec spec{Tensor({1}, a.delta), l_tilde, a.kappa};
  spec.validate(model.net);

  json rows = json::array();
  int64_t certified = 0;
  for (const Sample& s : ds) {
    IntervalTensor bounds = output_bounds(model.net, s.input(), spec);
    bool ok = true;
    for (int64_t j = 0; j < bounds.lower.numel(); ++j)
      ok = ok && bounds.lower[j] >= s.label - a.delta && bounds.upper[j] <= s.label + a.delta;
    certified += ok ? 1 : 0;
    rows.push_back({{"id", s.id},
                    {"label", s.label},
                    {"lower", bounds.lower[0]},
                    {"upper", bounds.upper[0]},
                    {"certified", ok}});
  }
  const double fraction = static_cast<double>(certified) / static_cast<double>(ds.size());
  std::cout << "certified " << certified << "/" << ds.size() << " samples (fraction " << fraction
            << ") at delta=" << a.delta << " kappa=" << a.kappa << " layer=" << a.layer << "\n";
  if (fraction == 1.0)
    std::cout << "guarantee: every input whose layer-" << (l_tilde - 1)
              << " feature vector lies within +-" << a.kappa
              << " of a dataset sample's stays inside that sample's tolerance band\n";
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::ofstream rows_os(fs::path(a.out) / "certify.jsonl");
    for (const json& r : rows) rows_os << r.dump() << "\n";
    json summary = {{"certified", certified}, {"total", static_cast<int64_t>(ds.size())},
                    {"fraction", fraction},   {"delta", a.delta},
                    {"kappa", a.kappa},       {"layer", a.layer},
                    {"l_tilde", l_tilde}};
    std::ofstream sum_os(fs::path(a.out) / "certify_summary.json");
    sum_os << summary.dump(2) << "\n";
    write_resolved_config(cmd, a.out, "certify");
  }
  return kExitOk;
}

struct AttackArgs {
  std::string model, model_b, data, out;
  double deviation = 80.0;
  double eps_max = 0.5;
  double eps_step = 0.005;
  double equality_band = 0.05;
  double perfect_delta = 10.0;
};

AttackConfig attack_config(const AttackArgs& a) {
  AttackConfig cfg;
  cfg.deviation_threshold = a.deviation;
  cfg.epsilon_grid = epsilon_grid(a.eps_max, a.eps_step);
  cfg.equality_band = a.equality_band;
  cfg.perfect_delta = a.perfect_delta;
  cfg.validate();
  return cfg;
}

const char* status_str(MinEpsResult::Status s) {
  switch (s) {
    case MinEpsResult::Status::Found: return "found";
    case MinEpsResult::Status::NotFound: return "not-found";
    case MinEpsResult::Status::Skipped: return "skipped";
  }
  return "?";
}

int run_attack(const AttackArgs& a, CLI::App* cmd) {
  LoadedModel model = load_model(a.model);
  Dataset ds = load_dataset(a.data);
  AttackConfig cfg = attack_config(a);
  json rows = json::array();
  int64_t found = 0, not_found = 0, skipped = 0;
  for (const Sample& s : ds) {
    MinEpsResult r = minimal_epsilon(model.net, s.input(), Tensor::from({1}, {s.label}), cfg);
    switch (r.status) {
      case MinEpsResult::Status::Found: ++found; break;
      case MinEpsResult::Status::NotFound: ++not_found; break;
      case MinEpsResult::Status::Skipped: ++skipped; break;
    }
    json row = {{"id", s.id},
                {"status", status_str(r.status)},
                {"clean_deviation", r.clean_deviation}};
    if (r.status == MinEpsResult::Status::Found) {
      row["eps"] = r.eps;
      row["eps_raw_pixels"] = r.eps * 127.5;  // x 255/2 back to raw pixel units
    }
    rows.push_back(std::move(row));
  }
  std::cout << "attacked " << ds.size() << " images: " << found << " found, " << not_found
            << " not found within the grid, " << skipped << " skipped (not originally perfect)\n";
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::ofstream os(fs::path(a.out) / "attack.jsonl");
    for (const json& r : rows) os << r.dump() << "\n";
    write_resolved_config(cmd, a.out, "attack");
  }
  return kExitOk;
}

int run_compare(const AttackArgs& a, CLI::App* cmd) {
  LoadedModel model_a = load_model(a.model);
  LoadedModel model_b = load_model(a.model_b);
  Dataset ds = load_dataset(a.data);
  AttackConfig cfg = attack_config(a);
  ComparisonReport rep = compare_models(model_a.net, model_b.net, ds, cfg);

  auto bucket_str = [](Bucket b) {
    switch (b) {
      case Bucket::ALarger: return "a_larger";
      case Bucket::RoughlyEqual: return "roughly_equal";
      case Bucket::BLarger: return "b_larger";
    }
    return "?";
  };

  std::printf("%-32s %-12s %-12s %s\n", "image", "eps_a", "eps_b", "bucket");
  for (const ComparisonRow& row : rep.rows) {
    auto eps_str = [&](const MinEpsResult& r) -> std::string {
      if (r.status == MinEpsResult::Status::Found) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", r.eps);
        return buf;
      }
      if (r.status == MinEpsResult::Status::NotFound) {
        char buf[32];
        std::snprintf(buf, sizeof buf, ">%.3f", cfg.epsilon_grid.back());
        return buf;
      }
      return "skipped";
    };
    std::printf("%-32s %-12s %-12s %s\n", row.id.c_str(), eps_str(row.a).c_str(),
                eps_str(row.b).c_str(), row.counted ? bucket_str(row.bucket) : "skipped");
  }
  std::printf("summary: a_larger %.1f%%  roughly_equal %.1f%%  b_larger %.1f%%  (%lld images, "
              "%lld skipped)\n",
              100 * rep.frac_a_larger(), 100 * rep.frac_roughly_equal(),
              100 * rep.frac_b_larger(), static_cast<long long>(rep.counted()),
              static_cast<long long>(rep.skipped));

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::ofstream csv(fs::path(a.out) / "compare.csv");
    csv << "id,eps_a,eps_b,eps_a_raw_pixels,eps_b_raw_pixels,found_a,found_b,bucket\n";
    for (const ComparisonRow& row : rep.rows) {
      if (!row.counted) continue;
      const bool fa = row.a.status == MinEpsResult::Status::Found;
      const bool fb = row.b.status == MinEpsResult::Status::Found;
      csv << row.id << "," << (fa ? std::to_string(row.a.eps) : "") << ","
          << (fb ? std::to_string(row.b.eps) : "") << ","
          << (fa ? std::to_string(row.a.eps * 127.5) : "") << ","
          << (fb ? std::to_string(row.b.eps * 127.5) : "") << "," << fa << "," << fb << ","
          << bucket_str(row.bucket) << "\n";
    }
    json summary = {{"a_larger", rep.a_larger},
                    {"roughly_equal", rep.roughly_equal},
                    {"b_larger", rep.b_larger},
                    {"skipped", rep.skipped},
                    {"frac_a_larger", rep.frac_a_larger()},
                    {"frac_roughly_equal", rep.frac_roughly_equal()},
                    {"frac_b_larger", rep.frac_b_larger()},
                    {"deviation_threshold", cfg.deviation_threshold},
                    {"equality_band", cfg.equality_band},
                    {"model_a", a.model},
                    {"model_b", a.model_b}};
    std::ofstream os(fs::path(a.out) / "compare.json");
    os << summary.dump(2) << "\n";
    write_resolved_config(cmd, a.out, "compare");
  }
  return kExitOk;
}

int run_model_info(const std::string& path) {
  LoadedModel model = load_model(path);
  std::cout << "input shape " << shape_str(model.net.input_shape) << ", output dim "
            << model.net.output_dim() << "\n";
  std::vector<Shape> shapes = layer_shapes(model.net);
  for (int64_t i = 0; i < model.net.num_layers(); ++i) {
    const Layer& l = model.net.layers[static_cast<size_t>(i)];
    std::cout << "  " << (i + 1) << ": " << layer_kind_name(l.kind) << " '" << l.name << "' -> "
              << shape_str(shapes[static_cast<size_t>(i + 1)]) << "\n";
  }
  for (const auto& [k, v] : model.provenance) std::cout << "provenance " << k << " = " << v << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // batch buffers are tens of MB; keep them on the heap instead of
  // mmap/munmap cycles that refault pages every batch
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"tolerance-trained regression networks: data prep, training, certification, "
               "FGSM evaluation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a TOML/INI file");

  DataPrepArgs dp;
  CLI::App* cmd_dp = app.add_subcommand("data-prep", "build a dataset directory");
  cmd_dp->add_option("--synthetic", dp.synthetic, "render N synthetic road images");
  cmd_dp->add_option("--tusimple", dp.tusimple, "lane label file (JSON lines)");
  cmd_dp->add_option("--images", dp.images, "image root for --tusimple");
  cmd_dp->add_option("--out", dp.out, "output dataset directory")->required();
  cmd_dp->add_option("--seed", dp.seed, "generator seed");
  cmd_dp->add_flag(
      "--duplicate-rare,!--no-duplicate-rare",
      [&dp](int64_t count) { dp.duplicate = count > 0 ? 1 : 0; },
      "duplicate samples with |label-640| >= 100 (default: on for tusimple)");

  TrainArgs tr;
  CLI::App* cmd_tr = app.add_subcommand("train", "train per the staged schedule");
  cmd_tr->add_option("--data", tr.data, "training dataset directory")->required();
  cmd_tr->add_option("--out", tr.out, "output directory")->required();
  cmd_tr->add_option("--val-data", tr.val_data, "validation dataset for --top-k selection");
  cmd_tr->add_option("--init-model", tr.init_model,
                     "fine-tune from this model instead of fresh initialization");
  cmd_tr->add_option("--stage", tr.stage_texts, "stage as kind:alpha:epochs (repeatable)")
      ->required();
  cmd_tr->add_option("--seed", tr.seeds, "training seed(s), repeatable")->expected(-1);
  cmd_tr->add_option("--delta", tr.delta, "output tolerance for interval/symbolic stages");
  cmd_tr->add_option("--kappa", tr.kappa, "feature perturbation bound for symbolic stages");
  cmd_tr->add_option("--layer", tr.layer, "perturbation layer name");
  cmd_tr->add_option("--batch-size", tr.batch_size, "minibatch size");
  cmd_tr->add_option("--top-k", tr.top_k, "keep the k best seeds by validation loss");
  cmd_tr->add_flag("--no-kappa-warmup", tr.no_warmup, "apply full kappa from the first epoch");
  cmd_tr->add_flag("--no-reset-adam", tr.no_reset_adam, "carry Adam state across stages");

  CertifyArgs ce;
  CLI::App* cmd_ce = app.add_subcommand("certify", "check output bounds against tolerance bands");
  cmd_ce->add_option("--model", ce.model, "model file")->required();
  cmd_ce->add_option("--data", ce.data, "dataset directory")->required();
  cmd_ce->add_option("--out", ce.out, "report directory");
  cmd_ce->add_option("--delta", ce.delta, "output tolerance");
  cmd_ce->add_option("--kappa", ce.kappa, "feature perturbation bound");
  cmd_ce->add_option("--layer", ce.layer, "perturbation layer name");

  AttackArgs at;
  CLI::App* cmd_at = app.add_subcommand("attack", "minimal-epsilon search on one model");
  cmd_at->add_option("--model", at.model, "model file")->required();
  cmd_at->add_option("--data", at.data, "dataset directory")->required();
  cmd_at->add_option("--out", at.out, "report directory");
  cmd_at->add_option("--deviation", at.deviation, "deviation threshold (output units)");
  cmd_at->add_option("--eps-max", at.eps_max, "grid maximum");
  cmd_at->add_option("--eps-step", at.eps_step, "grid step");
  cmd_at->add_option("--perfect-delta", at.perfect_delta,
                     "band defining an originally perfect prediction");

  AttackArgs cp;
  CLI::App* cmd_cp = app.add_subcommand("compare", "compare minimal epsilons of two models");
  cmd_cp->add_option("--model-a", cp.model, "model A (e.g. robust)")->required();
  cmd_cp->add_option("--model-b", cp.model_b, "model B (e.g. baseline)")->required();
  cmd_cp->add_option("--data", cp.data, "dataset directory")->required();
  cmd_cp->add_option("--out", cp.out, "report directory");
  cmd_cp->add_option("--deviation", cp.deviation, "deviation threshold (output units)");
  cmd_cp->add_option("--eps-max", cp.eps_max, "grid maximum");
  cmd_cp->add_option("--eps-step", cp.eps_step, "grid step");
  cmd_cp->add_option("--equality-band", cp.equality_band, "|eps_a - eps_b| treated as equal");
  cmd_cp->add_option("--perfect-delta", cp.perfect_delta,
                     "band defining an originally perfect prediction");

  std::string info_path;
  CLI::App* cmd_mi = app.add_subcommand("model-info", "print a model's architecture");
  cmd_mi->add_option("--model", info_path, "model file")->required();

  try {
    app.parse(argc, argv);
    if (cmd_dp->parsed()) return run_data_prep(dp, cmd_dp);
    if (cmd_tr->parsed()) return run_train(tr, cmd_tr);
    if (cmd_ce->parsed()) return run_certify(ce, cmd_ce);
    if (cmd_at->parsed()) return run_attack(at, cmd_at);
    if (cmd_cp->parsed()) return run_compare(cp, cmd_cp);
    if (cmd_mi->parsed()) return run_model_info(info_path);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

#include "iib/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "iib/error.hpp"
#include "iib/gradcheck.hpp"
#include "iib/quality.hpp"
#include "iib/raster.hpp"
#include "iib/refnet.hpp"
#include "iib/simulate.hpp"
#include "iib/version.hpp"

namespace iib::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitBadFlags = 3;

int exit_code_for(const error& e) {
  switch (e.code()) {
    case errc::io_error:
    case errc::bad_magic:
    case errc::truncated_file:
    case errc::version_unsupported:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(errc::io_error, "cannot open " + path.string() + " for writing");
  os << text;
  os.flush();
  if (!os) fail(errc::io_error, "write failed for " + path.string());
}

void write_manifest(const fs::path& path, const std::string& command, const json& parameters,
                    const json& inputs, const json& outputs) {
  json manifest;
  manifest["tool"] = "iibtool";
  manifest["version"] = kToolkitVersion;
  manifest["command"] = command;
  manifest["parameters"] = parameters;
  manifest["inputs"] = inputs;
  manifest["outputs"] = outputs;
  write_text_file(path, manifest.dump(2) + "\n");
}

struct SceneFiles {
  fs::path ms, pan, lms, panlr, target;
};

/// Scenes in a data directory, sorted by index. Every scene must carry the
/// full five-raster set written by `simulate`.
std::vector<SceneFiles> find_scenes(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(errc::io_error, dir.string() + " is not a directory");
  std::map<long, SceneFiles> scenes;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("scene_", 0) != 0 || name.find("_target.brf") == std::string::npos)
      continue;
    const std::string index_text =
        name.substr(6, name.size() - 6 - std::string("_target.brf").size());
    long index = -1;
    try {
      index = std::stol(index_text);
    } catch (const std::exception&) {
      continue;
    }
    const std::string stem = "scene_" + index_text + "_";
    SceneFiles files;
    files.ms = dir / (stem + "ms.brf");
    files.pan = dir / (stem + "pan.brf");
    files.lms = dir / (stem + "lms.brf");
    files.panlr = dir / (stem + "panlr.brf");
    files.target = dir / (stem + "target.brf");
    for (const fs::path* p : {&files.ms, &files.pan, &files.lms, &files.panlr, &files.target})
      if (!fs::exists(*p)) fail(errc::io_error, "missing data file " + p->string());
    scenes.emplace(index, std::move(files));
  }
  if (scenes.empty()) fail(errc::io_error, "no scenes found under " + dir.string());
  std::vector<SceneFiles> out;
  out.reserve(scenes.size());
  for (auto& [index, files] : scenes) out.push_back(std::move(files));
  return out;
}

struct LoadedScenes {
  std::vector<SampleTriple> triples;
  std::vector<Raster> ms;
  std::vector<Raster> pan_full;
  int ratio = 0;
  int bands = 0;
};

LoadedScenes load_scenes(const fs::path& dir) {
  LoadedScenes out;
  for (const SceneFiles& files : find_scenes(dir)) {
    Raster ms = read_brf(files.ms);
    Raster pan = read_brf(files.pan);
    SampleTriple triple{read_brf(files.lms), read_brf(files.panlr), read_brf(files.target)};
    triple.validate();
    if (pan.height() % ms.height() != 0 || pan.width() % ms.width() != 0 ||
        pan.height() / ms.height() != pan.width() / ms.width())
      fail(errc::geometry_mismatch, "pan and ms scales disagree for " + files.ms.string());
    const int ratio = pan.height() / ms.height();
    if (out.ratio == 0) {
      out.ratio = ratio;
      out.bands = ms.bands();
    } else if (ratio != out.ratio || ms.bands() != out.bands) {
      fail(errc::geometry_mismatch, "scenes disagree in ratio or band count");
    }
    out.ms.push_back(std::move(ms));
    out.pan_full.push_back(std::move(pan));
    out.triples.push_back(std::move(triple));
  }
  return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  int bands = 4;
  int size = 256;
  int ratio = 4;
  std::uint64_t seed = 0;
  int count = 1;
  int blobs = 40;
  std::string out;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out) {
  const fs::path dir(args.out);
  fs::create_directories(dir);

  json outputs = json::array();
  for (int i = 0; i < args.count; ++i) {
    SceneSpec spec;
    spec.bands = args.bands;
    spec.height = args.size;
    spec.width = args.size;
    spec.ratio = args.ratio;
    spec.seed = args.seed + static_cast<std::uint64_t>(i);
    spec.blob_count = args.blobs;
    const Scene scene = synth_scene(spec);
    const SampleTriple triple = make_triple(scene.ms, scene.pan, spec.ratio);

    const std::string stem = "scene_" + std::to_string(i) + "_";
    const struct {
      const char* suffix;
      const Raster* raster;
    } files[] = {{"ms", &scene.ms},
                 {"pan", &scene.pan},
                 {"lms", &triple.lms},
                 {"panlr", &triple.pan},
                 {"target", &triple.target}};
    for (const auto& f : files) {
      const fs::path path = dir / (stem + f.suffix + ".brf");
      write_brf(path, *f.raster);
      outputs.push_back(path.filename().string());
    }
  }

  const json parameters = {{"bands", args.bands}, {"size", args.size},
                           {"ratio", args.ratio}, {"seed", args.seed},
                           {"count", args.count}, {"blobs", args.blobs},
                           {"out", args.out}};
  write_manifest(dir / "manifest.json", "simulate", parameters, json::array(), outputs);
  out << "simulate: wrote " << args.count << " scene(s) to " << dir.string() << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string loss = "iib";
  double alpha = 1.0;
  int steps = 500;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int batch = 4;
  int window = 8;
  int stride = 4;
  double epsilon = 1e-8;
  std::vector<int> hidden{16, 8};
  std::vector<int> kernels{9, 5, 5};
  std::string out;
};

int cmd_train(const TrainArgs& args, std::ostream& out) {
  const LoadedScenes scenes = load_scenes(args.data);

  std::vector<int> channels = args.hidden;
  channels.push_back(scenes.bands);
  if (channels.size() != args.kernels.size())
    fail(errc::invalid_architecture, "kernel list must have one entry per layer");

  Network net = init_network(scenes.bands, channels, args.kernels, args.seed);

  TrainConfig cfg;
  cfg.loss_kind = args.loss == "l2" ? LossKind::l2 : LossKind::iib;
  cfg.loss.alpha = args.alpha;
  cfg.loss.q = QConfig{args.window, args.stride, args.epsilon};
  cfg.steps = args.steps;
  cfg.learning_rate = args.lr;
  cfg.batch = args.batch;
  cfg.seed = args.seed;

  const TrainResult result = train(std::move(net), scenes.triples, cfg);

  const fs::path dir(args.out);
  fs::create_directories(dir);
  const fs::path net_path = dir / "network.iibn";
  save_network(net_path, result.net);

  std::string csv = "step,intra,inter,total\n";
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const StepLoss& s = result.history[i];
    csv += std::to_string(i + 1) + "," + format_g9(s.intra) + "," + format_g9(s.inter) + "," +
           format_g9(s.total) + "\n";
  }
  const fs::path csv_path = dir / "history.csv";
  write_text_file(csv_path, csv);

  const json parameters = {{"data", args.data},     {"loss", args.loss},
                           {"alpha", args.alpha},   {"steps", args.steps},
                           {"lr", args.lr},         {"seed", args.seed},
                           {"batch", args.batch},   {"window", args.window},
                           {"stride", args.stride}, {"epsilon", args.epsilon},
                           {"hidden", args.hidden}, {"kernels", args.kernels},
                           {"out", args.out}};
  write_manifest(dir / "manifest.json", "train", parameters, json::array({args.data}),
                 json::array({net_path.filename().string(), csv_path.filename().string()}));
  out << "train: " << args.steps << " step(s), final total loss "
      << format_g9(result.history.back().total) << "\n";
  return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string net;
  std::string data;
  std::string mode = "simulated";
  int window = 0;  // 0: per-mode default
  std::string out;
};

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const Network net = load_network(args.net);
  const LoadedScenes scenes = load_scenes(args.data);

  EvalConfig cfg;
  cfg.ratio = scenes.ratio;
  if (args.window > 0) {
    cfg.uiqi_q.window = args.window;
    cfg.qnr_q = QConfig{args.window, args.window, 0.0};
  }

  const bool actual = args.mode == "actual";
  const MetricReport report =
      evaluate(net, scenes.triples, actual ? &scenes.pan_full : nullptr, cfg);

  std::string text;
  if (actual) {
    text = "d_lambda=" + format_g9(report.d_lambda) + "\n" +
           "d_s=" + format_g9(report.d_s) + "\n" + "qnr=" + format_g9(report.qnr) + "\n";
  } else {
    text = "uiqi=" + format_g9(report.uiqi) + "\n" +
           "sam_degrees=" + format_g9(report.sam_degrees) + "\n" +
           "ergas=" + format_g9(report.ergas) + "\n";
  }
  const fs::path out_path(args.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_text_file(out_path, text);

  const json parameters = {{"net", args.net},
                           {"data", args.data},
                           {"mode", args.mode},
                           {"window", args.window},
                           {"out", args.out}};
  write_manifest(out_path.string() + ".manifest.json", "eval", parameters,
                 json::array({args.net, args.data}),
                 json::array({out_path.filename().string()}));
  out << text;
  return kExitOk;
}

// --------------------------------------------------------------- gradcheck

struct GradArgs {
  std::uint64_t seed = 0;
  int bands = 3;
  int size = 16;
  int window = 8;
  int stride = 4;
  double epsilon = 1e-8;
  bool corrupt = false;
};

int cmd_gradcheck(const GradArgs& args, std::ostream& out) {
  GradCheckConfig cfg;
  cfg.seed = args.seed;
  cfg.bands = args.bands;
  cfg.size = args.size;
  cfg.q = QConfig{args.window, args.stride, args.epsilon};
  cfg.corrupt = args.corrupt;

  const auto items = run_gradcheck(cfg);
  bool ok = true;
  for (const auto& item : items) {
    const bool pass = item.max_rel_err < kGradCheckThreshold;
    ok = ok && pass;
    out << item.name << " max_rel_err=" << format_g9(item.max_rel_err) << " "
        << (pass ? "[ok]" : "[FAIL]") << "\n";
  }
  out << "gradcheck: " << (ok ? "PASS" : "FAIL") << " (threshold "
      << format_g9(kGradCheckThreshold) << ")\n";
  return ok ? kExitOk : kExitValidation;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pansharpening numerics toolkit: synthetic Wald-protocol data, "
               "Q-index based losses with analytic gradients, quality metrics and a "
               "reference fusion network"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate seeded synthetic scenes");
  sim_cmd->add_option("--bands", sim.bands, "MS band count")->capture_default_str();
  sim_cmd->add_option("--size", sim.size, "PAN-scale height and width")->capture_default_str();
  sim_cmd->add_option("--ratio", sim.ratio, "PAN/MS resolution ratio")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "base seed; scene i uses seed+i")
      ->capture_default_str();
  sim_cmd->add_option("--count", sim.count, "number of scenes")->capture_default_str();
  sim_cmd->add_option("--blobs", sim.blobs, "latent blob count")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the reference fusion network");
  train_cmd->add_option("--data", tr.data, "scene directory")->required();
  train_cmd->add_option("--loss", tr.loss, "training objective")
      ->check(CLI::IsMember({"l2", "iib"}))
      ->required();
  train_cmd->add_option("--alpha", tr.alpha, "inter-band weight")->capture_default_str();
  train_cmd->add_option("--steps", tr.steps, "optimizer steps")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "learning rate")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "init and batch seed")->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "samples per step")->capture_default_str();
  train_cmd->add_option("--window", tr.window, "loss Q window")->capture_default_str();
  train_cmd->add_option("--stride", tr.stride, "loss Q stride")->capture_default_str();
  train_cmd->add_option("--epsilon", tr.epsilon, "loss Q stabilizer")->capture_default_str();
  train_cmd->add_option("--channels", tr.hidden, "hidden channel counts")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--kernels", tr.kernels, "kernel size per layer")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--out", tr.out, "output directory")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained network");
  eval_cmd->add_option("--net", ev.net, "network file")->required();
  eval_cmd->add_option("--data", ev.data, "scene directory")->required();
  eval_cmd->add_option("--mode", ev.mode, "evaluation protocol")
      ->check(CLI::IsMember({"simulated", "actual"}))
      ->required();
  eval_cmd->add_option("--window", ev.window, "override the metric window");
  eval_cmd->add_option("--out", ev.out, "metrics file")->required();

  GradArgs gc;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient validation");
  grad_cmd->add_option("--seed", gc.seed, "base seed")->capture_default_str();
  grad_cmd->add_option("--bands", gc.bands, "image band count")->capture_default_str();
  grad_cmd->add_option("--size", gc.size, "image height and width")->capture_default_str();
  grad_cmd->add_option("--window", gc.window, "Q window")->capture_default_str();
  grad_cmd->add_option("--stride", gc.stride, "Q stride")->capture_default_str();
  grad_cmd->add_option("--epsilon", gc.epsilon, "Q stabilizer")->capture_default_str();
  grad_cmd->add_flag("--corrupt", gc.corrupt, "perturb analytic gradients (test hook)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "flag error: " << e.what() << "\n";
    return kExitBadFlags;
  }

  try {
    if (sim_cmd->parsed()) {
      if (sim.bands < 1 || sim.count < 1 || sim.blobs < 1 || sim.ratio < 2)
        fail(errc::invalid_argument, "bands, count and blobs must be >= 1, ratio >= 2");
      // MS-scale dimensions must also split into ratio x ratio blocks.
      if (sim.size < 1 || sim.size % (sim.ratio * sim.ratio) != 0) {
        err << "flag error: --size must be a positive multiple of ratio^2\n";
        return kExitBadFlags;
      }
      return cmd_simulate(sim, out);
    }
    if (train_cmd->parsed()) return cmd_train(tr, out);
    if (eval_cmd->parsed()) return cmd_eval(ev, out);
    if (grad_cmd->parsed()) return cmd_gradcheck(gc, out);
  } catch (const error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitBadFlags;
}

}  // namespace iib::cli

// Copyright 2026 The LAD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lad/cli.h"

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "lad/error.h"
#include "lad/eval.h"
#include "lad/report.h"

namespace lad {
namespace {

namespace fs = std::filesystem;

const std::vector<double> kDefaultAlphas = {0.0, 1e-3, 1e-2, 1e-1, 1.0};

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct TrainFlags {
  std::string mode;
  std::string dataset;
  std::string name;
  std::string teacher_checkpoint;
  std::optional<double> alpha, lambda, beta, temperature, lr;
  std::optional<int> iterations, batch_size, eval_every;
  bool no_consistency = false;
  bool no_class_wise = false;
  bool clean_label = false;
  bool independent_copies = false;
  bool one_directional = false;
};

struct EvalFlags {
  std::string checkpoint;
  std::string dataset;
  int m = 3;
  int num_images = 20;
  int draws = 4;
};

struct SweepFlags {
  std::string dataset;
  std::vector<double> alphas = kDefaultAlphas;
  std::optional<int> iterations;
};

void AddCommon(CLI::App* app, CommonFlags& flags) {
  app->add_option("--config", flags.config_path, "experiment config or manifest (JSON)");
  app->add_option("--seed", flags.seed, "seed override");
  app->add_option("--out", flags.out, "output directory");
}

ExperimentConfig LoadConfig(const CommonFlags& flags) {
  if (flags.config_path.empty()) return ExperimentConfig{};
  return ExperimentConfigFromJson(ReadJsonFile(flags.config_path));
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  Require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
}

std::string ResolveDataset(const std::string& flag, const ExperimentConfig& config) {
  if (!flag.empty()) return flag;
  if (!config.train.dataset.empty()) return config.train.dataset;
  return config.dataset_dir;
}

TrainConfig BuildTrainConfig(const ExperimentConfig& config, TrainMode mode,
                             const TrainFlags& f, const CommonFlags& common) {
  TrainConfig c = config.train;
  c.net = mode == TrainMode::kTeacher ? config.teacher_net : config.student_net;
  if (common.seed) c.seed = *common.seed;
  if (f.alpha) c.alpha = *f.alpha;
  if (f.lambda) c.lambda_consistency = *f.lambda;
  if (f.beta) c.beta_kd = *f.beta;
  if (f.temperature) c.temperature = *f.temperature;
  if (f.lr) c.learning_rate = *f.lr;
  if (f.iterations) c.iterations = *f.iterations;
  if (f.batch_size) c.batch_size = *f.batch_size;
  if (f.eval_every) c.eval_every = *f.eval_every;
  if (f.no_consistency) c.dual_path = false;
  if (f.no_class_wise) c.class_wise_noising = false;
  if (f.clean_label) {
    c.class_wise_noising = false;
    c.alpha = 0.0;
  }
  if (f.independent_copies) c.shared_weights = false;
  if (f.one_directional) c.consistency_form = ConsistencyForm::kOneDirectional;
  c.dataset = ResolveDataset(f.dataset, config);
  return c;
}

class TrainingProgress {
 public:
  explicit TrainingProgress(std::ostream& err) { SetTrainingLog(&err); }
  ~TrainingProgress() { SetTrainingLog(nullptr); }
};

int CmdGenData(const CommonFlags& common, std::ostream& out) {
  ExperimentConfig config = LoadConfig(common);
  if (common.seed) config.dataset.seed = *common.seed;
  const fs::path dir = common.out.empty() ? fs::path(config.dataset_dir) : fs::path(common.out);
  DatasetManifest manifest = GenerateDataset(config.dataset, dir);
  out << "wrote " << config.dataset.num_train + config.dataset.num_val
      << " samples to " << dir.string() << " (manifest hash "
      << JsonHash(ToJson(manifest)) << ")\n";
  return kExitOk;
}

int CmdTrain(const CommonFlags& common, const TrainFlags& flags, std::ostream& out,
             std::ostream& err) {
  const TrainMode mode = TrainModeFromString(flags.mode);
  ExperimentConfig config = LoadConfig(common);
  TrainConfig train = BuildTrainConfig(config, mode, flags, common);
  std::optional<Checkpoint> teacher;
  if (mode == TrainMode::kStudent) {
    Require(!flags.teacher_checkpoint.empty(), ErrorCode::kInvalidArgument,
            "train student requires --teacher-checkpoint");
    teacher = LoadCheckpoint(flags.teacher_checkpoint);
  }
  const Dataset data = LoadDataset(train.dataset);
  const fs::path out_dir = common.out.empty() ? fs::path(config.out_dir) : fs::path(common.out);
  const fs::path prefix = out_dir / (flags.name.empty() ? flags.mode : flags.name);
  // Fail on an unwritable destination before spending time on training.
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  Require(!ec, ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  TrainingProgress progress(err);
  TrainResult result = mode == TrainMode::kTeacher   ? TrainTeacher(train, data)
                       : mode == TrainMode::kStudent ? TrainStudent(train, data, *teacher)
                                                     : TrainBaseline(train, data);
  SaveCheckpoint(prefix, result);
  ExperimentConfig used = config;
  used.train = result.config;
  (mode == TrainMode::kTeacher ? used.teacher_net : used.student_net) = result.config.net;
  WriteJsonFile(prefix.string() + ".config.json", ToJson(used));
  out << TrainModeName(mode) << " final val mIoU " << result.record.final_val_miou
      << " -> " << prefix.string() << "\n";
  return kExitOk;
}

struct LoadedEval {
  Checkpoint ckpt;
  Dataset data;
  fs::path report_dir;
  std::string arm;
};

LoadedEval LoadForEval(const CommonFlags& common, const EvalFlags& flags) {
  Require(!flags.checkpoint.empty(), ErrorCode::kInvalidArgument,
          "--checkpoint is required");
  LoadedEval e;
  e.ckpt = LoadCheckpoint(flags.checkpoint);
  const std::string dataset = flags.dataset.empty() ? e.ckpt.config.dataset : flags.dataset;
  Require(!dataset.empty(), ErrorCode::kInvalidArgument,
          "no dataset given and the checkpoint records none");
  e.data = LoadDataset(dataset);
  Require(e.data.num_classes() == e.ckpt.net.config().num_classes, ErrorCode::kShapeMismatch,
          "checkpoint predicts " + std::to_string(e.ckpt.net.config().num_classes) +
              " classes but the dataset has " + std::to_string(e.data.num_classes()));
  const fs::path prefix = CheckpointPrefix(flags.checkpoint);
  e.report_dir = common.out.empty()
                     ? (prefix.has_parent_path() ? prefix.parent_path() : fs::path("."))
                     : fs::path(common.out);
  e.arm = prefix.filename().string();
  return e;
}

std::span<const Sample> FirstVal(const Dataset& data, int count) {
  Require(count >= 1, ErrorCode::kInvalidArgument, "--num-images must be >= 1");
  std::span<const Sample> val(data.val);
  return val.first(std::min<std::size_t>(val.size(), count));
}

Json Provenance(const Checkpoint& ckpt, std::uint64_t eval_seed) {
  return Json{{"config_hash", JsonHash(ToJson(ckpt.config))},
              {"train_seed", ckpt.config.seed},
              {"eval_seed", eval_seed},
              {"mode", TrainModeName(ckpt.mode)}};
}

int CmdEval(const CommonFlags& common, const EvalFlags& flags, std::ostream& out) {
  LoadedEval e = LoadForEval(common, flags);
  const std::uint64_t seed = common.seed.value_or(0);
  MiouResult miou = EvaluateMiou(e.ckpt.net, e.data.val, e.ckpt.config.noiser(), seed);
  ReportRow row;
  row.arm = e.arm;
  (e.ckpt.mode == TrainMode::kTeacher ? row.teacher_miou : row.student_miou) = miou.miou;
  Json per_class = Json::array();
  for (const auto& v : miou.per_class) per_class.push_back(v ? Json(*v) : Json(nullptr));
  row.extra["per_class_iou"] = per_class;
  Report report{"eval " + e.arm, {row}, Provenance(e.ckpt, seed)};
  AppendReport(e.report_dir, report);
  out << FormatReport(report);
  return kExitOk;
}

int CmdStability(const CommonFlags& common, const EvalFlags& flags, std::ostream& out) {
  LoadedEval e = LoadForEval(common, flags);
  Require(flags.m >= 1, ErrorCode::kInvalidArgument, "-m must be >= 1");
  const std::uint64_t seed = common.seed.value_or(0);
  StabilityReport s = EvaluateStability(e.ckpt.net, FirstVal(e.data, flags.num_images),
                                        flags.m, e.ckpt.config.noiser(), seed);
  ReportRow row;
  row.arm = e.arm;
  row.kl_mean = s.kl_mean;
  row.extra["m"] = s.m;
  row.extra["per_image_kl_mean"] = s.per_image;
  Report report{"stability " + e.arm, {row}, Provenance(e.ckpt, seed)};
  AppendReport(e.report_dir, report);
  out << FormatReport(report);
  return kExitOk;
}

int CmdShortcut(const CommonFlags& common, const EvalFlags& flags, std::ostream& out) {
  LoadedEval e = LoadForEval(common, flags);
  const std::uint64_t seed = common.seed.value_or(0);
  ShortcutReport s = EvaluateShortcut(e.ckpt.net, FirstVal(e.data, flags.num_images),
                                      e.ckpt.config.noiser(), seed, flags.draws);
  ReportRow row;
  row.arm = e.arm;
  row.saliency_ratio = s.mean_ratio;
  row.extra["draws"] = flags.draws;
  row.extra["per_image_saliency_ratio"] = s.per_image;
  Report report{"shortcut " + e.arm, {row}, Provenance(e.ckpt, seed)};
  AppendReport(e.report_dir, report);
  out << FormatReport(report);
  return kExitOk;
}

std::string AlphaTag(double alpha) {
  std::ostringstream os;
  os << alpha;
  return os.str();
}

int CmdSweepAlpha(const CommonFlags& common, const SweepFlags& flags, std::ostream& out,
                  std::ostream& err) {
  ExperimentConfig config = LoadConfig(common);
  if (common.seed) config.train.seed = *common.seed;
  if (flags.iterations) config.train.iterations = *flags.iterations;
  Require(!flags.alphas.empty(), ErrorCode::kInvalidArgument, "--alphas is empty");
  for (double a : flags.alphas) {
    Require(a >= 0.0, ErrorCode::kInvalidArgument, "alphas must be >= 0");
  }
  const std::string dataset_dir = ResolveDataset(flags.dataset, config);
  const Dataset data = LoadDataset(dataset_dir);
  const fs::path out_dir = common.out.empty() ? fs::path(config.out_dir) : fs::path(common.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  Require(!ec, ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  WriteJsonFile(out_dir / "sweep.config.json", ToJson(config));

  TrainingProgress progress(err);
  Report report;
  report.title = "alpha sweep";
  report.provenance = Json{{"config_hash", JsonHash(ToJson(config))},
                           {"train_seed", config.train.seed},
                           {"eval_seed", config.eval.seed},
                           {"dataset", dataset_dir}};
  std::vector<SweepSeries> series;
  std::ostringstream table;
  table << "mode";
  for (double a : flags.alphas) table << "\talpha=" << AlphaTag(a) << " (T/S)";
  table << "\n";
  for (bool class_wise : {true, false}) {
    const std::string mode_name = class_wise ? "with class-wise" : "without class-wise";
    SweepSeries teacher_line{mode_name + " teacher", {}, true};
    SweepSeries student_line{mode_name + " student", {}, false};
    table << mode_name;
    for (double alpha : flags.alphas) {
      const std::string cell = std::string(class_wise ? "cw" : "nocw") + "_a" + AlphaTag(alpha);
      TrainConfig tc = config.train;
      tc.alpha = alpha;
      tc.class_wise_noising = class_wise;
      tc.dataset = dataset_dir;
      tc.net = config.teacher_net;
      err << "[sweep] " << cell << ": teacher\n";
      TrainResult teacher = TrainTeacher(tc, data);
      SaveCheckpoint(out_dir / cell / "teacher", teacher);

      Checkpoint teacher_ckpt{TrainMode::kTeacher, teacher.config, teacher.net,
                              teacher.record.final_val_miou};
      TrainConfig sc = config.train;
      sc.dataset = dataset_dir;
      sc.net = config.student_net;
      err << "[sweep] " << cell << ": student\n";
      TrainResult student = TrainStudent(sc, data, teacher_ckpt);
      SaveCheckpoint(out_dir / cell / "student", student);

      const auto val = FirstVal(data, config.eval.num_images);
      ReportRow row;
      row.arm = cell;
      row.teacher_miou = teacher.record.final_val_miou;
      row.student_miou = student.record.final_val_miou;
      row.kl_mean = EvaluateStability(teacher.net, val, config.eval.m,
                                      teacher.config.noiser(), config.eval.seed)
                        .kl_mean;
      row.saliency_ratio = EvaluateShortcut(teacher.net, val, teacher.config.noiser(),
                                            config.eval.seed, config.eval.saliency_draws)
                               .mean_ratio;
      row.extra = Json{{"alpha", alpha},
                       {"class_wise_noising", class_wise},
                       {"teacher_checkpoint", (out_dir / cell / "teacher").string()},
                       {"student_checkpoint", (out_dir / cell / "student").string()}};
      report.rows.push_back(row);
      teacher_line.values.push_back(*row.teacher_miou);
      student_line.values.push_back(*row.student_miou);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "\t%.4f / %.4f", *row.teacher_miou, *row.student_miou);
      table << buf;
    }
    table << "\n";
    series.push_back(std::move(teacher_line));
    series.push_back(std::move(student_line));
  }
  AppendReport(out_dir, report);
  WriteFile(out_dir / "sweep.txt", table.str());
  WriteFile(out_dir / "sweep.svg",
            SweepPlotSvg(flags.alphas, series, "teacher / student val mIoU vs alpha"));
  out << table.str();
  return kExitOk;
}

int ExitCodeFor(const Error& e) {
  return e.code() == ErrorCode::kNumeric ? kExitInternal : kExitUsage;
}

}  // namespace

Json ToJson(const ExperimentConfig& c) {
  return Json{{"format_version", kFormatVersion},
              {"dataset", ToJson(c.dataset)},
              {"dataset_dir", c.dataset_dir},
              {"teacher_net", ToJson(c.teacher_net)},
              {"student_net", ToJson(c.student_net)},
              {"train", ToJson(c.train)},
              {"eval",
               {{"m", c.eval.m},
                {"num_images", c.eval.num_images},
                {"saliency_draws", c.eval.saliency_draws},
                {"seed", c.eval.seed}}},
              {"out_dir", c.out_dir}};
}

ExperimentConfig ExperimentConfigFromJson(const Json& j) {
  Require(j.is_object(), ErrorCode::kInvalidArgument, "config must be a JSON object");
  if (j.contains("format_version")) {
    Require(j.at("format_version") == kFormatVersion, ErrorCode::kInvalidArgument,
            "unsupported config format_version");
  }
  ExperimentConfig c;
  try {
    if (j.contains("dataset")) c.dataset = DatasetSpecFromJson(j.at("dataset"));
    if (j.contains("dataset_dir")) c.dataset_dir = j.at("dataset_dir").get<std::string>();
    if (j.contains("teacher_net")) c.teacher_net = NetConfigFromJson(j.at("teacher_net"));
    if (j.contains("student_net")) c.student_net = NetConfigFromJson(j.at("student_net"));
    if (j.contains("train")) {
      c.train = TrainConfigFromJson(j.at("train"));
      // A checkpoint manifest: the embedded net config applies to both.
      if (j.contains("mode") && j.at("train").contains("net")) {
        c.teacher_net = c.student_net = c.train.net;
      }
    }
    if (j.contains("eval")) {
      const Json& e = j.at("eval");
      if (e.contains("m")) c.eval.m = e.at("m").get<int>();
      if (e.contains("num_images")) c.eval.num_images = e.at("num_images").get<int>();
      if (e.contains("saliency_draws")) c.eval.saliency_draws = e.at("saliency_draws").get<int>();
      if (e.contains("seed")) c.eval.seed = e.at("seed").get<std::uint64_t>();
    }
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("invalid config: ") + e.what());
  }
  return c;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label-assisted distillation for semantic segmentation", "lad"};
  app.require_subcommand(1);

  CommonFlags common;
  TrainFlags train;
  EvalFlags eval;
  SweepFlags sweep;

  CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  AddCommon(gen, common);

  CLI::App* tr = app.add_subcommand("train", "train a teacher, student or baseline");
  AddCommon(tr, common);
  tr->add_option("mode", train.mode, "teacher | student | baseline")
      ->required()
      ->check(CLI::IsMember({"teacher", "student", "baseline"}));
  tr->add_option("--dataset", train.dataset, "dataset directory");
  tr->add_option("--name", train.name, "checkpoint name (default: the mode)");
  tr->add_option("--teacher-checkpoint", train.teacher_checkpoint,
                 "teacher checkpoint for student training");
  tr->add_option("--alpha", train.alpha, "pixel-noise scale");
  tr->add_option("--lambda", train.lambda, "consistency weight");
  tr->add_option("--beta", train.beta, "distillation weight");
  tr->add_option("--temperature", train.temperature, "distillation temperature");
  tr->add_option("--lr", train.lr, "learning rate");
  tr->add_option("--iterations", train.iterations, "training iterations");
  tr->add_option("--batch-size", train.batch_size, "images per iteration");
  tr->add_option("--eval-every", train.eval_every, "validation cadence");
  tr->add_flag("--no-consistency", train.no_consistency,
               "single noised path, segmentation loss only");
  tr->add_flag("--no-class-wise", train.no_class_wise,
               "label channel = normalized class index + pixel noise");
  tr->add_flag("--clean-label", train.clean_label,
               "label channel = normalized class index, alpha = 0");
  tr->add_flag("--independent-copies", train.independent_copies,
               "dual path through two separately optimized copies");
  tr->add_flag("--one-directional", train.one_directional,
               "consistency term cwd(o1 -> o2) instead of the symmetric form");

  std::vector<CLI::App*> eval_cmds;
  for (const char* name : {"eval", "stability", "shortcut"}) {
    CLI::App* cmd = app.add_subcommand(name, std::string(name) == "eval"
                                                 ? "validation mIoU of a checkpoint"
                                             : std::string(name) == "stability"
                                                 ? "KL_mean output stability of a teacher"
                                                 : "label-channel saliency ratio of a teacher");
    AddCommon(cmd, common);
    cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint prefix or manifest")
        ->required();
    cmd->add_option("--dataset", eval.dataset, "dataset directory");
    eval_cmds.push_back(cmd);
  }
  eval_cmds[1]->add_option("-m", eval.m, "noise samplings per image")->capture_default_str();
  eval_cmds[1]->add_option("--num-images", eval.num_images, "validation images")
      ->capture_default_str();
  eval_cmds[2]->add_option("--num-images", eval.num_images, "validation images")
      ->capture_default_str();
  eval_cmds[2]->add_option("--draws", eval.draws, "noise draws per image")->capture_default_str();

  CLI::App* sw = app.add_subcommand("sweep-alpha", "alpha x class-wise ablation grid");
  AddCommon(sw, common);
  sw->add_option("--dataset", sweep.dataset, "dataset directory");
  sw->add_option("--alphas", sweep.alphas, "comma-separated alphas")->delimiter(',');
  sw->add_option("--iterations", sweep.iterations, "training iterations per run");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "lad: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return CmdGenData(common, out);
    if (tr->parsed()) return CmdTrain(common, train, out, err);
    if (eval_cmds[0]->parsed()) return CmdEval(common, eval, out);
    if (eval_cmds[1]->parsed()) return CmdStability(common, eval, out);
    if (eval_cmds[2]->parsed()) return CmdShortcut(common, eval, out);
    if (sw->parsed()) return CmdSweepAlpha(common, sweep, out, err);
  } catch (const Error& e) {
    err << "lad: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    err << "lad: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace lad

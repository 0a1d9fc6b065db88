#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <fmt/format.h>

#include "padx/dataset.hpp"
#include "padx/emaa.hpp"
#include "padx/errors.hpp"
#include "padx/eval.hpp"
#include "padx/ica.hpp"
#include "padx/image_io.hpp"
#include "padx/log.hpp"
#include "padx/poisson.hpp"

namespace padx::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string log_level = "warn";
};

struct StatsOptions {
  std::string annotations;
  double tail_threshold = dataset::kDefaultTailThreshold;
  std::string format = "text";
};

struct AugmentOptions {
  std::string images;
  std::string annotations;
  std::string out;
  emaa::AugmentConfig cfg;
  std::string format = "text";
};

struct BlendOptions {
  std::string target;
  std::string source;
  std::string mask;
  std::vector<int> offset;
  std::string out;
};

struct IcaOptions {
  int k = 4;
  int d = 4;
  int m = 0;  // 0: same as d
  int classes = 3;
  int proposals = 6;
  double eps = 1e-5;
  double max_error = 1e-5;
  int steps = 2000;
  std::string save_params;
};

struct EvalOptions {
  std::string pred;
  std::string gt;
  double iou = eval::kDefaultIouThreshold;
  std::string format = "text";
};

// Thrown for post-parse validation failures that CLI11 cannot express.
class UsageError : public InputError {
 public:
  using InputError::InputError;
};

void check_tail_threshold(double t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw UsageError(fmt::format("--tail-threshold must lie in (0, 1), got {}", t));
  }
}

std::string ap_text(const std::optional<double>& ap) {
  return ap ? fmt::format("{:.4f}", *ap) : std::string("n/a");
}

int cmd_stats(const StatsOptions& o) {
  check_tail_threshold(o.tail_threshold);
  const auto ds = dataset::load_dataset(o.annotations);
  const auto stats = dataset::class_histogram(ds);
  const auto split = dataset::split_head_tail(stats, o.tail_threshold);
  const std::set<dataset::Id> tail(split.tail.begin(), split.tail.end());
  const std::set<dataset::Id> head(split.head.begin(), split.head.end());
  auto role = [&](dataset::Id id) {
    return tail.count(id) ? "tail" : head.count(id) ? "head" : "empty";
  };

  if (o.format == "json") {
    json classes = json::array();
    for (const auto& c : stats.classes) {
      classes.push_back({{"id", c.category_id},
                         {"name", c.name},
                         {"count", c.count},
                         {"frequency", c.frequency},
                         {"split", role(c.category_id)}});
    }
    json out = {{"images", ds.images.size()},
                {"total", stats.total},
                {"tail_threshold", o.tail_threshold},
                {"classes", classes},
                {"head", split.head},
                {"tail", split.tail}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << fmt::format("{} images, {} instances, tail threshold {}\n",
                           ds.images.size(), stats.total, o.tail_threshold);
  std::cout << fmt::format("{:>6}  {:<20} {:>8} {:>10}  {}\n", "id", "name",
                           "count", "frequency", "split");
  for (const auto& c : stats.classes) {
    std::cout << fmt::format("{:>6}  {:<20} {:>8} {:>10.4f}  {}\n",
                             c.category_id, c.name, c.count, c.frequency,
                             role(c.category_id));
  }
  std::cout << fmt::format("tail classes: {}\n", split.tail.size());
  return kExitOk;
}

json report_json(const emaa::AugmentReport& report, const dataset::Dataset& ds,
                 const emaa::AugmentConfig& cfg) {
  json classes = json::array();
  for (const auto& [id, r] : report.per_class) {
    const auto* cat = ds.find_category(id);
    classes.push_back({{"category_id", id},
                       {"name", cat ? cat->name : ""},
                       {"seen", r.seen},
                       {"generated", r.generated},
                       {"skipped",
                        {{"infeasible", r.skipped_infeasible},
                         {"unreadable", r.skipped_unreadable},
                         {"no_host", r.skipped_no_host}}}});
  }
  return {{"seed", cfg.seed},
          {"copies_per_instance", cfg.copies_per_instance},
          {"tail_threshold", cfg.tail_threshold},
          {"lambda", cfg.lambda},
          {"min_patch", cfg.min_patch},
          {"host_sample_attempts", cfg.host_sample_attempts},
          {"generated", report.generated()},
          {"skipped", report.skipped()},
          {"classes", classes},
          {"warnings", report.warnings}};
}

int cmd_augment(const AugmentOptions& o, int jobs) {
  check_tail_threshold(o.cfg.tail_threshold);
  o.cfg.validate();
  if (jobs < 1) throw UsageError("--jobs must be >= 1");
  // Input failures are usage errors (exit 2); anything after is exit 1.
  const auto ds = dataset::load_dataset(o.annotations);
  const dataset::ImageStore store(fs::path(o.images));

  emaa::AugmentResult result;
  try {
    result = emaa::augment_dataset(ds, store, o.out, o.cfg, jobs);
  } catch (const IoError& e) {
    logger().error("{}", e.what());
    return kExitFailure;
  }
  const json report = report_json(result.report, result.dataset, o.cfg);
  try {
    fs::create_directories(o.out);
    dataset::write_dataset(result.dataset, fs::path(o.out) / "annotations.json");
    std::ofstream rep(fs::path(o.out) / "report.json", std::ios::trunc);
    rep << report.dump(2) << "\n";
    if (!rep) throw IoError("cannot write report.json", o.out);
  } catch (const std::exception& e) {
    logger().error("{}", e.what());
    return kExitFailure;
  }

  if (o.format == "json") {
    std::cout << report.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << fmt::format("{} generated, {} skipped\n",
                           result.report.generated(), result.report.skipped());
  for (const auto& [id, r] : result.report.per_class) {
    const auto* cat = result.dataset.find_category(id);
    std::cout << fmt::format(
        "  tail {:>4} {:<16} seen {:>4}  generated {:>4}  skipped {:>3} "
        "(infeasible {}, unreadable {}, no host {})\n",
        id, cat ? cat->name : "", r.seen, r.generated, r.skipped(),
        r.skipped_infeasible, r.skipped_unreadable, r.skipped_no_host);
  }
  for (const auto& w : result.report.warnings) {
    std::cout << "warning: " << w << "\n";
  }
  return kExitOk;
}

int cmd_blend(const BlendOptions& o) {
  if (o.offset.size() != 2) throw UsageError("--offset takes DX DY");
  const ImageBuffer target = read_image(o.target);
  const ImageBuffer source =
      convert_channels(read_image(o.source), target.channels());
  const Point offset{o.offset[0], o.offset[1]};

  poisson::BlendProblem problem;
  if (o.mask.empty()) {
    problem = poisson::make_patch_problem(target, source, offset);
  } else {
    const ImageBuffer mask_img = to_grayscale(read_image(o.mask));
    if (mask_img.width() != source.width() ||
        mask_img.height() != source.height()) {
      throw DimensionError("mask size differs from source size");
    }
    BinaryMask mask(mask_img.width(), mask_img.height());
    for (int y = 0; y < mask_img.height(); ++y) {
      for (int x = 0; x < mask_img.width(); ++x) {
        if (mask_img.at(x, y) != 0) mask.set(x, y);
      }
    }
    problem = {target, source, std::move(mask), offset};
  }
  const ImageBuffer out = poisson::blend(problem);
  try {
    write_png(o.out, out);
  } catch (const IoError& e) {
    logger().error("{}", e.what());
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_ica_gradcheck(const IcaOptions& o, std::uint64_t seed) {
  const ica::IcaDims dims{o.k, o.d, o.m ? o.m : o.d, o.classes};
  const auto c = ica::make_gradcheck_case(dims, o.proposals, seed, o.eps);
  const double err = ica::grad_check(c.params, c.proposals, o.eps);
  const bool ok = err <= o.max_error;
  std::cout << fmt::format(
      "gradcheck k={} d={} m={} C={} N={} seed={} eps={:g}: max rel err {:.3e} "
      "{} {:g} -> {}\n",
      dims.k, dims.d, dims.m, dims.c, o.proposals, seed, o.eps, err,
      ok ? "<=" : ">", o.max_error, ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitFailure;
}

int cmd_ica_demo(const IcaOptions& o, std::uint64_t seed) {
  ica::BenchmarkConfig cfg;
  cfg.seed = seed;
  cfg.steps = o.steps;
  cfg.k = o.k;
  const auto r = ica::synth_cooccurrence_benchmark(cfg);
  std::cout << fmt::format("co-occurrence benchmark seed={} k={} steps={}\n",
                           seed, cfg.k, cfg.steps);
  std::cout << fmt::format("  baseline accuracy {:.4f}\n", r.baseline_accuracy);
  std::cout << fmt::format("  ica accuracy      {:.4f}\n", r.ica_accuracy);
  std::cout << fmt::format("  gap               {:+.4f}\n",
                           r.ica_accuracy - r.baseline_accuracy);
  if (!o.save_params.empty()) {
    Rng rng = Rng::derive(seed, 1);
    ica::save_params(ica::IcaParams::init({cfg.k, 4, 4, 2}, rng), o.save_params);
  }
  return kExitOk;
}

int cmd_ica_ksweep(const IcaOptions& o, std::uint64_t seed) {
  std::cout << fmt::format("{:>4} {:>10} {:>10}\n", "k", "baseline", "ica");
  for (int k : {2, 4, 8, 16}) {
    ica::BenchmarkConfig cfg;
    cfg.seed = seed;
    cfg.steps = o.steps;
    cfg.k = k;
    const auto r = ica::synth_cooccurrence_benchmark(cfg);
    std::cout << fmt::format("{:>4} {:>10.4f} {:>10.4f}\n", k,
                             r.baseline_accuracy, r.ica_accuracy);
  }
  return kExitOk;
}

int cmd_eval(const EvalOptions& o) {
  if (!(o.iou > 0.0 && o.iou <= 1.0)) throw UsageError("--iou must lie in (0, 1]");
  const auto ds = dataset::load_dataset(o.gt);
  const auto dets = eval::load_detections(o.pred);
  const auto result = eval::evaluate(dets, ds, o.iou);
  if (o.format == "json") {
    json classes = json::array();
    for (const auto& c : result.classes) {
      classes.push_back({{"category_id", c.category_id},
                         {"name", c.name},
                         {"ap50", c.ap ? json(*c.ap) : json(nullptr)},
                         {"num_gt", c.num_gt},
                         {"tp", c.tp},
                         {"fp", c.fp},
                         {"fn", c.fn}});
    }
    std::cout << json{{"iou_threshold", o.iou},
                      {"mean_ap50", result.mean_ap},
                      {"classes", classes}}
                     .dump(2)
              << "\n";
    return kExitOk;
  }
  std::cout << fmt::format("{:>6}  {:<20} {:>6} {:>6} {:>6} {:>6} {:>8}\n", "id",
                           "name", "gt", "tp", "fp", "fn", "AP50");
  for (const auto& c : result.classes) {
    std::cout << fmt::format("{:>6}  {:<20} {:>6} {:>6} {:>6} {:>6} {:>8}\n",
                             c.category_id, c.name, c.num_gt, c.tp, c.fp, c.fn,
                             ap_text(c.ap));
  }
  std::cout << fmt::format("mean AP50 {:.4f}\n", result.mean_ap);
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"padx: material-aware augmentation, co-occurrence aggregation "
               "and AP50 evaluation for X-ray detection data"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "padx 0.1.0");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Seed for every randomized command");
  app.add_option("--jobs", global.jobs, "Worker threads for augmentation")
      ->check(CLI::PositiveNumber);
  app.add_option("--log-level", global.log_level,
                 "trace|debug|info|warn|error|off (PADX_LOG overrides)");

  const std::vector<std::string> formats{"text", "json"};

  StatsOptions stats;
  auto* stats_cmd = app.add_subcommand("stats", "Class histogram and head/tail split");
  stats_cmd->add_option("annotations", stats.annotations, "COCO-style annotations")
      ->required();
  stats_cmd->add_option("--tail-threshold", stats.tail_threshold,
                        "Tail iff count < threshold * max count");
  stats_cmd->add_option("--format", stats.format)->check(CLI::IsMember(formats));

  AugmentOptions aug;
  auto* aug_cmd = app.add_subcommand("augment", "Material-aware tail augmentation");
  aug_cmd->add_option("--images", aug.images, "Directory image file names resolve against")
      ->required();
  aug_cmd->add_option("--annotations", aug.annotations, "Input annotations")->required();
  aug_cmd->add_option("--out", aug.out, "Output directory")->required();
  aug_cmd->add_option("--copies", aug.cfg.copies_per_instance, "Copies per tail instance");
  aug_cmd->add_option("--lambda", aug.cfg.lambda, "Host complexity weight");
  aug_cmd->add_option("--min-patch", aug.cfg.min_patch, "Minimum pasted side in pixels");
  aug_cmd->add_option("--host-attempts", aug.cfg.host_sample_attempts,
                      "Host images tried per pairing");
  aug_cmd->add_option("--tail-threshold", aug.cfg.tail_threshold);
  aug_cmd->add_option("--format", aug.format)->check(CLI::IsMember(formats));

  BlendOptions blend;
  auto* blend_cmd = app.add_subcommand("blend", "Poisson-blend one patch into an image");
  blend_cmd->add_option("--target", blend.target)->required();
  blend_cmd->add_option("--source", blend.source)->required();
  blend_cmd->add_option("--mask", blend.mask,
                        "Gray PNG, nonzero = region (default: source minus its edge ring)");
  blend_cmd->add_option("--offset", blend.offset, "DX DY of the source in the target")
      ->expected(2)
      ->required();
  blend_cmd->add_option("--out", blend.out)->required();

  IcaOptions ica_opts;
  auto* ica_cmd = app.add_subcommand("ica", "Co-occurrence aggregator checks");
  ica_cmd->require_subcommand(1);
  ica_cmd->fallthrough();
  auto* gradcheck = ica_cmd->add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--k", ica_opts.k)->check(CLI::PositiveNumber);
  gradcheck->add_option("--d", ica_opts.d)->check(CLI::PositiveNumber);
  gradcheck->add_option("--m", ica_opts.m, "Fusion width (default d)")
      ->check(CLI::NonNegativeNumber);
  gradcheck->add_option("--classes", ica_opts.classes)->check(CLI::PositiveNumber);
  gradcheck->add_option("--proposals", ica_opts.proposals)->check(CLI::PositiveNumber);
  gradcheck->add_option("--eps", ica_opts.eps)->check(CLI::PositiveNumber);
  gradcheck->add_option("--max-error", ica_opts.max_error)->check(CLI::PositiveNumber);
  auto* demo = ica_cmd->add_subcommand("demo", "Synthetic co-occurrence benchmark");
  demo->add_option("--steps", ica_opts.steps)->check(CLI::PositiveNumber);
  demo->add_option("--k", ica_opts.k)->check(CLI::PositiveNumber);
  demo->add_option("--save-params", ica_opts.save_params,
                   "Write the initial ICA parameters (ICA1 format)");
  auto* ksweep = ica_cmd->add_subcommand("ksweep", "Benchmark for k in {2,4,8,16}");
  ksweep->add_option("--steps", ica_opts.steps)->check(CLI::PositiveNumber);

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Per-class AP50");
  eval_cmd->add_option("--pred", ev.pred, "COCO results JSON")->required();
  eval_cmd->add_option("--gt", ev.gt, "Ground-truth annotations")->required();
  eval_cmd->add_option("--iou", ev.iou);
  eval_cmd->add_option("--format", ev.format)->check(CLI::IsMember(formats));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const char* env_level = std::getenv("PADX_LOG");
    set_log_level(env_level && *env_level ? env_level : global.log_level);

    if (*stats_cmd) return cmd_stats(stats);
    if (*aug_cmd) {
      aug.cfg.seed = global.seed;
      return cmd_augment(aug, global.jobs);
    }
    if (*blend_cmd) return cmd_blend(blend);
    if (*gradcheck) return cmd_ica_gradcheck(ica_opts, global.seed);
    if (*demo) return cmd_ica_demo(ica_opts, global.seed);
    if (*ksweep) return cmd_ica_ksweep(ica_opts, global.seed);
    if (*eval_cmd) return cmd_eval(ev);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace padx::cli

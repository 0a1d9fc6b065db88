#include "padx/emaa.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "padx/errors.hpp"
#include "padx/image_io.hpp"
#include "padx/log.hpp"
#include "padx/poisson.hpp"

namespace padx::emaa {

using dataset::Dataset;
using dataset::Id;
using dataset::ImageRecord;
using dataset::Instance;

void AugmentConfig::validate() const {
  if (!(tail_threshold > 0.0 && tail_threshold < 1.0)) {
    throw InputError("tail_threshold must lie in (0, 1)");
  }
  if (copies_per_instance < 1) {
    throw InputError("copies_per_instance must be >= 1");
  }
  if (min_patch < 3) throw InputError("min_patch must be >= 3");
  if (host_sample_attempts < 1) {
    throw InputError("host_sample_attempts must be >= 1");
  }
  if (!(lambda >= 0.0)) throw InputError("lambda must be >= 0");
}

std::size_t AugmentReport::generated() const {
  std::size_t n = 0;
  for (const auto& [id, r] : per_class) n += r.generated;
  return n;
}

std::size_t AugmentReport::skipped() const {
  std::size_t n = 0;
  for (const auto& [id, r] : per_class) n += r.skipped();
  return n;
}

AugmentedSample augment_instance(const ImageBuffer& host_img,
                                 std::span<const Instance> host_objects,
                                 const ImageBuffer& patch,
                                 const AugmentConfig& cfg, Rng& rng) {
  if (host_objects.empty()) {
    throw InputError("augment_instance: no host objects");
  }
  const ImageBuffer source = convert_channels(patch, host_img.channels());
  std::vector<material::HostCandidate> candidates;
  candidates.reserve(host_objects.size());
  for (const auto& obj : host_objects) candidates.push_back({obj, &host_img});

  AugmentedSample out;
  out.host = material::select_host(candidates, source, cfg.lambda);
  const material::Placement placement = material::propose_placement(
      out.host.host.bbox, source.width(), source.height(), host_img.width(),
      host_img.height(), rng, cfg.min_patch);
  out.box = placement.box;

  ImageBuffer scaled =
      resize_bilinear(source, placement.box.w, placement.box.h);
  const auto problem = poisson::make_patch_problem(
      host_img, std::move(scaled), {placement.box.x, placement.box.y});
  out.composite = poisson::blend(problem);
  return out;
}

std::string composite_name(const std::string& host_file_name, Id instance_id,
                           int copy) {
  const std::string stem = std::filesystem::path(host_file_name).stem().string();
  return stem + "__aug_" + std::to_string(instance_id) + "_" +
         std::to_string(copy) + ".png";
}

namespace {

enum class Outcome { kGenerated, kInfeasible, kUnreadable, kNoHost };

struct Job {
  Instance instance;
  int copy = 0;
};

struct JobResult {
  Outcome outcome = Outcome::kInfeasible;
  ImageRecord image;  // id assigned at merge time
  BBox box;
};

std::optional<ImageBuffer> try_load(const dataset::ImageStore& store,
                                    const ImageRecord& rec) {
  try {
    ImageBuffer img = store.load(rec);
    if (img.width() != rec.width || img.height() != rec.height) {
      logger().warn("image {} is {}x{} on disk but {}x{} in annotations",
                    rec.file_name, img.width(), img.height(), rec.width,
                    rec.height);
      return std::nullopt;
    }
    return img;
  } catch (const IoError& e) {
    logger().warn("{}", e.what());
    return std::nullopt;
  }
}

class Augmenter {
 public:
  Augmenter(const Dataset& ds, const dataset::ImageStore& store,
            const std::filesystem::path& out_dir, const AugmentConfig& cfg,
            const std::set<Id>& head)
      : ds_(ds), store_(store), out_dir_(out_dir), cfg_(cfg) {
    for (const auto& ann : ds.annotations) {
      if (head.count(ann.category_id)) hosts_[ann.image_id].push_back(ann);
    }
    for (auto& [image_id, objects] : hosts_) {
      std::sort(objects.begin(), objects.end(),
                [](const Instance& a, const Instance& b) { return a.id < b.id; });
      host_images_.push_back(image_id);
    }
  }

  JobResult run(const Job& job) const {
    JobResult result;
    if (host_images_.empty()) {
      result.outcome = Outcome::kNoHost;
      return result;
    }
    Rng rng = Rng::derive(cfg_.seed, static_cast<std::uint64_t>(job.instance.id),
                          static_cast<std::uint64_t>(job.copy));
    const ImageRecord* src_rec = ds_.find_image(job.instance.image_id);
    auto src = try_load(store_, *src_rec);
    if (!src) {
      result.outcome = Outcome::kUnreadable;
      return result;
    }
    const ImageBuffer patch = crop(*src, job.instance.bbox);

    Outcome last_failure = Outcome::kInfeasible;
    for (int attempt = 0; attempt < cfg_.host_sample_attempts; ++attempt) {
      const Id host_id = host_images_[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(host_images_.size()) - 1))];
      const ImageRecord* host_rec = ds_.find_image(host_id);
      auto host_img = try_load(store_, *host_rec);
      if (!host_img) {
        last_failure = Outcome::kUnreadable;
        continue;
      }
      try {
        AugmentedSample sample = augment_instance(
            *host_img, hosts_.at(host_id), patch, cfg_, rng);
        result.outcome = Outcome::kGenerated;
        result.box = sample.box;
        result.image.file_name =
            composite_name(host_rec->file_name, job.instance.id, job.copy);
        result.image.width = host_img->width();
        result.image.height = host_img->height();
        write_png(out_dir_ / result.image.file_name, sample.composite);
        return result;
      } catch (const InfeasibleError& e) {
        logger().debug("instance {} copy {} on image {}: {}", job.instance.id,
                       job.copy, host_id, e.what());
        last_failure = Outcome::kInfeasible;
      }
    }
    result.outcome = last_failure;
    return result;
  }

 private:
  const Dataset& ds_;
  const dataset::ImageStore& store_;
  std::filesystem::path out_dir_;
  AugmentConfig cfg_;
  std::map<Id, std::vector<Instance>> hosts_;
  std::vector<Id> host_images_;
};

std::vector<JobResult> run_jobs(const Augmenter& aug,
                                const std::vector<Job>& jobs, int workers) {
  std::vector<JobResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        results[i] = aug.run(jobs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(jobs.size());
        return;
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace

AugmentResult augment_dataset(const Dataset& ds,
                              const dataset::ImageStore& store,
                              const std::filesystem::path& out_dir,
                              const AugmentConfig& cfg, int jobs) {
  cfg.validate();
  dataset::validate(ds);

  AugmentResult result{ds, {}};
  result.dataset.canonicalize();
  const auto stats = dataset::class_histogram(ds);
  const auto split = dataset::split_head_tail(stats, cfg.tail_threshold);
  if (split.tail.empty()) {
    result.report.warnings.push_back(
        "no tail classes at threshold " + std::to_string(cfg.tail_threshold) +
        "; dataset unchanged");
    logger().warn("{}", result.report.warnings.back());
    return result;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create output directory '" + out_dir.string() + "'",
                  out_dir.string());
  }

  const std::set<Id> head(split.head.begin(), split.head.end());
  std::vector<Job> job_list;
  for (Id tail : split.tail) {
    auto& cls = result.report.per_class[tail];
    for (const auto& ann : result.dataset.annotations) {
      if (ann.category_id != tail) continue;
      ++cls.seen;
      for (int copy = 0; copy < cfg.copies_per_instance; ++copy) {
        job_list.push_back({ann, copy});
      }
    }
  }
  if (head.empty()) {
    result.report.warnings.push_back("no head-class host objects available");
  }

  const Augmenter aug(result.dataset, store, out_dir, cfg, head);
  const std::vector<JobResult> outcomes = run_jobs(aug, job_list, jobs);

  Id next_image = ds.max_image_id();
  Id next_ann = ds.max_annotation_id();
  for (std::size_t i = 0; i < job_list.size(); ++i) {
    const Job& job = job_list[i];
    const JobResult& r = outcomes[i];
    auto& cls = result.report.per_class[job.instance.category_id];
    switch (r.outcome) {
      case Outcome::kGenerated: {
        ++cls.generated;
        ImageRecord rec = r.image;
        rec.id = ++next_image;
        Instance inst;
        inst.id = ++next_ann;
        inst.image_id = rec.id;
        inst.category_id = job.instance.category_id;
        inst.bbox = r.box;
        inst.synthetic = true;
        result.dataset.images.push_back(std::move(rec));
        result.dataset.annotations.push_back(inst);
        break;
      }
      case Outcome::kInfeasible:
        ++cls.skipped_infeasible;
        break;
      case Outcome::kUnreadable:
        ++cls.skipped_unreadable;
        break;
      case Outcome::kNoHost:
        ++cls.skipped_no_host;
        break;
    }
  }
  result.dataset.canonicalize();
  dataset::validate(result.dataset);
  return result;
}

}  // namespace padx::emaa

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "padx/dataset.hpp"
#include "padx/material.hpp"
#include "padx/rng.hpp"

namespace padx::emaa {

struct AugmentConfig {
  double tail_threshold = dataset::kDefaultTailThreshold;
  int copies_per_instance = 1;
  double lambda = material::kDefaultComplexityWeight;
  std::uint64_t seed = 0;
  int min_patch = material::kDefaultMinPatch;
  int host_sample_attempts = 16;

  // Throws InputError naming the offending field.
  void validate() const;
};

struct ClassReport {
  std::size_t seen = 0;
  std::size_t generated = 0;
  std::size_t skipped_infeasible = 0;
  std::size_t skipped_unreadable = 0;
  std::size_t skipped_no_host = 0;

  std::size_t skipped() const {
    return skipped_infeasible + skipped_unreadable + skipped_no_host;
  }
};

struct AugmentReport {
  std::map<dataset::Id, ClassReport> per_class;  // keyed by tail category
  std::vector<std::string> warnings;

  std::size_t generated() const;
  std::size_t skipped() const;
};

// Composite image plus the box it was pasted into.
struct AugmentedSample {
  ImageBuffer composite;
  BBox box;
  material::HostSelection host;
};

// One EMAA step: choose the most contrasting head object in host_img, place
// the (possibly downscaled) patch over it and Poisson-fuse it. Throws
// InfeasibleError when no placement satisfies the minimum patch size.
AugmentedSample augment_instance(const ImageBuffer& host_img,
                                 std::span<const dataset::Instance> host_objects,
                                 const ImageBuffer& patch,
                                 const AugmentConfig& cfg, Rng& rng);

struct AugmentResult {
  dataset::Dataset dataset;
  AugmentReport report;
};

// Output file name for a composite: <host stem>__aug_<instance>_<copy>.png
std::string composite_name(const std::string& host_file_name,
                           dataset::Id instance_id, int copy);

// Runs EMAA over every tail instance. Composites are written into out_dir;
// their image records use the bare file name, so the result resolves through
// ImageStore({out_dir, <original roots>...}). `jobs` bounds the worker count
// and never affects the output.
AugmentResult augment_dataset(const dataset::Dataset& ds,
                              const dataset::ImageStore& store,
                              const std::filesystem::path& out_dir,
                              const AugmentConfig& cfg, int jobs = 1);

}  // namespace padx::emaa

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "padx/core.hpp"

namespace padx::dataset {

using Id = std::int64_t;

struct ImageRecord {
  Id id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Instance {
  Id id = 0;
  Id image_id = 0;
  Id category_id = 0;
  BBox bbox;
  bool synthetic = false;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Category {
  Id id = 0;
  std::string name;

  friend bool operator==(const Category&, const Category&) = default;
};

// COCO-style detection dataset. Use validate() after building one by hand;
// load_dataset() always validates.
struct Dataset {
  std::vector<ImageRecord> images;
  std::vector<Instance> annotations;
  std::vector<Category> categories;

  const ImageRecord* find_image(Id id) const;
  const Category* find_category(Id id) const;
  Id max_image_id() const;
  Id max_annotation_id() const;

  // Sorts images, annotations and categories by id.
  void canonicalize();

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Throws IntegrityError on duplicate or dangling ids, BoundsError on a bbox
// that leaves its image.
void validate(const Dataset& ds);

Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::string& json_text);

// Canonical (id-sorted, 2-space indented) JSON; repeated writes of equal
// datasets are byte-identical.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& ds);

struct ClassCount {
  Id category_id = 0;
  std::string name;
  std::size_t count = 0;
  double frequency = 0.0;
};

struct ClassStats {
  std::vector<ClassCount> classes;  // sorted by category id
  std::size_t total = 0;

  std::size_t count_of(Id category_id) const;
};

ClassStats class_histogram(const Dataset& ds);

struct HeadTailSplit {
  std::vector<Id> head;
  std::vector<Id> tail;
};

inline constexpr double kDefaultTailThreshold = 0.1;

// Tail iff 0 < count < threshold * max count. Zero-count categories are in
// neither set.
HeadTailSplit split_head_tail(const ClassStats& stats,
                              double threshold = kDefaultTailThreshold);

// Resolves image file names against an ordered list of root directories.
class ImageStore {
 public:
  explicit ImageStore(std::filesystem::path root)
      : roots_{std::move(root)} {}
  explicit ImageStore(std::vector<std::filesystem::path> roots)
      : roots_(std::move(roots)) {}

  // First existing candidate, or the path under the first root if none exist.
  std::filesystem::path resolve(const ImageRecord& rec) const;
  ImageBuffer load(const ImageRecord& rec) const;

 private:
  std::vector<std::filesystem::path> roots_;
};

struct InstancePatch {
  ImageBuffer patch;
  Instance source;
};

std::vector<InstancePatch> extract_instances(const Dataset& ds, Id category_id,
                                             const ImageStore& store);

}  // namespace padx::dataset

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace simcurate {

// Axis-aligned box in pixel coordinates, [x0, x1) x [y0, y1).
struct PixelBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

// YOLO-style box: center and size as fractions of the image size.
struct BoundingBox {
  int class_id = 0;
  double cx = 0, cy = 0, w = 0, h = 0;

  PixelBox to_pixels(int image_width, int image_height) const;
  static BoundingBox from_pixels(int class_id, const PixelBox& box, int image_width,
                                 int image_height);
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class Provenance { rendered, genai_context, genai_random };
enum class DatasetRole { train, val, ref, test };

std::string_view to_string(Provenance p);
std::string_view to_string(DatasetRole r);
Provenance parse_provenance(std::string_view s);
DatasetRole parse_role(std::string_view s);

struct ImageRecord {
  std::string id;
  std::filesystem::path image_path;
  std::vector<BoundingBox> boxes;
  std::optional<std::filesystem::path> mask_path;
  std::optional<std::filesystem::path> depth_path;
  Provenance provenance = Provenance::rendered;
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Dataset {
  std::string name;
  DatasetRole role = DatasetRole::train;
  std::vector<ImageRecord> records;  // sorted by id
  // Depth PNGs store depth / depth_scale as 16-bit integers.
  double depth_scale = 1.0;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
  const ImageRecord* find(std::string_view id) const;
  void sort_by_id();
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct LoadOptions {
  unsigned jobs = 1;
};

enum class WriteMode {
  copy,       // copy image/mask/depth files under out_dir
  reference,  // manifest points at the original files
};

// Parses a YOLO label file. Out-of-range boxes are clamped into the unit square
// with a warning; malformed lines raise FormatError carrying the line number.
std::vector<BoundingBox> read_yolo_labels(const std::filesystem::path& path);
void write_yolo_labels(const std::filesystem::path& path, const std::vector<BoundingBox>& boxes);

// Loads a JSON manifest. Relative paths resolve against the manifest directory.
// Records come back sorted by id with image dimensions filled in and mask/depth
// dimensions checked against the image.
Dataset load_dataset(const std::filesystem::path& manifest_path, const LoadOptions& options = {});

// Writes labels, the manifest, and (in copy mode) the image artifacts under
// out_dir. Returns the manifest path.
std::filesystem::path write_dataset(const Dataset& dataset, const std::filesystem::path& out_dir,
                                    WriteMode mode = WriteMode::copy);

// Seeded shuffle, then |train| = round(train_fraction * n). Both halves are id-sorted.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, const SplitSpec& spec);

// Builds a dataset from a render export laid out as root/images/*.{png,jpg,jpeg}
// with optional root/labels/<stem>.txt, root/masks/<stem>.png and
// root/depth/<stem>.png companions.
Dataset ingest_directory(const std::filesystem::path& root, std::string name, DatasetRole role,
                         double depth_scale = 1.0, const LoadOptions& options = {});

// Zero-pads purely numeric render frame ids (e.g. "17" -> "000017").
std::string normalize_record_id(std::string_view stem, std::size_t width = 6);

}  // namespace simcurate

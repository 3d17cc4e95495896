#include "simcurate/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "simcurate/errors.hpp"
#include "simcurate/image_io.hpp"
#include "simcurate/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace simcurate {

PixelBox BoundingBox::to_pixels(int image_width, int image_height) const {
  const double W = image_width, H = image_height;
  return {(cx - w / 2) * W, (cy - h / 2) * H, (cx + w / 2) * W, (cy + h / 2) * H};
}

BoundingBox BoundingBox::from_pixels(int class_id, const PixelBox& box, int image_width,
                                     int image_height) {
  const double W = image_width, H = image_height;
  return {class_id, (box.x0 + box.x1) / 2 / W, (box.y0 + box.y1) / 2 / H, box.width() / W,
          box.height() / H};
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::rendered: return "rendered";
    case Provenance::genai_context: return "genai_context";
    case Provenance::genai_random: return "genai_random";
  }
  return "rendered";
}

std::string_view to_string(DatasetRole r) {
  switch (r) {
    case DatasetRole::train: return "train";
    case DatasetRole::val: return "val";
    case DatasetRole::ref: return "ref";
    case DatasetRole::test: return "test";
  }
  return "train";
}

Provenance parse_provenance(std::string_view s) {
  if (s == "rendered") return Provenance::rendered;
  if (s == "genai_context") return Provenance::genai_context;
  if (s == "genai_random") return Provenance::genai_random;
  throw ContractError("unknown provenance '" + std::string(s) + "'");
}

DatasetRole parse_role(std::string_view s) {
  if (s == "train") return DatasetRole::train;
  if (s == "val") return DatasetRole::val;
  if (s == "ref") return DatasetRole::ref;
  if (s == "test") return DatasetRole::test;
  throw ContractError("unknown dataset role '" + std::string(s) + "'");
}

const ImageRecord* Dataset::find(std::string_view id) const {
  auto it = std::lower_bound(records.begin(), records.end(), id,
                             [](const ImageRecord& r, std::string_view key) { return r.id < key; });
  if (it != records.end() && it->id == id) return &*it;
  return nullptr;
}

void Dataset::sort_by_id() {
  std::sort(records.begin(), records.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
}

namespace {

bool parse_double(std::string_view tok, double& out) {
  // std::from_chars for double is available in libstdc++ 11.
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_int(std::string_view tok, int& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string generic(const fs::path& p) { return p.generic_string(); }

fs::path resolve(const fs::path& base_dir, const std::string& rel) {
  fs::path p(rel);
  if (p.is_relative()) p = base_dir / p;
  return p.lexically_normal();
}

std::string relative_to(const fs::path& target, const fs::path& base) {
  const fs::path rel = fs::relative(target, base);
  return generic(rel.empty() ? target : rel);
}

void check_same_size(const ImageRecord& rec, const fs::path& path, const char* what) {
  const cv::Mat m = read_image(path, ReadMode::unchanged);
  if (m.cols != rec.width || m.rows != rec.height) {
    std::ostringstream msg;
    msg << what << " is " << m.cols << "x" << m.rows << " but image is " << rec.width << "x"
        << rec.height;
    throw RecordError(rec.id, msg.str(), path);
  }
}

void require_png(const ImageRecord& rec, const fs::path& path, const char* what) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext != ".png") throw RecordError(rec.id, std::string(what) + " must be a PNG file", path);
}

// Loads image dimensions and validates companions for one record.
void finish_record(ImageRecord& rec, const std::optional<fs::path>& labels) {
  if (!fs::is_regular_file(rec.image_path))
    throw RecordError(rec.id, "missing image file", rec.image_path);
  const cv::Mat img = read_image(rec.image_path, ReadMode::unchanged);
  rec.width = img.cols;
  rec.height = img.rows;
  if (labels) {
    if (!fs::is_regular_file(*labels)) throw RecordError(rec.id, "missing label file", *labels);
    rec.boxes = read_yolo_labels(*labels);
  }
  if (rec.mask_path) {
    if (!fs::is_regular_file(*rec.mask_path))
      throw RecordError(rec.id, "missing mask file", *rec.mask_path);
    require_png(rec, *rec.mask_path, "mask");
    check_same_size(rec, *rec.mask_path, "mask");
  }
  if (rec.depth_path) {
    if (!fs::is_regular_file(*rec.depth_path))
      throw RecordError(rec.id, "missing depth file", *rec.depth_path);
    require_png(rec, *rec.depth_path, "depth map");
    check_same_size(rec, *rec.depth_path, "depth map");
  }
}

void check_unique_ids(const Dataset& d, const fs::path& origin) {
  for (std::size_t i = 1; i < d.records.size(); ++i) {
    if (d.records[i].id == d.records[i - 1].id)
      throw FormatError("duplicate record id '" + d.records[i].id + "'", origin, 0);
  }
}

}  // namespace

std::vector<BoundingBox> read_yolo_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file", path);
  std::vector<BoundingBox> boxes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 5) throw FormatError("expected 'class cx cy w h'", path, lineno);
    BoundingBox b;
    if (!parse_int(toks[0], b.class_id) || b.class_id < 0)
      throw FormatError("invalid class id '" + std::string(toks[0]) + "'", path, lineno);
    if (!parse_double(toks[1], b.cx) || !parse_double(toks[2], b.cy) ||
        !parse_double(toks[3], b.w) || !parse_double(toks[4], b.h))
      throw FormatError("invalid box coordinate", path, lineno);
    if (b.w <= 0 || b.h <= 0) throw FormatError("box width/height must be positive", path, lineno);

    const double x0 = std::clamp(b.cx - b.w / 2, 0.0, 1.0);
    const double x1 = std::clamp(b.cx + b.w / 2, 0.0, 1.0);
    const double y0 = std::clamp(b.cy - b.h / 2, 0.0, 1.0);
    const double y1 = std::clamp(b.cy + b.h / 2, 0.0, 1.0);
    if (x1 <= x0 || y1 <= y0) throw FormatError("box lies outside the image", path, lineno);
    if (x0 != b.cx - b.w / 2 || x1 != b.cx + b.w / 2 || y0 != b.cy - b.h / 2 ||
        y1 != b.cy + b.h / 2) {
      // Six-decimal labels on the image edge overshoot by rounding alone.
      constexpr double kRounding = 1e-6;
      if (b.cx - b.w / 2 < -kRounding || b.cx + b.w / 2 > 1 + kRounding || b.cy - b.h / 2 < -kRounding ||
          b.cy + b.h / 2 > 1 + kRounding)
        spdlog::warn("{}:{}: box exceeds image bounds, clamped", path.string(), lineno);
      b.cx = (x0 + x1) / 2;
      b.cy = (y0 + y1) / 2;
      b.w = x1 - x0;
      b.h = y1 - y0;
    }
    boxes.push_back(b);
  }
  return boxes;
}

void write_yolo_labels(const fs::path& path, const std::vector<BoundingBox>& boxes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write label file", path);
  char buf[160];
  for (const auto& b : boxes) {
    std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f\n", b.class_id, b.cx, b.cy, b.w, b.h);
    out << buf;
  }
  if (!out) throw IoError("write failed", path);
}

Dataset load_dataset(const fs::path& manifest_path, const LoadOptions& options) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest", manifest_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid manifest JSON: ") + e.what(), manifest_path, 0);
  }
  const fs::path base = manifest_path.parent_path();

  Dataset d;
  std::vector<std::optional<fs::path>> labels;
  try {
    d.name = doc.value("name", std::string{});
    d.role = parse_role(doc.value("role", std::string{"train"}));
    d.depth_scale = doc.value("depth_scale", 1.0);
    if (!(d.depth_scale > 0)) throw FormatError("depth_scale must be positive", manifest_path, 0);
    for (const auto& jr : doc.at("records")) {
      ImageRecord r;
      r.id = jr.at("id").get<std::string>();
      r.image_path = resolve(base, jr.at("image").get<std::string>());
      if (jr.contains("mask") && !jr["mask"].is_null())
        r.mask_path = resolve(base, jr["mask"].get<std::string>());
      if (jr.contains("depth") && !jr["depth"].is_null())
        r.depth_path = resolve(base, jr["depth"].get<std::string>());
      if (jr.contains("provenance")) r.provenance = parse_provenance(jr["provenance"].get<std::string>());
      // "pose" / "normals" entries are tolerated and ignored.
      std::optional<fs::path> lp;
      if (jr.contains("labels") && !jr["labels"].is_null())
        lp = resolve(base, jr["labels"].get<std::string>());
      d.records.push_back(std::move(r));
      labels.push_back(std::move(lp));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what(), manifest_path, 0);
  } catch (const ContractError& e) {
    throw FormatError(e.what(), manifest_path, 0);
  }

  parallel_for(d.records.size(), options.jobs,
               [&](std::size_t i) { finish_record(d.records[i], labels[i]); });
  d.sort_by_id();
  check_unique_ids(d, manifest_path);
  return d;
}

fs::path write_dataset(const Dataset& d, const fs::path& out_dir, WriteMode mode) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory", out_dir);
  const fs::path abs_out = fs::absolute(out_dir).lexically_normal();

  auto place = [&](const fs::path& src, const char* sub, const std::string& stem) -> std::string {
    if (mode == WriteMode::reference) return relative_to(fs::absolute(src), abs_out);
    const fs::path rel = fs::path(sub) / (stem + src.extension().string());
    const fs::path dst = abs_out / rel;
    fs::create_directories(dst.parent_path());
    if (fs::absolute(src).lexically_normal() != dst) {
      fs::copy_file(src, dst, fs::copy_options::overwrite_existing, ec);
      if (ec) throw IoError("cannot copy " + generic(src), dst);
    }
    return generic(rel);
  };

  Dataset sorted = d;
  sorted.sort_by_id();
  json records = json::array();
  for (const auto& r : sorted.records) {
    json jr;
    jr["id"] = r.id;
    jr["image"] = place(r.image_path, "images", r.id);
    const fs::path label_rel = fs::path("labels") / (r.id + ".txt");
    write_yolo_labels(abs_out / label_rel, r.boxes);
    jr["labels"] = generic(label_rel);
    jr["mask"] = r.mask_path ? json(place(*r.mask_path, "masks", r.id)) : json(nullptr);
    jr["depth"] = r.depth_path ? json(place(*r.depth_path, "depth", r.id)) : json(nullptr);
    jr["provenance"] = std::string(to_string(r.provenance));
    records.push_back(std::move(jr));
  }
  json doc;
  doc["name"] = d.name;
  doc["role"] = std::string(to_string(d.role));
  doc["depth_scale"] = d.depth_scale;
  doc["records"] = std::move(records);

  const fs::path manifest = abs_out / "manifest.json";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest", manifest);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed", manifest);
  return manifest;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, const SplitSpec& spec) {
  if (d.empty()) throw ContractError("cannot split an empty dataset");
  if (!(spec.train_fraction > 0 && spec.train_fraction < 1))
    throw ContractError("train_fraction must lie strictly between 0 and 1");

  const std::size_t n = d.size();
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  Dataset train{d.name + "_train", DatasetRole::train, {}, d.depth_scale};
  Dataset val{d.name + "_val", DatasetRole::val, {}, d.depth_scale};
  for (std::size_t k = 0; k < n; ++k)
    (k < n_train ? train : val).records.push_back(d.records[order[k]]);
  train.sort_by_id();
  val.sort_by_id();
  return {std::move(train), std::move(val)};
}

std::string normalize_record_id(std::string_view stem, std::size_t width) {
  const bool numeric = !stem.empty() && std::all_of(stem.begin(), stem.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
  if (!numeric || stem.size() >= width) return std::string(stem);
  return std::string(width - stem.size(), '0') + std::string(stem);
}

Dataset ingest_directory(const fs::path& root, std::string name, DatasetRole role,
                         double depth_scale, const LoadOptions& options) {
  const fs::path images = root / "images";
  if (!fs::is_directory(images)) throw IoError("missing images directory", images);

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(images)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  Dataset d{std::move(name), role, {}, depth_scale};
  std::vector<std::optional<fs::path>> labels;
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    ImageRecord r;
    r.id = normalize_record_id(stem);
    r.image_path = fs::absolute(f).lexically_normal();
    const fs::path mask = root / "masks" / (stem + ".png");
    const fs::path depth = root / "depth" / (stem + ".png");
    const fs::path label = root / "labels" / (stem + ".txt");
    if (fs::is_regular_file(mask)) r.mask_path = fs::absolute(mask).lexically_normal();
    if (fs::is_regular_file(depth)) r.depth_path = fs::absolute(depth).lexically_normal();
    labels.push_back(fs::is_regular_file(label) ? std::optional(label) : std::nullopt);
    d.records.push_back(std::move(r));
  }
  parallel_for(d.records.size(), options.jobs,
               [&](std::size_t i) { finish_record(d.records[i], labels[i]); });
  d.sort_by_id();
  check_unique_ids(d, root);
  return d;
}

}  // namespace simcurate

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tolnet/tensor.hpp"

namespace tolnet {

// One lane-annotation record: x positions per lane sampled at shared y
// coordinates; x = -2 marks an absent point (the public format's convention).
struct LaneRecord {
  std::vector<double> h_samples;
  std::vector<std::vector<double>> lanes;
  std::string raw_file;
};

// Parses one JSON line with fields `lanes`, `h_samples`, `raw_file`.
LaneRecord parse_lane_record(const std::string& json_line);

// One training/evaluation sample. Pixels are kept at file precision (32-bit)
// and widened to 64-bit when batches are assembled.
struct Sample {
  std::string id;
  double label = 0.0;  // ego-lane center x, original image pixel coordinates
  bool duplicated = false;
  Shape shape;  // [128, 320, 1]
  std::vector<float> pixels;

  Tensor input() const;
};

using Dataset = std::vector<Sample>;

// Ego-lane center at the fixed pixel height: orders lanes left-to-right by
// their x at that height (linear interpolation between bracketing
// h_samples), finds the adjacent pair straddling the image center and
// returns the pair's average x. nullopt when no such pair exists or the
// height is outside the sampled range — those records are skipped.
std::optional<double> generate_label(const LaneRecord& rec, double height = 500.0,
                                     double image_width = 1280.0);

// [720, 1280, c] (c = 1 or 3, values 0..255) -> [128, 320, 1] in [-1, 1]:
// keep rows 208..719, grayscale by channel average, 4x4 box downsample,
// then t(v) = 2v/255 - 1 per pixel (t(0) = -1 and t(255) = 1 exactly).
Tensor preprocess(const Tensor& image);

// Each sample whose |label - center_x| >= threshold appears twice, the copy
// flagged duplicated. Order preserved, copies follow their originals.
Dataset duplicate_rare(const Dataset& in, double center_x = 640.0, double threshold = 100.0);

// Deterministic parameter set for one rendered road image. Lines are dashed
// and carry a sinusoidal lateral wiggle that is zero at the label row, so the
// label arithmetic stays exact while the row-500 position must be inferred
// from the global lane shape.
struct SyntheticParams {
  double line1_col = 80.0;   // resized-coordinate columns of the two lane
  double line2_col = 240.0;  // lines at the label row
  double slope1 = 0.0, slope2 = 0.0;  // columns per row
  double bright1 = 230.0, bright2 = 230.0;
  double thickness = 2.0;
  double background = 30.0;
  double noise_sigma = 0.0;
  double wiggle_amp = 0.0, wiggle_period = 60.0, wiggle_period2 = 60.0;
  double dash_period = 0.0, dash_duty = 1.0, dash_phase1 = 0.0, dash_phase2 = 0.0;
  uint64_t noise_key = 0;
};

// Renders a 128x320 grayscale image with two bright near-vertical lines.
// label = 4 * midpoint of the two line columns at the label row (original
// pixel height 500 -> row 73 after crop and 1/4 resize).
Sample synthetic_sample(const SyntheticParams& params, std::string id);

Dataset synthetic_dataset(int64_t n, uint64_t seed);

// Batch assembly; throws ContractError on an empty index list.
Tensor make_batch_inputs(const Dataset& ds, const std::vector<int64_t>& idx);
Tensor make_batch_labels(const Dataset& ds, const std::vector<int64_t>& idx);

// Dataset directory: index.jsonl (id, label, duplicated, file) plus one
// .tsr tensor file per sample (magic "TSRF", u32 rank, u64 dims,
// little-endian float32 data).
void save_dataset(const std::string& dir, const Dataset& ds);
Dataset load_dataset(const std::string& dir);

void write_tensor_f32(const std::string& path, const Shape& shape,
                      const std::vector<float>& data);
void read_tensor_f32(const std::string& path, Shape& shape, std::vector<float>& data);

// Image readers return [h, w, c] tensors with values 0..255. Supported:
// binary PGM (P5) and uncompressed BMP (8-bit paletted or 24-bit).
Tensor read_image(const std::string& path);
void write_pgm(const std::string& path, const Tensor& image);  // [h,w,1], 0..255

// 64-bit FNV-1a over a file's bytes, hex string; recorded as dataset
// provenance in trained models.
std::string file_hash_hex(const std::string& path);

}  // namespace tolnet

#include "tolnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tolnet/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tolnet {

namespace {
constexpr int64_t kOutH = 128, kOutW = 320;
constexpr int64_t kCropTop = 208;
constexpr int64_t kLabelRow = 73;  // original y=500 -> (500-208)/4
constexpr double kResize = 4.0;

static_assert(sizeof(float) == 4 && sizeof(double) == 8);
}  // namespace

LaneRecord parse_lane_record(const std::string& json_line) {
  json j;
  try {
    j = json::parse(json_line);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad label record: ") + e.what());
  }
  if (!j.contains("lanes") || !j.contains("h_samples") || !j.contains("raw_file"))
    throw DataError("label record missing one of lanes/h_samples/raw_file");
  LaneRecord rec;
  rec.raw_file = j["raw_file"].get<std::string>();
  rec.h_samples = j["h_samples"].get<std::vector<double>>();
  rec.lanes = j["lanes"].get<std::vector<std::vector<double>>>();
  for (const auto& lane : rec.lanes)
    if (lane.size() != rec.h_samples.size())
      throw DataError("lane list length does not match h_samples in record for '" +
                      rec.raw_file + "'");
  return rec;
}

Tensor Sample::input() const {
  Tensor t(shape);
  double* out = t.mut();
  for (size_t i = 0; i < pixels.size(); ++i) out[i] = static_cast<double>(pixels[i]);
  return t;
}

namespace {

// x position of one lane at the requested height; linear interpolation
// between the bracketing valid points, nullopt when the lane has no valid
// point on either side. x < 0 entries are absent markers.
std::optional<double> lane_x_at(const std::vector<double>& h_samples,
                                const std::vector<double>& xs, double height) {
  double below_h = 0, below_x = 0, above_h = 0, above_x = 0;
  bool has_below = false, has_above = false;
  for (size_t i = 0; i < h_samples.size(); ++i) {
    if (xs[i] < 0) continue;
    double h = h_samples[i];
    if (h == height) return xs[i];
    if (h < height && (!has_below || h > below_h)) {
      below_h = h;
      below_x = xs[i];
      has_below = true;
    }
    if (h > height && (!has_above || h < above_h)) {
      above_h = h;
      above_x = xs[i];
      has_above = true;
    }
  }
  if (!has_below || !has_above) return std::nullopt;
  double t = (height - below_h) / (above_h - below_h);
  return below_x + t * (above_x - below_x);
}

}  // namespace

std::optional<double> generate_label(const LaneRecord& rec, double height, double image_width) {
  if (rec.h_samples.empty()) return std::nullopt;
  const auto [mn, mx] = std::minmax_element(rec.h_samples.begin(), rec.h_samples.end());
  if (height < *mn || height > *mx) return std::nullopt;

  std::vector<double> lane_xs;
  for (const auto& lane : rec.lanes)
    if (auto x = lane_x_at(rec.h_samples, lane, height)) lane_xs.push_back(*x);
  std::sort(lane_xs.begin(), lane_xs.end());

  const double center = image_width / 2.0;
  for (size_t i = 0; i + 1 < lane_xs.size(); ++i)
    if (lane_xs[i] < center && lane_xs[i + 1] > center)
      return (lane_xs[i] + lane_xs[i + 1]) / 2.0;
  return std::nullopt;
}

Tensor preprocess(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 720 || image.dim(1) != 1280 ||
      (image.dim(2) != 1 && image.dim(2) != 3))
    throw ShapeError("preprocess: expected [720, 1280, 1|3], got " + shape_str(image.shape()));
  const int64_t c = image.dim(2);
  const double* src = image.data();
  Tensor out({kOutH, kOutW, 1});
  double* dst = out.mut();
  for (int64_t oy = 0; oy < kOutH; ++oy) {
    for (int64_t ox = 0; ox < kOutW; ++ox) {
      double acc = 0.0;
      for (int64_t dy = 0; dy < 4; ++dy) {
        const int64_t y = kCropTop + oy * 4 + dy;
        for (int64_t dx = 0; dx < 4; ++dx) {
          const int64_t x = ox * 4 + dx;
          const double* px = src + (y * 1280 + x) * c;
          double gray = 0.0;
          for (int64_t ch = 0; ch < c; ++ch) gray += px[ch];
          acc += gray / static_cast<double>(c);
        }
      }
      const double v = acc / 16.0;
      dst[oy * kOutW + ox] = (2.0 * v) / 255.0 - 1.0;
    }
  }
  return out;
}

Dataset duplicate_rare(const Dataset& in, double center_x, double threshold) {
  Dataset out;
  out.reserve(in.size());
  for (const Sample& s : in) {
    out.push_back(s);
    if (std::fabs(s.label - center_x) >= threshold) {
      Sample copy = s;
      copy.duplicated = true;
      out.push_back(std::move(copy));
    }
  }
  return out;
}

Sample synthetic_sample(const SyntheticParams& p, std::string id) {
  std::vector<double> img(static_cast<size_t>(kOutH * kOutW), p.background);
  RngStream noise(p.noise_key, "synthetic-noise");
  const double two_pi = 6.283185307179586;
  const struct {
    double col, slope, bright, dash_phase, period;
  } lines[2] = {{p.line1_col, p.slope1, p.bright1, p.dash_phase1,
                 std::max(1.0, p.wiggle_period)},
                {p.line2_col, p.slope2, p.bright2, p.dash_phase2,
                 std::max(1.0, p.wiggle_period2)}};
  for (int64_t y = 0; y < kOutH; ++y) {
    const double dy = static_cast<double>(y) - kLabelRow;
    for (const auto& ln : lines) {
      if (p.dash_period > 0) {
        const double t = std::fmod(dy + ln.dash_phase + 4096.0, p.dash_period);
        if (t > p.dash_duty * p.dash_period) continue;  // inside the dash gap
      }
      // sin(0) = 0: the wiggle vanishes at the label row
      const double cx = ln.col + ln.slope * dy + p.wiggle_amp * std::sin(two_pi * dy / ln.period);
      const int64_t x0 = static_cast<int64_t>(std::floor(cx - p.thickness));
      const int64_t x1 = static_cast<int64_t>(std::ceil(cx + p.thickness));
      for (int64_t x = std::max<int64_t>(0, x0); x <= std::min(kOutW - 1, x1); ++x) {
        const double dist = std::fabs(static_cast<double>(x) - cx);
        if (dist > p.thickness) continue;
        const double w = 1.0 - dist / (p.thickness + 1.0);
        double& px = img[static_cast<size_t>(y * kOutW + x)];
        px = std::max(px, p.background + (ln.bright - p.background) * w);
      }
    }
  }
  Sample s;
  s.id = std::move(id);
  s.label = kResize * (p.line1_col + p.line2_col) / 2.0;
  s.shape = {kOutH, kOutW, 1};
  s.pixels.resize(img.size());
  for (size_t i = 0; i < img.size(); ++i) {
    double v = img[i];
    if (p.noise_sigma > 0) v += p.noise_sigma * noise.normal();
    v = std::min(255.0, std::max(0.0, v));
    s.pixels[i] = static_cast<float>((2.0 * v) / 255.0 - 1.0);
  }
  return s;
}

Dataset synthetic_dataset(int64_t n, uint64_t seed) {
  if (n < 1) throw ContractError("synthetic_dataset: n must be >= 1");
  Dataset ds;
  ds.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    RngStream rng(seed, "synthetic", static_cast<uint64_t>(i));
    SyntheticParams p;
    const double mid = rng.uniform(70.0, 250.0);
    const double max_half = std::min({55.0, mid - 8.0, 312.0 - mid});
    const double half = rng.uniform(20.0, max_half);
    p.line1_col = mid - half;
    p.line2_col = mid + half;
    p.slope1 = rng.uniform(-0.15, 0.15);
    p.slope2 = rng.uniform(-0.15, 0.15);
    p.bright1 = rng.uniform(190.0, 255.0);
    p.bright2 = rng.uniform(190.0, 255.0);
    p.thickness = rng.uniform(2.5, 4.5);
    p.background = rng.uniform(15.0, 45.0);
    p.noise_sigma = rng.uniform(0.0, 2.0);
    p.wiggle_amp = rng.uniform(0.0, 1.5);
    p.wiggle_period = rng.uniform(40.0, 110.0);
    p.wiggle_period2 = rng.uniform(40.0, 110.0);
    p.dash_period = rng.uniform(18.0, 40.0);
    p.dash_duty = rng.uniform(0.6, 0.85);
    p.dash_phase1 = rng.uniform(0.0, p.dash_period);
    p.dash_phase2 = rng.uniform(0.0, p.dash_period);
    p.noise_key = mix64(seed ^ static_cast<uint64_t>(i) * 0x9e3779b97f4a7c15ULL);
    char id[32];
    std::snprintf(id, sizeof id, "synthetic_%06lld", static_cast<long long>(i));
    ds.push_back(synthetic_sample(p, id));
  }
  return ds;
}

Tensor make_batch_inputs(const Dataset& ds, const std::vector<int64_t>& idx) {
  if (idx.empty()) throw ContractError("batch must contain at least one sample");
  const Sample& first = ds.at(static_cast<size_t>(idx[0]));
  Shape shape = first.shape;
  shape.insert(shape.begin(), static_cast<int64_t>(idx.size()));
  Tensor out(shape);
  const int64_t row = shape_numel(first.shape);
  double* dst = out.mut();
  for (size_t i = 0; i < idx.size(); ++i) {
    const Sample& s = ds.at(static_cast<size_t>(idx[i]));
    if (s.shape != first.shape)
      throw ShapeError("batch mixes sample shapes " + shape_str(first.shape) + " and " +
                       shape_str(s.shape));
    for (int64_t j = 0; j < row; ++j)
      dst[static_cast<int64_t>(i) * row + j] = static_cast<double>(s.pixels[static_cast<size_t>(j)]);
  }
  return out;
}

Tensor make_batch_labels(const Dataset& ds, const std::vector<int64_t>& idx) {
  if (idx.empty()) throw ContractError("batch must contain at least one sample");
  Tensor out({static_cast<int64_t>(idx.size()), 1});
  for (size_t i = 0; i < idx.size(); ++i)
    out[static_cast<int64_t>(i)] = ds.at(static_cast<size_t>(idx[i])).label;
  return out;
}

namespace {

void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<char*>(b), 4);
}
uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
void write_u64(std::ostream& os, uint64_t v) {
  write_u32(os, static_cast<uint32_t>(v));
  write_u32(os, static_cast<uint32_t>(v >> 32));
}
uint64_t read_u64(std::istream& is) {
  uint64_t lo = read_u32(is);
  uint64_t hi = read_u32(is);
  return lo | (hi << 32);
}

}  // namespace

void write_tensor_f32(const std::string& path, const Shape& shape,
                      const std::vector<float>& data) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size()))
    throw ShapeError("tensor file: data size does not match shape " + shape_str(shape));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write tensor file '" + path + "'");
  os.write("TSRF", 4);
  write_u32(os, static_cast<uint32_t>(shape.size()));
  for (int64_t d : shape) write_u64(os, static_cast<uint64_t>(d));
  for (float f : data) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(os, bits);
  }
  if (!os) throw DataError("short write to tensor file '" + path + "'");
}

void read_tensor_f32(const std::string& path, Shape& shape, std::vector<float>& data) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open tensor file '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TSRF", 4) != 0)
    throw DataError("'" + path + "' is not a tensor file (bad magic)");
  uint32_t rank = read_u32(is);
  if (rank > 8) throw DataError("'" + path + "': implausible rank " + std::to_string(rank));
  shape.clear();
  for (uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int64_t>(read_u64(is)));
  int64_t n = shape_numel(shape);
  data.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    uint32_t bits = read_u32(is);
    std::memcpy(&data[static_cast<size_t>(i)], &bits, 4);
  }
  if (!is) throw DataError("truncated tensor file '" + path + "'");
}

void save_dataset(const std::string& dir, const Dataset& ds) {
  fs::create_directories(fs::path(dir) / "samples");
  std::ofstream index(fs::path(dir) / "index.jsonl");
  if (!index) throw DataError("cannot write dataset index in '" + dir + "'");
  for (size_t i = 0; i < ds.size(); ++i) {
    char rel[64];
    std::snprintf(rel, sizeof rel, "samples/%06zu.tsr", i);
    write_tensor_f32((fs::path(dir) / rel).string(), ds[i].shape, ds[i].pixels);
    json line = {{"id", ds[i].id},
                 {"label", ds[i].label},
                 {"duplicated", ds[i].duplicated},
                 {"file", rel}};
    index << line.dump() << "\n";
  }
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream index(fs::path(dir) / "index.jsonl");
  if (!index) throw DataError("cannot open dataset index in '" + dir + "'");
  Dataset ds;
  std::string line;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(std::string("bad dataset index line: ") + e.what());
    }
    Sample s;
    s.id = j.at("id").get<std::string>();
    s.label = j.at("label").get<double>();
    s.duplicated = j.at("duplicated").get<bool>();
    read_tensor_f32((fs::path(dir) / j.at("file").get<std::string>()).string(), s.shape, s.pixels);
    ds.push_back(std::move(s));
  }
  if (ds.empty()) throw DataError("dataset in '" + dir + "' is empty");
  return ds;
}

namespace {

Tensor read_pgm(std::ifstream& is, const std::string& path) {
  auto next_token = [&is, &path]() {
    std::string tok;
    while (is) {
      is >> tok;
      if (!tok.empty() && tok[0] == '#') {
        std::string rest;
        std::getline(is, rest);
        continue;
      }
      return tok;
    }
    throw DataError("truncated PGM header in '" + path + "'");
  };
  int64_t w = std::stoll(next_token());
  int64_t h = std::stoll(next_token());
  int64_t maxval = std::stoll(next_token());
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw DataError("unsupported PGM geometry/maxval in '" + path + "'");
  is.get();  // single whitespace after maxval
  std::vector<char> raw(static_cast<size_t>(w * h));
  is.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!is) throw DataError("truncated PGM pixel data in '" + path + "'");
  Tensor t({h, w, 1});
  double* dst = t.mut();
  for (size_t i = 0; i < raw.size(); ++i)
    dst[i] = static_cast<double>(static_cast<unsigned char>(raw[i]));
  return t;
}

Tensor read_bmp(std::ifstream& is, const std::string& path) {
  auto fail = [&path](const std::string& why) -> DataError {
    return DataError("bad BMP '" + path + "': " + why);
  };
  unsigned char fh[12];
  is.read(reinterpret_cast<char*>(fh), 12);  // rest of file header after 'BM'
  uint32_t data_offset = static_cast<uint32_t>(fh[8]) | (static_cast<uint32_t>(fh[9]) << 8) |
                         (static_cast<uint32_t>(fh[10]) << 16) |
                         (static_cast<uint32_t>(fh[11]) << 24);
  unsigned char ih[40];
  is.read(reinterpret_cast<char*>(ih), 40);
  if (!is) throw fail("truncated header");
  auto u32 = [&ih](int off) {
    return static_cast<uint32_t>(ih[off]) | (static_cast<uint32_t>(ih[off + 1]) << 8) |
           (static_cast<uint32_t>(ih[off + 2]) << 16) | (static_cast<uint32_t>(ih[off + 3]) << 24);
  };
  if (u32(0) < 40) throw fail("unsupported header size");
  int32_t width = static_cast<int32_t>(u32(4));
  int32_t height_raw = static_cast<int32_t>(u32(8));
  uint16_t bpp = static_cast<uint16_t>(ih[14] | (ih[15] << 8));
  uint32_t compression = u32(16);
  if (compression != 0) throw fail("compressed BMP not supported");
  if (bpp != 8 && bpp != 24) throw fail("only 8-bit and 24-bit BMP supported");
  const bool bottom_up = height_raw > 0;
  const int64_t h = std::abs(height_raw);
  const int64_t w = width;
  if (w <= 0 || h <= 0) throw fail("bad dimensions");

  double palette_gray[256];
  if (bpp == 8) {
    uint32_t colors = u32(32);
    if (colors == 0) colors = 256;
    std::vector<unsigned char> pal(static_cast<size_t>(colors) * 4);
    is.seekg(14 + u32(0), std::ios::beg);
    is.read(reinterpret_cast<char*>(pal.data()), static_cast<std::streamsize>(pal.size()));
    if (!is) throw fail("truncated palette");
    for (uint32_t i = 0; i < 256; ++i) {
      if (i < colors)
        palette_gray[i] =
            (static_cast<double>(pal[i * 4]) + pal[i * 4 + 1] + pal[i * 4 + 2]) / 3.0;
      else
        palette_gray[i] = 0.0;
    }
  }

  is.seekg(data_offset, std::ios::beg);
  const int64_t channels = bpp == 8 ? 1 : 3;
  const int64_t row_bytes = ((w * (bpp / 8) + 3) / 4) * 4;
  std::vector<unsigned char> row(static_cast<size_t>(row_bytes));
  Tensor t({h, w, channels});
  double* dst = t.mut();
  for (int64_t r = 0; r < h; ++r) {
    is.read(reinterpret_cast<char*>(row.data()), row_bytes);
    if (!is) throw fail("truncated pixel data");
    const int64_t y = bottom_up ? h - 1 - r : r;
    for (int64_t x = 0; x < w; ++x) {
      if (bpp == 8) {
        dst[(y * w + x)] = palette_gray[row[static_cast<size_t>(x)]];
      } else {
        // BMP stores BGR
        dst[(y * w + x) * 3 + 0] = row[static_cast<size_t>(x * 3 + 2)];
        dst[(y * w + x) * 3 + 1] = row[static_cast<size_t>(x * 3 + 1)];
        dst[(y * w + x) * 3 + 2] = row[static_cast<size_t>(x * 3 + 0)];
      }
    }
  }
  return t;
}

}  // namespace

Tensor read_image(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open image '" + path + "'");
  char m0 = 0, m1 = 0;
  is.get(m0).get(m1);
  if (m0 == 'P' && m1 == '5') return read_pgm(is, path);
  if (m0 == 'B' && m1 == 'M') return read_bmp(is, path);
  throw DataError("unsupported image format in '" + path +
                  "' (expected binary PGM or uncompressed BMP)");
}

void write_pgm(const std::string& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 1)
    throw ShapeError("write_pgm: expected [h,w,1], got " + shape_str(image.shape()));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write image '" + path + "'");
  os << "P5\n" << image.dim(1) << " " << image.dim(0) << "\n255\n";
  const double* src = image.data();
  for (int64_t i = 0; i < image.numel(); ++i) {
    double v = std::min(255.0, std::max(0.0, src[i]));
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v))));
  }
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path + "' for hashing");
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!is) break;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace tolnet

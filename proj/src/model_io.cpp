#include "tolnet/model_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

using nlohmann::json;

namespace tolnet {

namespace {

static_assert(sizeof(double) == 8);

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
void write_f64(std::ostream& os, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64(os, bits);
}
double read_f64(std::istream& is) {
  uint64_t bits = read_u64(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

const char* padding_name(Padding p) { return p == Padding::Valid ? "valid" : "same"; }

Padding padding_from(const std::string& s) {
  if (s == "valid") return Padding::Valid;
  if (s == "same") return Padding::Same;
  throw DataError("model file: unknown padding '" + s + "'");
}

LayerKind kind_from(const std::string& s) {
  if (s == "dense") return LayerKind::Dense;
  if (s == "conv2d") return LayerKind::Conv2d;
  if (s == "relu") return LayerKind::Relu;
  if (s == "flatten") return LayerKind::Flatten;
  if (s == "maxpool2d") return LayerKind::MaxPool2d;
  throw DataError("model file: unknown layer kind '" + s + "'");
}

}  // namespace

void save_model(const std::string& path, const Network& net, const Provenance& provenance) {
  net.validate();
  json header;
  header["input_shape"] = net.input_shape;
  json layers = json::array();
  for (const Layer& l : net.layers) {
    json jl;
    jl["kind"] = layer_kind_name(l.kind);
    jl["name"] = l.name;
    if (l.kind == LayerKind::Conv2d) {
      jl["stride"] = l.stride;
      jl["padding"] = padding_name(l.padding);
    }
    if (l.kind == LayerKind::MaxPool2d) {
      jl["win_h"] = l.win_h;
      jl["win_w"] = l.win_w;
      jl["stride"] = l.stride;
    }
    if (l.has_params()) {
      jl["weight_shape"] = l.weight.shape();
      jl["bias_shape"] = l.bias.shape();
    }
    layers.push_back(std::move(jl));
  }
  header["layers"] = std::move(layers);
  header["provenance"] = provenance;
  const std::string header_str = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write model file '" + path + "'");
  os.write("TNMF", 4);
  write_u32(os, kModelFormatVersion);
  write_u64(os, header_str.size());
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const Layer& l : net.layers) {
    if (!l.has_params()) continue;
    for (int64_t i = 0; i < l.weight.numel(); ++i) write_f64(os, l.weight[i]);
    for (int64_t i = 0; i < l.bias.numel(); ++i) write_f64(os, l.bias[i]);
  }
  if (!os) throw DataError("short write to model file '" + path + "'");
}

LoadedModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open model file '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TNMF", 4) != 0)
    throw DataError("'" + path + "' is not a model file (bad magic)");
  LoadedModel out;
  out.version = read_u32(is);
  if (out.version != kModelFormatVersion)
    throw DataError("model file '" + path + "' has unsupported version " +
                    std::to_string(out.version));
  uint64_t header_len = read_u64(is);
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw DataError("truncated model header in '" + path + "'");
  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw DataError("bad model header in '" + path + "': " + e.what());
  }

  Network& net = out.net;
  net.input_shape = header.at("input_shape").get<Shape>();
  for (const json& jl : header.at("layers")) {
    const LayerKind kind = kind_from(jl.at("kind").get<std::string>());
    const std::string name = jl.at("name").get<std::string>();
    Layer l;
    switch (kind) {
      case LayerKind::Dense: {
        Shape ws = jl.at("weight_shape").get<Shape>();
        l = Layer::dense(name, ws[0], ws[1]);
        break;
      }
      case LayerKind::Conv2d: {
        Shape ws = jl.at("weight_shape").get<Shape>();
        l = Layer::conv2d(name, ws[0], ws[1], ws[2], ws[3], jl.at("stride").get<int64_t>(),
                          padding_from(jl.at("padding").get<std::string>()));
        break;
      }
      case LayerKind::Relu:
        l = Layer::relu(name);
        break;
      case LayerKind::Flatten:
        l = Layer::flatten(name);
        break;
      case LayerKind::MaxPool2d:
        l = Layer::maxpool2d(name, jl.at("win_h").get<int64_t>(), jl.at("win_w").get<int64_t>(),
                             jl.at("stride").get<int64_t>());
        break;
    }
    net.layers.push_back(std::move(l));
  }
  for (const auto& [key, value] : header.at("provenance").items())
    out.provenance[key] = value.get<std::string>();

  for (Layer& l : net.layers) {
    if (!l.has_params()) continue;
    Tensor w(l.weight.shape());
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = read_f64(is);
    Tensor b(l.bias.shape());
    for (int64_t i = 0; i < b.numel(); ++i) b[i] = read_f64(is);
    l.weight = w;
    l.bias = b;
  }
  if (!is) throw DataError("truncated parameter data in '" + path + "'");
  net.validate();
  return out;
}

}  // namespace tolnet

#include "pwc/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace pwc {

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t n = 0; n < 256; ++n) {
    std::uint32_t c = n;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[n] = c;
  }
  return table;
}

const std::array<std::uint32_t, 256> kCrcTable = make_crc_table();

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < size; ++i) c = kCrcTable[(c ^ data[i]) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

namespace {

constexpr char kMagic[4] = {'P', 'W', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

struct Writer {
  std::vector<std::uint8_t> buf;

  void u8(std::uint8_t v) { buf.push_back(v); }
  void u32(std::uint32_t v) {
    buf.push_back(static_cast<std::uint8_t>(v & 0xFF));
    buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    buf.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    buf.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
};

struct Reader {
  const std::uint8_t* p;
  const std::uint8_t* end;

  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end - p) < n) {
      throw std::runtime_error("checkpoint truncated");
    }
  }
  std::uint8_t u8() {
    need(1);
    return *p++;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                      (static_cast<std::uint32_t>(p[2]) << 16) |
                      (static_cast<std::uint32_t>(p[3]) << 24);
    p += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
};

constexpr std::uint8_t kTagPointconv = 0;
constexpr std::uint8_t kTagRelu = 1;
constexpr std::uint8_t kTagPool = 2;
constexpr std::uint8_t kTagDense = 3;

}  // namespace

template <class T>
void save_checkpoint(const NetworkSpec& spec, const ModelState<T>& state,
                     const std::string& path) {
  spec.validate();
  if (state.params.size() != spec.layers.size()) {
    throw std::invalid_argument("save_checkpoint: state does not match spec");
  }

  Writer w;
  w.buf.insert(w.buf.end(), kMagic, kMagic + 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(spec.layers.size()));

  int channels = spec.input_channels;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const LayerDesc& layer = spec.layers[l];
    const ParamBlock<T>& block = state.params[l];
    switch (layer.kind) {
      case LayerKind::pointconv: {
        if (layer.kernel.resolution > 255) {
          throw std::invalid_argument("save_checkpoint: resolution exceeds format limit");
        }
        w.u8(kTagPointconv);
        w.f32(static_cast<float>(layer.kernel.radius));
        w.u8(static_cast<std::uint8_t>(layer.kernel.resolution));
        w.u8(layer.kernel.geometry == KernelGeometry::ball ? 0 : 1);
        w.u32(static_cast<std::uint32_t>(channels));
        w.u32(static_cast<std::uint32_t>(layer.c_out));
        const std::size_t n_w =
            static_cast<std::size_t>(layer.c_out) * channels * layer.kernel.cell_count();
        if (block.w.size() != n_w || block.b.size() != static_cast<std::size_t>(layer.c_out)) {
          throw std::invalid_argument("save_checkpoint: pointconv block shape mismatch");
        }
        for (T v : block.w) w.f32(static_cast<float>(v));
        for (T v : block.b) w.f32(static_cast<float>(v));
        channels = layer.c_out;
        break;
      }
      case LayerKind::relu:
        w.u8(kTagRelu);
        break;
      case LayerKind::global_pool:
        w.u8(kTagPool);
        break;
      case LayerKind::dense: {
        w.u8(kTagDense);
        w.u32(static_cast<std::uint32_t>(channels));
        w.u32(static_cast<std::uint32_t>(layer.c_out));
        const std::size_t n_w = static_cast<std::size_t>(layer.c_out) * channels;
        if (block.w.size() != n_w || block.b.size() != static_cast<std::size_t>(layer.c_out)) {
          throw std::invalid_argument("save_checkpoint: dense block shape mismatch");
        }
        for (T v : block.w) w.f32(static_cast<float>(v));
        for (T v : block.b) w.f32(static_cast<float>(v));
        channels = layer.c_out;
        break;
      }
    }
  }
  w.u32(crc32(w.buf.data(), w.buf.size()));

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write(reinterpret_cast<const char*>(w.buf.data()), static_cast<std::streamsize>(w.buf.size()));
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

LoadedModel load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());

  if (buf.size() < 16) throw std::runtime_error("checkpoint truncated");
  const std::uint32_t stored_crc = static_cast<std::uint32_t>(buf[buf.size() - 4]) |
                                   (static_cast<std::uint32_t>(buf[buf.size() - 3]) << 8) |
                                   (static_cast<std::uint32_t>(buf[buf.size() - 2]) << 16) |
                                   (static_cast<std::uint32_t>(buf[buf.size() - 1]) << 24);
  if (crc32(buf.data(), buf.size() - 4) != stored_crc) {
    throw std::runtime_error("checkpoint checksum mismatch");
  }

  Reader r{buf.data(), buf.data() + buf.size() - 4};
  char magic[4];
  r.need(4);
  std::memcpy(magic, r.p, 4);
  r.p += 4;
  if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("bad checkpoint magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t layer_count = r.u32();

  LoadedModel model;
  int channels = -1;  // from the first parametric layer
  int pools = 0;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    LayerDesc layer;
    ParamBlock<float> block;
    const std::uint8_t tag = r.u8();
    switch (tag) {
      case kTagPointconv: {
        layer.kind = LayerKind::pointconv;
        layer.kernel.radius = r.f32();
        layer.kernel.resolution = r.u8();
        const std::uint8_t geom = r.u8();
        if (geom > 1) throw std::runtime_error("bad kernel geometry byte");
        layer.kernel.geometry = geom == 0 ? KernelGeometry::ball : KernelGeometry::cube;
        const std::uint32_t c_in = r.u32();
        const std::uint32_t c_out = r.u32();
        layer.c_out = static_cast<int>(c_out);
        if (channels < 0) channels = static_cast<int>(c_in);
        const std::size_t n_w =
            static_cast<std::size_t>(c_out) * c_in * layer.kernel.cell_count();
        block.w.resize(n_w);
        for (auto& v : block.w) v = r.f32();
        block.b.resize(c_out);
        for (auto& v : block.b) v = r.f32();
        break;
      }
      case kTagRelu:
        layer.kind = LayerKind::relu;
        break;
      case kTagPool:
        layer.kind = LayerKind::global_pool;
        ++pools;
        break;
      case kTagDense: {
        layer.kind = LayerKind::dense;
        const std::uint32_t c_in = r.u32();
        const std::uint32_t c_out = r.u32();
        layer.c_out = static_cast<int>(c_out);
        if (channels < 0) channels = static_cast<int>(c_in);
        block.w.resize(static_cast<std::size_t>(c_out) * c_in);
        for (auto& v : block.w) v = r.f32();
        block.b.resize(c_out);
        for (auto& v : block.b) v = r.f32();
        break;
      }
      default:
        throw std::runtime_error("unknown layer tag " + std::to_string(tag));
    }
    model.spec.layers.push_back(layer);
    model.state.params.push_back(std::move(block));
  }
  if (r.p != r.end) throw std::runtime_error("trailing bytes in checkpoint");
  if (channels < 0) throw std::runtime_error("checkpoint has no parametric layers");

  model.spec.task = pools > 0 ? Task::classification : Task::segmentation;
  model.spec.input_channels = channels;
  int out_channels = channels;
  for (const LayerDesc& layer : model.spec.layers) {
    if (layer.kind == LayerKind::pointconv || layer.kind == LayerKind::dense) {
      out_channels = layer.c_out;
    }
  }
  model.spec.num_classes = out_channels;
  model.spec.validate();

  model.state.m.resize(model.state.params.size());
  model.state.v.resize(model.state.params.size());
  for (std::size_t l = 0; l < model.state.params.size(); ++l) {
    model.state.m[l].w.assign(model.state.params[l].w.size(), 0.0f);
    model.state.m[l].b.assign(model.state.params[l].b.size(), 0.0f);
    model.state.v[l].w.assign(model.state.params[l].w.size(), 0.0f);
    model.state.v[l].b.assign(model.state.params[l].b.size(), 0.0f);
  }
  return model;
}

template <class T>
ModelState<T> convert_state(const ModelState<float>& state) {
  ModelState<T> out;
  out.step = state.step;
  out.bias_frozen = state.bias_frozen;
  auto convert = [](const std::vector<ParamBlock<float>>& in) {
    std::vector<ParamBlock<T>> res(in.size());
    for (std::size_t l = 0; l < in.size(); ++l) {
      res[l].w.assign(in[l].w.begin(), in[l].w.end());
      res[l].b.assign(in[l].b.begin(), in[l].b.end());
    }
    return res;
  };
  out.params = convert(state.params);
  out.m = convert(state.m);
  out.v = convert(state.v);
  return out;
}

template void save_checkpoint<float>(const NetworkSpec&, const ModelState<float>&,
                                     const std::string&);
template void save_checkpoint<double>(const NetworkSpec&, const ModelState<double>&,
                                      const std::string&);
template ModelState<float> convert_state<float>(const ModelState<float>&);
template ModelState<double> convert_state<double>(const ModelState<float>&);

}  // namespace pwc

#include "perfcnn/io.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace perfcnn {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

void append_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xffu));
  out.push_back(static_cast<char>((v >> 8) & 0xffu));
  out.push_back(static_cast<char>((v >> 16) & 0xffu));
  out.push_back(static_cast<char>((v >> 24) & 0xffu));
}

void append_f32(std::string& out, float v) { append_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t take_u32(const std::string& data, std::size_t& pos, const std::string& path) {
  if (pos + 4 > data.size()) fail(path, "truncated file");
  const auto b = [&](std::size_t i) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i]));
  };
  const std::uint32_t v = b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24);
  pos += 4;
  return v;
}

float take_f32(const std::string& data, std::size_t& pos, const std::string& path) {
  return std::bit_cast<float>(take_u32(data, pos, path));
}

std::string read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (!in.good() && !in.eof()) fail(path, "read error");
  return buffer.str();
}

void write_binary(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(path, "write error");
}

void check_header(const std::string& data, std::size_t& pos, const std::string& path,
                  const char* magic) {
  if (data.size() < 4 || data.compare(0, 4, magic) != 0) {
    fail(path, std::string("missing ") + magic + " magic");
  }
  pos = 4;
  const std::uint32_t version = take_u32(data, pos, path);
  if (version != kFormatVersion) {
    fail(path, "unsupported format version " + std::to_string(version));
  }
}

}  // namespace

std::string read_text_file(const std::string& path) { return read_binary(path); }

void write_text_file(const std::string& path, const std::string& content) {
  write_binary(path, content);
}

// --- tensors --------------------------------------------------------------------

template <typename Real>
void save_tensor(const std::string& path, const Tensor3<Real>& tensor) {
  std::string out;
  out.reserve(20 + tensor.values().size() * 4);
  out += "PCNT";
  append_u32(out, kFormatVersion);
  append_u32(out, static_cast<std::uint32_t>(tensor.height()));
  append_u32(out, static_cast<std::uint32_t>(tensor.width()));
  append_u32(out, static_cast<std::uint32_t>(tensor.channels()));
  for (const Real v : tensor.values()) append_f32(out, static_cast<float>(v));
  write_binary(path, out);
}

template <typename Real>
Tensor3<Real> load_tensor(const std::string& path) {
  const std::string data = read_binary(path);
  std::size_t pos = 0;
  check_header(data, pos, path, "PCNT");
  const std::uint32_t x = take_u32(data, pos, path);
  const std::uint32_t y = take_u32(data, pos, path);
  const std::uint32_t s = take_u32(data, pos, path);
  if (x == 0 || y == 0 || s == 0) fail(path, "zero tensor dimension");
  const std::size_t count = static_cast<std::size_t>(x) * y * s;
  if (data.size() != 20 + count * 4) {
    fail(path, "payload size does not match the header dimensions");
  }
  Tensor3<Real> tensor(static_cast<int>(x), static_cast<int>(y), static_cast<int>(s));
  for (Real& v : tensor.values()) v = static_cast<Real>(take_f32(data, pos, path));
  return tensor;
}

// --- kernels --------------------------------------------------------------------

template <typename Real>
void save_kernel(const std::string& path, const KernelTensor<Real>& kernel) {
  std::string out;
  out.reserve(20 + kernel.values().size() * 4);
  out += "PCNW";
  append_u32(out, kFormatVersion);
  append_u32(out, static_cast<std::uint32_t>(kernel.size_d()));
  append_u32(out, static_cast<std::uint32_t>(kernel.in_channels()));
  append_u32(out, static_cast<std::uint32_t>(kernel.out_channels()));
  for (const Real v : kernel.values()) append_f32(out, static_cast<float>(v));
  write_binary(path, out);
}

template <typename Real>
KernelTensor<Real> load_kernel(const std::string& path) {
  const std::string data = read_binary(path);
  std::size_t pos = 0;
  check_header(data, pos, path, "PCNW");
  const std::uint32_t d = take_u32(data, pos, path);
  const std::uint32_t s = take_u32(data, pos, path);
  const std::uint32_t t = take_u32(data, pos, path);
  if (d == 0 || s == 0 || t == 0) fail(path, "zero kernel dimension");
  const std::size_t count = static_cast<std::size_t>(d) * d * s * t;
  if (data.size() != 20 + count * 4) {
    fail(path, "payload size does not match the header dimensions");
  }
  KernelTensor<Real> kernel(static_cast<int>(d), static_cast<int>(s), static_cast<int>(t));
  for (Real& v : kernel.values()) v = static_cast<Real>(take_f32(data, pos, path));
  return kernel;
}

// --- masks ----------------------------------------------------------------------

std::string serialize_mask(const PerforationMask& mask) {
  std::ostringstream os;
  os << "PCNM " << mask.grid_x << ' ' << mask.grid_y << ' ' << mask.size() << '\n';
  for (const Position& p : mask.points.points) os << p.x << ' ' << p.y << '\n';
  return os.str();
}

PerforationMask parse_mask(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  in >> magic;
  if (magic != "PCNM") throw std::invalid_argument("mask file: missing PCNM magic");
  int grid_x = 0, grid_y = 0;
  long long n = 0;
  if (!(in >> grid_x >> grid_y >> n)) throw std::invalid_argument("mask file: bad header");
  if (grid_x < 1 || grid_y < 1) throw std::invalid_argument("mask file: bad grid extents");
  if (n < 1 || n > static_cast<long long>(grid_x) * grid_y) {
    throw std::invalid_argument("mask file: point count outside the grid");
  }
  PerforationMask mask;
  mask.grid_x = grid_x;
  mask.grid_y = grid_y;
  mask.requested = static_cast<std::size_t>(n);
  mask.points.grid_x = grid_x;
  mask.points.grid_y = grid_y;
  mask.points.points.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    Position p;
    if (!(in >> p.x >> p.y)) {
      throw std::invalid_argument("mask file: expected " + std::to_string(n) + " points, got " +
                                  std::to_string(i));
    }
    mask.points.points.push_back(p);
  }
  std::string extra;
  if (in >> extra) throw std::invalid_argument("mask file: trailing content '" + extra + "'");
  mask.points.validate();  // in-bounds, row-major, duplicate-free
  return mask;
}

void save_mask(const std::string& path, const PerforationMask& mask) {
  write_text_file(path, serialize_mask(mask));
}

PerforationMask load_mask(const std::string& path) {
  try {
    return parse_mask(read_text_file(path));
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

// --- weights directories ----------------------------------------------------------

namespace {

std::string layer_stem(const std::string& dir, int index) {
  return dir + "/layer" + std::to_string(index);
}

template <typename Real>
Tensor3<Real> bias_tensor(const std::vector<Real>& bias) {
  Tensor3<Real> t(1, 1, static_cast<int>(bias.size()));
  t.values() = bias;
  return t;
}

template <typename Real>
std::vector<Real> load_bias(const std::string& path, std::size_t expected) {
  const Tensor3<Real> t = load_tensor<Real>(path);
  if (t.height() != 1 || t.width() != 1 ||
      static_cast<std::size_t>(t.channels()) != expected) {
    fail(path, "bias must be 1x1x" + std::to_string(expected));
  }
  return t.values();
}

}  // namespace

template <typename Real>
void save_weights(const std::string& dir, const Network<Real>& net) {
  std::filesystem::create_directories(dir);
  for (int i = 1; i <= net.layer_count(); ++i) {
    const Layer<Real>& layer = net.layer(i);
    if (layer.param_count() == 0) continue;
    const std::string stem = layer_stem(dir, i);
    if (const auto* conv = dynamic_cast<const ConvLayer<Real>*>(&layer)) {
      save_kernel(stem + ".pcnw", conv->kernel());
      if (conv->has_bias()) save_tensor(stem + ".bias.pcnt", bias_tensor(conv->bias()));
    } else if (const auto* fc = dynamic_cast<const FcLayer<Real>*>(&layer)) {
      KernelTensor<Real> k(1, static_cast<int>(fc->in_features()), fc->out_features());
      k.values() = fc->weights();
      save_kernel(stem + ".pcnw", k);
      save_tensor(stem + ".bias.pcnt", bias_tensor(fc->bias()));
    }
  }
}

template <typename Real>
void load_weights(const std::string& dir, Network<Real>& net) {
  std::vector<Real> params(net.param_count());
  std::size_t offset = 0;
  for (int i = 1; i <= net.layer_count(); ++i) {
    const Layer<Real>& layer = net.layer(i);
    const std::size_t count = layer.param_count();
    if (count == 0) continue;
    const std::string stem = layer_stem(dir, i);
    if (const auto* conv = dynamic_cast<const ConvLayer<Real>*>(&layer)) {
      const KernelTensor<Real> k = load_kernel<Real>(stem + ".pcnw");
      const KernelTensor<Real>& expect = conv->kernel();
      if (k.size_d() != expect.size_d() || k.in_channels() != expect.in_channels() ||
          k.out_channels() != expect.out_channels()) {
        fail(stem + ".pcnw", "kernel is " + std::to_string(k.size_d()) + "x" +
                                 std::to_string(k.in_channels()) + "x" +
                                 std::to_string(k.out_channels()) + ", layer needs " +
                                 std::to_string(expect.size_d()) + "x" +
                                 std::to_string(expect.in_channels()) + "x" +
                                 std::to_string(expect.out_channels()));
      }
      std::copy(k.values().begin(), k.values().end(), params.begin() + offset);
      if (conv->has_bias()) {
        const std::vector<Real> bias =
            load_bias<Real>(stem + ".bias.pcnt", conv->bias().size());
        std::copy(bias.begin(), bias.end(), params.begin() + offset + k.values().size());
      }
    } else if (const auto* fc = dynamic_cast<const FcLayer<Real>*>(&layer)) {
      const KernelTensor<Real> k = load_kernel<Real>(stem + ".pcnw");
      if (k.size_d() != 1 || static_cast<std::size_t>(k.in_channels()) != fc->in_features() ||
          k.out_channels() != fc->out_features()) {
        fail(stem + ".pcnw", "weights are " + std::to_string(k.size_d()) + "x" +
                                 std::to_string(k.in_channels()) + "x" +
                                 std::to_string(k.out_channels()) + ", layer needs 1x" +
                                 std::to_string(fc->in_features()) + "x" +
                                 std::to_string(fc->out_features()));
      }
      std::copy(k.values().begin(), k.values().end(), params.begin() + offset);
      const std::vector<Real> bias = load_bias<Real>(stem + ".bias.pcnt", fc->bias().size());
      std::copy(bias.begin(), bias.end(), params.begin() + offset + k.values().size());
    } else {
      fail(stem, "layer " + std::to_string(i) + " has parameters but no storage mapping");
    }
    offset += count;
  }
  net.set_params(params);
}

// --- dataset directories ----------------------------------------------------------

template <typename Real>
void save_dataset(const std::string& dir, const Dataset<Real>& data) {
  if (data.samples.size() != data.labels.size()) {
    throw std::invalid_argument("dataset: sample/label count mismatch");
  }
  std::filesystem::create_directories(dir);
  std::ostringstream labels;
  for (std::size_t k = 0; k < data.samples.size(); ++k) {
    save_tensor(dir + "/sample_" + std::to_string(k) + ".pcnt", data.samples[k]);
    labels << data.labels[k] << '\n';
  }
  write_text_file(dir + "/labels.txt", labels.str());
}

template <typename Real>
Dataset<Real> load_dataset(const std::string& dir) {
  const std::string label_path = dir + "/labels.txt";
  std::istringstream in(read_text_file(label_path));
  Dataset<Real> data;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      const int label = std::stoi(line, &used);
      if (used != line.size()) throw std::invalid_argument("trailing characters");
      if (label < 0) throw std::invalid_argument("negative label");
      data.labels.push_back(label);
    } catch (const std::exception&) {
      fail(label_path, "line " + std::to_string(lineno) + ": bad label '" + line + "'");
    }
  }
  if (data.labels.empty()) fail(label_path, "no labels");
  data.samples.reserve(data.labels.size());
  for (std::size_t k = 0; k < data.labels.size(); ++k) {
    data.samples.push_back(load_tensor<Real>(dir + "/sample_" + std::to_string(k) + ".pcnt"));
    const Tensor3<Real>& s = data.samples[k];
    const Tensor3<Real>& first = data.samples[0];
    if (s.height() != first.height() || s.width() != first.width() ||
        s.channels() != first.channels()) {
      fail(dir + "/sample_" + std::to_string(k) + ".pcnt", "sample shape differs from sample_0");
    }
  }
  return data;
}

template void save_tensor(const std::string&, const Tensor3<float>&);
template void save_tensor(const std::string&, const Tensor3<double>&);
template Tensor3<float> load_tensor(const std::string&);
template Tensor3<double> load_tensor(const std::string&);
template void save_kernel(const std::string&, const KernelTensor<float>&);
template void save_kernel(const std::string&, const KernelTensor<double>&);
template KernelTensor<float> load_kernel(const std::string&);
template KernelTensor<double> load_kernel(const std::string&);
template void save_weights(const std::string&, const Network<float>&);
template void save_weights(const std::string&, const Network<double>&);
template void load_weights(const std::string&, Network<float>&);
template void load_weights(const std::string&, Network<double>&);
template void save_dataset(const std::string&, const Dataset<float>&);
template void save_dataset(const std::string&, const Dataset<double>&);
template Dataset<float> load_dataset(const std::string&);
template Dataset<double> load_dataset(const std::string&);

}  // namespace perfcnn

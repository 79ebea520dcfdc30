#include "sats/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "sats/error.hpp"

namespace sats {
namespace {

constexpr char kMagic[8] = {'S', 'A', 'T', 'S', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  void u32(std::uint32_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
  void i32(std::int32_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
  void f64s(const std::vector<double>& v) {
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, const std::filesystem::path& path) : in_(in), path_(path) {}
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::int32_t i32() { return pod<std::int32_t>(); }
  void f64s(std::vector<double>& v) {
    read(reinterpret_cast<char*>(v.data()), v.size() * sizeof(double));
  }
  std::string str() {
    const auto n = u32();
    if (n > 4096) fail("implausible string length");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void read(char* dst, std::size_t n) {
    if (!in_.read(dst, static_cast<std::streamsize>(n))) fail("truncated file");
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw IoError("checkpoint " + path_.string() + ": " + why);
  }

 private:
  template <typename T>
  T pod() {
    T v;
    read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }
  std::ifstream& in_;
  std::filesystem::path path_;
};

}  // namespace

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  Writer w(out);
  out.write(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.i32(params.shape().hidden1);
  w.i32(params.shape().hidden2);
  w.i32(params.shape().features);
  w.i32(params.num_known());
  w.u32(static_cast<std::uint32_t>(params.tensors().size()));
  for (const auto& t : params.tensors()) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) w.i32(d);
    w.f64s(t.values);
  }
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Reader r(in, path);
  char magic[sizeof kMagic];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) r.fail("bad magic");
  if (const auto version = r.u32(); version != kCheckpointVersion) {
    r.fail("unsupported version " + std::to_string(version));
  }
  NetworkShape shape;
  shape.hidden1 = r.i32();
  shape.hidden2 = r.i32();
  shape.features = r.i32();
  const int num_known = r.i32();
  const auto count = r.u32();
  if (count != NetworkParams::kTensorCount) r.fail("unexpected tensor count");
  std::vector<Tensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t;
    t.name = r.str();
    const auto rank = r.u32();
    if (rank > 8) r.fail("implausible tensor rank");
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const int dim = r.i32();
      if (dim < 0 || dim > 1 << 20) r.fail("implausible tensor dimension");
      t.shape.push_back(dim);
      n *= static_cast<std::size_t>(dim);
    }
    if (n > (1u << 26)) r.fail("implausible tensor size");
    t.values.resize(n);
    r.f64s(t.values);
    tensors.push_back(std::move(t));
  }
  if (in.peek() != std::ifstream::traits_type::eof()) r.fail("trailing bytes");
  try {
    return NetworkParams::from_tensors(shape, num_known, std::move(tensors));
  } catch (const ValidationError& e) {
    r.fail(e.what());
  }
}

}  // namespace sats

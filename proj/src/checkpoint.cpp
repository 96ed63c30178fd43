#include "deepritz/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace deepritz {

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  bool match(const char* p, std::size_t n) {
    need(n);
    const bool ok = std::memcmp(bytes_.data() + pos_, p, n) == 0;
    pos_ += n;
    return ok;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointParseError("checkpoint truncated");
  }
  std::uint64_t get(int n) {
    need(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

CheckpointVersionError::CheckpointVersionError(std::uint32_t found,
                                               std::uint32_t expected)
    : std::runtime_error("checkpoint format version " + std::to_string(found) +
                         " is not supported (expected " +
                         std::to_string(expected) + ")"),
      found_(found) {}

std::vector<std::uint8_t> save_checkpoint(const ParamStore& store,
                                          const CheckpointMeta& meta) {
  Writer w;
  w.raw(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(kCheckpointVersion);
  w.u64(meta.seed);
  w.u64(meta.step);
  w.str(meta.problem_id);
  const auto& entries = store.layout().entries();
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    w.str(e.name);
    w.u32(static_cast<std::uint32_t>(e.shape.size()));
    for (auto dim : e.shape) w.u64(dim);
  }
  w.u64(store.size());
  for (double v : store.values()) w.f64(v);
  return w.take();
}

LoadedCheckpoint load_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (!r.match(kCheckpointMagic, sizeof(kCheckpointMagic))) {
    throw CheckpointParseError("not a checkpoint: bad magic bytes");
  }
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError(version, kCheckpointVersion);
  }
  LoadedCheckpoint out;
  out.meta.seed = r.u64();
  out.meta.step = r.u64();
  out.meta.problem_id = r.str();

  TensorLayout layout;
  const auto n_entries = r.u32();
  for (std::uint32_t i = 0; i < n_entries; ++i) {
    auto name = r.str();
    const auto rank = r.u32();
    if (rank == 0 || rank > 8) throw CheckpointParseError("bad tensor rank");
    std::vector<std::size_t> shape(rank);
    for (auto& dim : shape) dim = r.u64();
    try {
      layout.add(std::move(name), std::move(shape));
    } catch (const LayoutError& e) {
      throw CheckpointParseError(std::string("bad layout table: ") + e.what());
    }
  }
  const auto n_values = r.u64();
  if (n_values != layout.total_size()) {
    throw CheckpointParseError("value count does not match layout");
  }
  if (r.remaining() != n_values * 8) {
    throw CheckpointParseError("checkpoint size does not match value count");
  }
  std::vector<double> values(n_values);
  for (auto& v : values) v = r.f64();
  try {
    out.store = ParamStore(std::move(layout), std::move(values));
  } catch (const LayoutError& e) {
    throw CheckpointParseError(e.what());
  }
  return out;
}

void write_checkpoint_file(const std::filesystem::path& path,
                           const ParamStore& store, const CheckpointMeta& meta) {
  const auto bytes = save_checkpoint(store, meta);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

LoadedCheckpoint read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

}  // namespace deepritz

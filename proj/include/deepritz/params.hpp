#pragma once

#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace deepritz {

class LayoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TensorEntry {
  std::string name;
  std::vector<std::size_t> shape;

  std::size_t size() const;
  bool operator==(const TensorEntry&) const = default;
};

/// Ordered list of named tensors backing a flat parameter vector.
///
/// Rank-2 entries are weight matrices stored row-major (shape = {rows, cols});
/// rank-1 entries are biases.
class TensorLayout {
 public:
  TensorLayout() = default;

  void add(std::string name, std::vector<std::size_t> shape);

  const std::vector<TensorEntry>& entries() const { return entries_; }
  std::size_t total_size() const { return total_; }
  bool empty() const { return entries_.empty(); }

  bool contains(std::string_view name) const;
  std::size_t offset(std::string_view name) const;
  const TensorEntry& entry(std::string_view name) const;

  bool operator==(const TensorLayout& other) const {
    return entries_ == other.entries_;
  }

 private:
  std::size_t index_of(std::string_view name) const;

  std::vector<TensorEntry> entries_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

/// 64-byte aligned storage.  Vectorised reductions peel a head that depends
/// on the address, so unaligned buffers would make results vary from run to run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  bool operator==(const AlignedAllocator&) const { return true; }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

class ParamStore {
 public:
  ParamStore() = default;
  /// Throws LayoutError on size mismatch or non-finite values.
  ParamStore(TensorLayout layout, std::vector<double> values);

  const TensorLayout& layout() const { return layout_; }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> tensor(std::string_view name) const;
  std::span<double> tensor(std::string_view name);

  bool operator==(const ParamStore&) const = default;

 private:
  TensorLayout layout_;
  AlignedVector values_;
};

enum class InitScheme { Zero, UniformScaled };

/// Zero: every value 0. UniformScaled: each weight matrix entry drawn from
/// U[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))], biases zero.
/// gain scales that bound; compositions of cubic activations blow up on
/// inputs of norm well above 1 unless it is below 1.
ParamStore init_params(const TensorLayout& layout, InitScheme scheme,
                       std::uint64_t seed, double gain = 1.0);

/// Bound used by UniformScaled for a rank-2 entry.
double uniform_scaled_bound(const TensorEntry& entry);

}  // namespace deepritz

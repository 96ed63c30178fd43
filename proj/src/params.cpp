#include "deepritz/params.hpp"

#include <cmath>

#include "deepritz/rng.hpp"

namespace deepritz {

std::size_t TensorEntry::size() const {
  std::size_t n = 1;
  for (auto dim : shape) n *= dim;
  return n;
}

void TensorLayout::add(std::string name, std::vector<std::size_t> shape) {
  if (name.empty()) throw LayoutError("tensor name must be non-empty");
  if (contains(name)) throw LayoutError("duplicate tensor name: " + name);
  if (shape.empty()) throw LayoutError("tensor '" + name + "' has rank 0");
  for (auto dim : shape) {
    if (dim == 0) throw LayoutError("tensor '" + name + "' has a zero dimension");
  }
  TensorEntry entry{std::move(name), std::move(shape)};
  offsets_.push_back(total_);
  total_ += entry.size();
  entries_.push_back(std::move(entry));
}

std::size_t TensorLayout::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw LayoutError("no tensor named '" + std::string(name) + "'");
}

bool TensorLayout::contains(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

std::size_t TensorLayout::offset(std::string_view name) const {
  return offsets_[index_of(name)];
}

const TensorEntry& TensorLayout::entry(std::string_view name) const {
  return entries_[index_of(name)];
}

ParamStore::ParamStore(TensorLayout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(values.begin(), values.end()) {
  if (values_.size() != layout_.total_size()) {
    throw LayoutError("parameter count " + std::to_string(values_.size()) +
                      " does not match layout size " +
                      std::to_string(layout_.total_size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw LayoutError("non-finite parameter value");
  }
}

std::span<const double> ParamStore::tensor(std::string_view name) const {
  const auto& e = layout_.entry(name);
  return std::span<const double>(values_).subspan(layout_.offset(name), e.size());
}

std::span<double> ParamStore::tensor(std::string_view name) {
  const auto& e = layout_.entry(name);
  return std::span<double>(values_).subspan(layout_.offset(name), e.size());
}

double uniform_scaled_bound(const TensorEntry& entry) {
  const double fan_out = static_cast<double>(entry.shape[0]);
  const double fan_in = static_cast<double>(entry.shape[1]);
  return std::sqrt(6.0 / (fan_in + fan_out));
}

ParamStore init_params(const TensorLayout& layout, InitScheme scheme,
                       std::uint64_t seed, double gain) {
  if (layout.empty()) throw LayoutError("cannot initialise an empty layout");
  if (!(gain > 0.0) || !std::isfinite(gain)) {
    throw std::invalid_argument("init gain must be positive and finite");
  }
  std::vector<double> values(layout.total_size(), 0.0);
  if (scheme == InitScheme::UniformScaled) {
    const RngStream root(seed);
    std::size_t offset = 0;
    for (const auto& e : layout.entries()) {
      if (e.shape.size() == 2) {
        auto rng = root.split(e.name);
        const double bound = gain * uniform_scaled_bound(e);
        for (std::size_t i = 0; i < e.size(); ++i) {
          values[offset + i] = rng.uniform(-bound, bound);
        }
      }
      offset += e.size();
    }
  }
  return ParamStore(layout, std::move(values));
}

}  // namespace deepritz

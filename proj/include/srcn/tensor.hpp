#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "srcn/errors.hpp"

namespace srcn {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

/// Dense row-major tensor of 64-bit floats with an optional same-shape
/// gradient buffer. The grad buffer stays empty until backward first
/// accumulates into it.
struct Tensor {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;

  Tensor() = default;

  explicit Tensor(Shape s, bool rg = false) : shape(std::move(s)), requires_grad(rg) {
    for (auto e : shape) {
      if (e == 0) throw ShapeError("tensor extent must be positive, got " + shape_str(shape));
    }
    data.assign(numel(shape), 0.0);
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }
  double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  }
  bool has_grad() const { return grad.size() == data.size(); }
};

using TensorPtr = std::shared_ptr<Tensor>;

inline TensorPtr make_tensor(Shape s, bool requires_grad = false) {
  return std::make_shared<Tensor>(std::move(s), requires_grad);
}

inline TensorPtr tensor_of(Shape s, std::vector<double> values, bool requires_grad = false) {
  auto t = make_tensor(std::move(s), requires_grad);
  if (values.size() != t->size()) {
    throw ShapeError("tensor_of: " + std::to_string(values.size()) + " values for shape " +
                     shape_str(t->shape));
  }
  t->data = std::move(values);
  return t;
}

inline TensorPtr scalar_tensor(double v, bool requires_grad = false) {
  auto t = make_tensor({1}, requires_grad);
  t->data[0] = v;
  return t;
}

inline void check_finite(const Tensor& t, const char* where) {
  for (double v : t.data) {
    if (!std::isfinite(v)) {
      throw NumericsError(std::string("non-finite value produced by ") + where);
    }
  }
}

// --- binary serialization: header = rank then extents, all unsigned 64-bit
// --- little-endian, followed by the elements as little-endian IEEE-754 doubles.

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t read_u32_le(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw DataError("unexpected end of stream");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64_le(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw DataError("unexpected end of stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void write_f64_le(std::ostream& os, double d) {
  write_u64_le(os, std::bit_cast<std::uint64_t>(d));
}

inline double read_f64_le(std::istream& is) {
  return std::bit_cast<double>(read_u64_le(is));
}

inline void write_tensor(std::ostream& os, const Tensor& t) {
  write_u64_le(os, t.rank());
  for (auto e : t.shape) write_u64_le(os, e);
  for (double v : t.data) write_f64_le(os, v);
}

inline Tensor read_tensor(std::istream& is) {
  const std::uint64_t rank = read_u64_le(is);
  if (rank > 8) throw DataError("tensor rank " + std::to_string(rank) + " is implausible");
  Shape shape(rank);
  for (auto& e : shape) {
    e = read_u64_le(is);
    if (e == 0) throw DataError("tensor extent 0 in stream");
  }
  Tensor t(shape);
  for (auto& v : t.data) v = read_f64_le(is);
  return t;
}

}  // namespace srcn

// SPDX-License-Identifier: Apache-2.0
//
// Element-wise uniform midrise quantization of complex values. Real and
// imaginary parts are clipped to [-A, A] and mapped independently to one of
// 2^B cell centers, so one complex scalar always costs exactly 2B bits.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "csifb/types.hpp"

namespace csifb {

enum class QuantizerRole : std::uint8_t { conventional, delta };

struct QuantizerSpec {
  int bits;      // per real dimension
  double range;  // clip half-width A

  QuantizerSpec(int bits_in, double range_in) : bits(bits_in), range(range_in) {
    if (bits < 1 || bits > 24) {
      throw std::invalid_argument("QuantizerSpec: bits must lie in [1, 24]");
    }
    if (!(range > 0.0)) {
      throw std::invalid_argument("QuantizerSpec: range must be positive");
    }
  }

  std::uint32_t levels() const { return 1u << bits; }
  double cell() const { return 2.0 * range / static_cast<double>(levels()); }
  double level(std::uint32_t index) const {
    return -range + (static_cast<double>(index) + 0.5) * cell();
  }
  /// Mean-squared reconstruction error per complex scalar for an in-range
  /// uniform load; used where both ends need a common error model.
  double nominal_error_variance() const { return cell() * cell() / 6.0; }
};

struct QuantizedValue {
  std::uint32_t real_index = 0;
  std::uint32_t imag_index = 0;
  QuantizerRole role = QuantizerRole::conventional;
};

namespace detail {

inline std::uint32_t quantize_axis(double v, const QuantizerSpec& spec) {
  const double clipped = std::clamp(v, -spec.range, spec.range);
  const double position = (clipped + spec.range) / spec.cell();
  long index = static_cast<long>(std::floor(position));
  if (static_cast<double>(index) == position) {
    --index;  // exact cell boundary: equidistant, take the lower index
  }
  index = std::clamp<long>(index, 0, static_cast<long>(spec.levels()) - 1);
  return static_cast<std::uint32_t>(index);
}

}  // namespace detail

inline QuantizedValue quantize(cxd z, const QuantizerSpec& spec,
                               QuantizerRole role = QuantizerRole::conventional) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw std::domain_error("quantize: value must be finite");
  }
  return {detail::quantize_axis(z.real(), spec), detail::quantize_axis(z.imag(), spec), role};
}

inline cxd dequantize(const QuantizedValue& q, const QuantizerSpec& spec) {
  if (q.real_index >= spec.levels() || q.imag_index >= spec.levels()) {
    throw std::invalid_argument("dequantize: index out of range for the spec");
  }
  return {spec.level(q.real_index), spec.level(q.imag_index)};
}

/// Fits a clip range to observed data: kappa times the standard deviation
/// of the pooled real and imaginary parts, floored at 1e-6 so degenerate
/// (all-zero) inputs stay usable.
inline double fit_range(std::span<const cxd> samples, double kappa = 3.0) {
  if (samples.size() < 100) {
    throw std::invalid_argument("fit_range: need at least 100 samples");
  }
  if (!(kappa > 0.0)) {
    throw std::invalid_argument("fit_range: kappa must be positive");
  }
  const double n = 2.0 * static_cast<double>(samples.size());
  double mean = 0.0;
  for (const cxd& z : samples) {
    mean += z.real() + z.imag();
  }
  mean /= n;
  double var = 0.0;
  for (const cxd& z : samples) {
    var += (z.real() - mean) * (z.real() - mean) + (z.imag() - mean) * (z.imag() - mean);
  }
  var /= n;
  return std::max(kappa * std::sqrt(var), 1e-6);
}

/// Payload cost of one quantized complex scalar.
inline int payload_bits(const QuantizerSpec& spec) { return 2 * spec.bits; }

namespace detail {

inline void append_bits(std::vector<std::uint8_t>& buffer, std::size_t& bit_pos,
                        std::uint32_t value, int bits) {
  for (int b = 0; b < bits; ++b, ++bit_pos) {
    if (bit_pos / 8 >= buffer.size()) {
      buffer.push_back(0);
    }
    if ((value >> b) & 1u) {
      buffer[bit_pos / 8] |= static_cast<std::uint8_t>(1u << (bit_pos % 8));
    }
  }
}

inline std::uint32_t extract_bits(std::span<const std::uint8_t> buffer, std::size_t& bit_pos,
                                  int bits) {
  std::uint32_t value = 0;
  for (int b = 0; b < bits; ++b, ++bit_pos) {
    if ((buffer[bit_pos / 8] >> (bit_pos % 8)) & 1u) {
      value |= 1u << b;
    }
  }
  return value;
}

}  // namespace detail

/// Serializes quantized values as back-to-back index pairs, least
/// significant bit first.
inline std::vector<std::uint8_t> pack_payload(std::span<const QuantizedValue> values,
                                              const QuantizerSpec& spec) {
  std::vector<std::uint8_t> buffer;
  std::size_t bit_pos = 0;
  for (const QuantizedValue& q : values) {
    detail::append_bits(buffer, bit_pos, q.real_index, spec.bits);
    detail::append_bits(buffer, bit_pos, q.imag_index, spec.bits);
  }
  return buffer;
}

inline std::vector<QuantizedValue> unpack_payload(std::span<const std::uint8_t> buffer,
                                                  std::size_t count, const QuantizerSpec& spec,
                                                  QuantizerRole role) {
  if (buffer.size() * 8 < count * static_cast<std::size_t>(payload_bits(spec))) {
    throw std::invalid_argument("unpack_payload: buffer too short");
  }
  std::vector<QuantizedValue> values(count);
  std::size_t bit_pos = 0;
  for (QuantizedValue& q : values) {
    q.real_index = detail::extract_bits(buffer, bit_pos, spec.bits);
    q.imag_index = detail::extract_bits(buffer, bit_pos, spec.bits);
    q.role = role;
  }
  return values;
}

}  // namespace csifb

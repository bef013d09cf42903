#pragma once

// Dense row-major array kernels used by integral histograms.
//
// Arrays have shape s_0 x ... x s_{k-1} with `slots` contiguous values per
// cell. Each kernel has a serial reference and an OpenMP version; both
// perform the same arithmetic on every element, so their outputs are
// bitwise identical.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ihcube::kernels {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

struct AxisGeometry {
  std::size_t outer = 1;   // product of extents before the axis
  std::size_t extent = 1;  // extent along the axis
  std::size_t stride = 1;  // elements per step along the axis (incl. slots)
};

inline AxisGeometry axis_geometry(std::span<const std::size_t> shape,
                                  std::size_t axis, std::size_t slots) {
  AxisGeometry g;
  for (std::size_t j = 0; j < axis; ++j) g.outer *= shape[j];
  g.extent = shape[axis];
  g.stride = slots;
  for (std::size_t j = axis + 1; j < shape.size(); ++j) g.stride *= shape[j];
  return g;
}

/// Inclusive running sum along every axis, in axis order.
template <class T>
void prefix_sum_serial(std::span<T> data, std::span<const std::size_t> shape,
                       std::size_t slots) {
  for (std::size_t axis = 0; axis < shape.size(); ++axis) {
    const auto g = axis_geometry(shape, axis, slots);
    for (std::size_t o = 0; o < g.outer; ++o) {
      T* base = data.data() + o * g.extent * g.stride;
      for (std::size_t i = 1; i < g.extent; ++i) {
        T* cur = base + i * g.stride;
        const T* prev = cur - g.stride;
        for (std::size_t e = 0; e < g.stride; ++e) cur[e] += prev[e];
      }
    }
  }
}

template <class T>
void prefix_sum_parallel(std::span<T> data, std::span<const std::size_t> shape,
                         std::size_t slots) {
  const auto threads = static_cast<std::size_t>(max_threads());
  for (std::size_t axis = 0; axis < shape.size(); ++axis) {
    const auto g = axis_geometry(shape, axis, slots);
    T* const ptr = data.data();
    if (g.outer >= threads) {
#pragma omp parallel for schedule(static)
      for (std::size_t o = 0; o < g.outer; ++o) {
        T* base = ptr + o * g.extent * g.stride;
        for (std::size_t i = 1; i < g.extent; ++i) {
          T* cur = base + i * g.stride;
          const T* prev = cur - g.stride;
          for (std::size_t e = 0; e < g.stride; ++e) cur[e] += prev[e];
        }
      }
    } else {
      for (std::size_t o = 0; o < g.outer; ++o) {
        T* base = ptr + o * g.extent * g.stride;
        for (std::size_t i = 1; i < g.extent; ++i) {
          T* cur = base + i * g.stride;
          const T* prev = cur - g.stride;
#pragma omp parallel for schedule(static)
          for (std::size_t e = 0; e < g.stride; ++e) cur[e] += prev[e];
        }
      }
    }
  }
}

/// out[.., t, ..] = in[.., hi_t, ..] - in[.., lo_t, ..] along `axis`.
/// `pairs[t] = {lo_t, hi_t}` index into the input axis; the output extent
/// along the axis is pairs.size(). `out` must hold the reshaped array.
template <class T>
void difference_axis_serial(std::span<const T> in,
                            std::span<const std::size_t> shape,
                            std::size_t axis, std::size_t slots,
                            std::span<const std::pair<std::uint32_t,
                                                      std::uint32_t>> pairs,
                            std::span<T> out) {
  const auto g = axis_geometry(shape, axis, slots);
  const std::size_t n_out = pairs.size();
  for (std::size_t o = 0; o < g.outer; ++o) {
    const T* src = in.data() + o * g.extent * g.stride;
    T* dst = out.data() + o * n_out * g.stride;
    for (std::size_t t = 0; t < n_out; ++t) {
      const T* a = src + pairs[t].first * g.stride;
      const T* b = src + pairs[t].second * g.stride;
      T* c = dst + t * g.stride;
      for (std::size_t e = 0; e < g.stride; ++e) c[e] = b[e] - a[e];
    }
  }
}

template <class T>
void difference_axis_parallel(std::span<const T> in,
                              std::span<const std::size_t> shape,
                              std::size_t axis, std::size_t slots,
                              std::span<const std::pair<std::uint32_t,
                                                        std::uint32_t>> pairs,
                              std::span<T> out) {
  const auto g = axis_geometry(shape, axis, slots);
  const std::size_t n_out = pairs.size();
  const std::size_t rows = g.outer * n_out;
  const T* const src_base = in.data();
  T* const dst_base = out.data();
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t o = r / n_out;
    const std::size_t t = r % n_out;
    const T* src = src_base + o * g.extent * g.stride;
    const T* a = src + pairs[t].first * g.stride;
    const T* b = src + pairs[t].second * g.stride;
    T* c = dst_base + (o * n_out + t) * g.stride;
    for (std::size_t e = 0; e < g.stride; ++e) c[e] = b[e] - a[e];
  }
}

}  // namespace ihcube::kernels

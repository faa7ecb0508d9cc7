#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "recnet/autodiff.hpp"
#include "recnet/tensor.hpp"

namespace recnet {

inline constexpr std::size_t kDefaultFrameBudget = 28;

// Frame features after sampling to a fixed budget. Rows at or beyond
// true_length are zero and masked out.
struct FrameFeatureSequence {
  Tensor features;  // (budget, d)
  std::size_t true_length = 0;
  Mask mask;

  std::size_t budget() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
};

// Row indices picked from k raw frames: round(j·(k−1)/(budget−1)) for
// j = 0..budget−1 when k >= budget, otherwise 0..k−1.
std::vector<std::size_t> sample_indices(std::size_t k, std::size_t budget);

// raw: (k, d) matrix of per-frame features.
FrameFeatureSequence sample_frames(const Tensor& raw, std::size_t budget = kDefaultFrameBudget);

// Feature file layout (all little-endian): "RECF", u32 version, u32 m,
// u32 d, then m·d float32 values row-major. Values widen to double on load.
inline constexpr std::uint32_t kFeatureFileVersion = 1;
Tensor read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const Tensor& frames);

}  // namespace recnet

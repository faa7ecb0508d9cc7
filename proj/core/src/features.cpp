#include "recnet/features.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>

#include "recnet/errors.hpp"
#include "recnet/io.hpp"

namespace recnet {

std::vector<std::size_t> sample_indices(std::size_t k, std::size_t budget) {
  if (k == 0) throw DataError("cannot sample frames from an empty video");
  if (budget == 0) throw ConfigError("frame budget must be at least 1");
  std::vector<std::size_t> idx;
  if (k < budget) {
    for (std::size_t i = 0; i < k; ++i) idx.push_back(i);
    return idx;
  }
  if (budget == 1) return {0};
  // round-half-up of j·(k−1)/(budget−1) in exact integer arithmetic
  const std::size_t den = budget - 1;
  for (std::size_t j = 0; j < budget; ++j) idx.push_back((2 * j * (k - 1) + den) / (2 * den));
  return idx;
}

FrameFeatureSequence sample_frames(const Tensor& raw, std::size_t budget) {
  if (raw.rank() != 2) throw DataError("raw frame features must be a matrix, got " + raw.shape_string());
  const std::size_t d = raw.cols();
  const auto idx = sample_indices(raw.rows(), budget);
  FrameFeatureSequence seq;
  seq.features = Tensor({budget, d});
  seq.true_length = idx.size();
  seq.mask.assign(budget, false);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    auto src = raw.row(idx[j]);
    std::copy(src.begin(), src.end(), seq.features.row(j).begin());
    seq.mask[j] = true;
  }
  return seq;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

}  // namespace

Tensor read_feature_file(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 16 || bytes.compare(0, 4, "RECF") != 0) {
    throw DataError("not a feature file (bad magic): " + path.string());
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kFeatureFileVersion) {
    throw DataError("unsupported feature file version " + std::to_string(version) + ": " + path.string());
  }
  const std::uint32_t m = get_u32(bytes, 8);
  const std::uint32_t d = get_u32(bytes, 12);
  if (m == 0 || d == 0) throw DataError("feature file has zero frames or zero dimension: " + path.string());
  const std::size_t count = static_cast<std::size_t>(m) * d;
  if (bytes.size() != 16 + 4 * count) {
    throw DataError("feature file size does not match its header: " + path.string());
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, 16 + 4 * i)));
  }
  return Tensor::matrix(m, d, std::move(values));
}

void write_feature_file(const std::filesystem::path& path, const Tensor& frames) {
  if (frames.rank() != 2) throw DataError("feature matrix must be rank 2, got " + frames.shape_string());
  std::string out = "RECF";
  put_u32(out, kFeatureFileVersion);
  put_u32(out, static_cast<std::uint32_t>(frames.rows()));
  put_u32(out, static_cast<std::uint32_t>(frames.cols()));
  out.reserve(out.size() + 4 * frames.size());
  for (double v : frames.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  write_file_atomic(path, out);
}

}  // namespace recnet

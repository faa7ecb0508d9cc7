#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "recnet/training.hpp"

namespace recnet {

// Binary layout, little-endian:
//   "RECN" | u32 version | u64 header length | JSON header | f64 tensor data
// The header records stage, dims, config, vocabulary, epoch, history and the
// name and shape of every tensor in data order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const ModelCheckpoint& checkpoint);
ModelCheckpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

// Byte-for-byte equality of the serialized forms.
bool checkpoints_identical(const ModelCheckpoint& a, const ModelCheckpoint& b);

}  // namespace recnet

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "recnet/training.hpp"

namespace recnet::cli {

// Everything a train/sweep run needs besides the data itself.
//
// File format: one `key = value` per line, `#` starts a comment, unknown or
// repeated keys are errors. `profile` picks the model dims (desk or paper);
// any dim key given alongside it overrides the profile value. Relative paths
// resolve against the config file's directory.
struct RunConfig {
  std::string profile = "desk";
  std::size_t embed_size = 8;
  std::size_t hidden_size = 16;
  std::size_t frame_budget = 6;
  std::size_t feature_dim = 10;
  TrainingConfig training;
  std::size_t min_count = 1;
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "runs";
  std::filesystem::path stage1_checkpoint;  // empty: <out_dir>/stage1.ckpt

  ModelDims dims(std::size_t vocab_size) const;
  std::filesystem::path stage1_path() const;
};

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Default values, one per line, in the file format above.
std::string default_config_text();

}  // namespace recnet::cli

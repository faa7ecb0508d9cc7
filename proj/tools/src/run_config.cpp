#include "recnet/cli/run_config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "recnet/errors.hpp"
#include "recnet/io.hpp"

namespace recnet::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

void apply_profile(RunConfig& c, const std::string& name) {
  if (name == "desk") {
    c.embed_size = 8, c.hidden_size = 16, c.frame_budget = 6, c.feature_dim = 10;
  } else if (name == "paper") {
    c.embed_size = 468, c.hidden_size = 512, c.frame_budget = 28, c.feature_dim = 1536;
  } else {
    throw ConfigError("profile: unknown profile '" + name + "' (expected desk or paper)");
  }
  c.profile = name;
}

}  // namespace

ModelDims RunConfig::dims(std::size_t vocab_size) const {
  return {vocab_size, embed_size, hidden_size, feature_dim, frame_budget};
}

std::filesystem::path RunConfig::stage1_path() const {
  return stage1_checkpoint.empty() ? out_dir / "stage1.ckpt" : stage1_checkpoint;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  std::map<std::string, std::string> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing key");
    if (!entries.emplace(key, value).second) throw ConfigError("duplicate key '" + key + "'");
  }

  RunConfig c;
  if (auto it = entries.find("profile"); it != entries.end()) apply_profile(c, it->second);
  TrainingConfig& t = c.training;
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters = {
      {"profile", [](const std::string&, const std::string&) {}},
      {"embed_size", [&](auto& k, auto& v) { c.embed_size = to_size(k, v); }},
      {"hidden_size", [&](auto& k, auto& v) { c.hidden_size = to_size(k, v); }},
      {"frame_budget", [&](auto& k, auto& v) { c.frame_budget = to_size(k, v); }},
      {"feature_dim", [&](auto& k, auto& v) { c.feature_dim = to_size(k, v); }},
      {"variant", [&](auto&, auto& v) { t.variant = parse_variant(v); }},
      {"lambda", [&](auto& k, auto& v) { t.lambda = to_real(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { t.batch_size = to_size(k, v); }},
      {"max_epochs", [&](auto& k, auto& v) { t.max_epochs = to_size(k, v); }},
      {"patience", [&](auto& k, auto& v) { t.patience = to_size(k, v); }},
      {"seed", [&](auto& k, auto& v) { t.seed = to_size(k, v); }},
      {"clip_norm", [&](auto& k, auto& v) { t.clip_norm = to_real(k, v); }},
      {"beam_size", [&](auto& k, auto& v) { t.beam_size = to_size(k, v); }},
      {"max_decode_len", [&](auto& k, auto& v) { t.max_decode_len = to_size(k, v); }},
      {"length_normalize", [&](auto& k, auto& v) { t.length_normalize = to_bool(k, v); }},
      {"adadelta_rho", [&](auto& k, auto& v) { t.adadelta_rho = to_real(k, v); }},
      {"adadelta_eps", [&](auto& k, auto& v) { t.adadelta_eps = to_real(k, v); }},
      {"init_scale", [&](auto& k, auto& v) { t.init_scale = to_real(k, v); }},
      {"min_count", [&](auto& k, auto& v) { c.min_count = to_size(k, v); }},
      {"data_dir", [&](auto&, auto& v) { c.data_dir = path(v); }},
      {"out_dir", [&](auto&, auto& v) { c.out_dir = path(v); }},
      {"stage1_checkpoint", [&](auto&, auto& v) { c.stage1_checkpoint = path(v); }},
  };
  for (const auto& [key, value] : entries) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  if (!c.data_dir.is_absolute() && !base_dir.empty() && !entries.contains("data_dir")) c.data_dir = base_dir / c.data_dir;
  if (!c.out_dir.is_absolute() && !base_dir.empty() && !entries.contains("out_dir")) c.out_dir = base_dir / c.out_dir;

  if (t.variant != Variant::none && !entries.contains("lambda")) {
    throw ConfigError("lambda is required when variant is " + std::string(variant_name(t.variant)));
  }
  if (c.min_count == 0) throw ConfigError("min_count must be at least 1");
  t.validate();
  c.dims(kReservedTokens + 1).validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  return parse_run_config(text, path.parent_path());
}

std::string default_config_text() {
  const RunConfig c;
  const TrainingConfig& t = c.training;
  std::string s;
  auto kv = [&](const char* k, const std::string& v) { s += std::string(k) + " = " + v + "\n"; };
  kv("profile", c.profile);
  kv("embed_size", std::to_string(c.embed_size));
  kv("hidden_size", std::to_string(c.hidden_size));
  kv("frame_budget", std::to_string(c.frame_budget));
  kv("feature_dim", std::to_string(c.feature_dim));
  kv("variant", std::string(variant_name(t.variant)));
  kv("batch_size", std::to_string(t.batch_size));
  kv("max_epochs", std::to_string(t.max_epochs));
  kv("patience", std::to_string(t.patience));
  kv("seed", std::to_string(t.seed));
  kv("clip_norm", format_double(t.clip_norm));
  kv("beam_size", std::to_string(t.beam_size));
  kv("max_decode_len", std::to_string(t.max_decode_len));
  kv("length_normalize", t.length_normalize ? "true" : "false");
  kv("adadelta_rho", format_double(t.adadelta_rho));
  kv("adadelta_eps", format_double(t.adadelta_eps));
  kv("init_scale", format_double(t.init_scale));
  kv("min_count", std::to_string(c.min_count));
  kv("data_dir", c.data_dir.string());
  kv("out_dir", c.out_dir.string());
  return s;
}

}  // namespace recnet::cli

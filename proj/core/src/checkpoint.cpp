#include "recnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <nlohmann/json.hpp>

#include "recnet/errors.hpp"
#include "recnet/io.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace recnet {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'R', 'E', 'C', 'N'};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

std::vector<NamedTensor> tensor_list(ModelCheckpoint& c) {
  std::vector<NamedTensor> out;
  for (const ParamRef& r : c.model.refs()) out.push_back({r.name, r.tensor});
  auto add_slots = [&](AdaDeltaState& opt, std::vector<ParamRef> refs, const char* tag) {
    if (opt.slots.size() != refs.size()) {
      throw CheckpointError(std::string(tag) + " optimizer has " + std::to_string(opt.slots.size()) +
                            " slots for " + std::to_string(refs.size()) + " parameters");
    }
    for (std::size_t k = 0; k < refs.size(); ++k) {
      out.push_back({"adadelta." + refs[k].name + ".sq_grad", &opt.slots[k].sq_grad});
      out.push_back({"adadelta." + refs[k].name + ".sq_update", &opt.slots[k].sq_update});
    }
  };
  add_slots(c.decoder_opt, c.model.decoder.refs(), "decoder");
  if (c.reconstructor_opt) {
    if (!c.model.reconstructor) throw CheckpointError("optimizer state for a missing reconstructor");
    add_slots(*c.reconstructor_opt, c.model.reconstructor->refs(), "reconstructor");
  }
  return out;
}

json config_json(const TrainingConfig& c) {
  return {{"variant", variant_name(c.variant)},
          {"lambda", c.lambda},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"seed", c.seed},
          {"clip_norm", c.clip_norm},
          {"beam_size", c.beam_size},
          {"max_decode_len", c.max_decode_len},
          {"length_normalize", c.length_normalize},
          {"adadelta_rho", c.adadelta_rho},
          {"adadelta_eps", c.adadelta_eps},
          {"init_scale", c.init_scale}};
}

TrainingConfig config_from_json(const json& j) {
  TrainingConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.lambda = j.at("lambda").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.beam_size = j.at("beam_size").get<std::size_t>();
  c.max_decode_len = j.at("max_decode_len").get<std::size_t>();
  c.length_normalize = j.at("length_normalize").get<bool>();
  c.adadelta_rho = j.at("adadelta_rho").get<double>();
  c.adadelta_eps = j.at("adadelta_eps").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  return c;
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view bytes, std::size_t& pos) {
  if (bytes.size() - pos < sizeof(T)) throw CheckpointError("corrupt checkpoint: truncated");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string serialize_checkpoint(const ModelCheckpoint& checkpoint) {
  ModelCheckpoint& c = const_cast<ModelCheckpoint&>(checkpoint);
  const ModelDims& d = c.model.dims;
  json header;
  header["stage"] = c.stage;
  header["dims"] = {{"vocab_size", d.vocab_size},
                    {"embed_size", d.embed_size},
                    {"hidden_size", d.hidden_size},
                    {"feature_dim", d.feature_dim},
                    {"frame_budget", d.frame_budget}};
  header["config"] = config_json(c.config);
  header["reconstructor"] =
      c.model.reconstructor ? json(std::string(kind_name(c.model.reconstructor->kind))) : json(nullptr);
  header["has_reconstructor_optimizer"] = c.reconstructor_opt.has_value();
  header["optimizer"] = {{"rho", c.decoder_opt.rho}, {"eps", c.decoder_opt.eps}};
  if (c.reconstructor_opt) {
    header["reconstructor_optimizer"] = {{"rho", c.reconstructor_opt->rho}, {"eps", c.reconstructor_opt->eps}};
  }
  const auto& words = c.vocab.words();
  header["vocabulary"] = std::vector<std::string>(words.begin() + kReservedTokens, words.end());
  header["epoch"] = c.epoch;
  json history = json::array();
  for (const EpochRecord& r : c.history) {
    history.push_back({{"epoch", r.epoch}, {"nll", r.nll}, {"rec_loss", r.rec_loss}, {"val_cider", r.val_cider}});
  }
  header["history"] = history;
  json manifest = json::array();
  const auto tensors = tensor_list(c);
  for (const NamedTensor& t : tensors) manifest.push_back({{"name", t.name}, {"shape", t.tensor->shape()}});
  header["tensors"] = manifest;

  const std::string text = header.dump();
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  for (const NamedTensor& t : tensors)
    for (double v : t.tensor->values()) put<double>(out, v);
  return out;
}

ModelCheckpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError("corrupt checkpoint: bad magic");
  }
  std::size_t pos = 4;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = take<std::uint64_t>(bytes, pos);
  if (bytes.size() - pos < header_len) throw CheckpointError("corrupt checkpoint: truncated header");
  ModelCheckpoint c;
  std::vector<std::pair<std::string, Shape>> manifest;
  try {
    const json h = json::parse(bytes.substr(pos, header_len));
    pos += header_len;
    c.stage = h.at("stage").get<int>();
    const json& d = h.at("dims");
    c.model.dims = {d.at("vocab_size").get<std::size_t>(), d.at("embed_size").get<std::size_t>(),
                    d.at("hidden_size").get<std::size_t>(), d.at("feature_dim").get<std::size_t>(),
                    d.at("frame_budget").get<std::size_t>()};
    c.model.dims.validate();
    c.config = config_from_json(h.at("config"));
    c.vocab = Vocabulary::from_words(h.at("vocabulary").get<std::vector<std::string>>());
    if (c.vocab.size() != c.model.dims.vocab_size) throw CheckpointError("corrupt checkpoint: vocabulary size");
    c.epoch = h.at("epoch").get<std::size_t>();
    for (const json& r : h.at("history")) {
      c.history.push_back({r.at("epoch").get<std::size_t>(), r.at("nll").get<double>(),
                           r.at("rec_loss").get<double>(), r.at("val_cider").get<double>()});
    }
    c.model.decoder = DecoderParams::zeros(c.model.dims);
    c.decoder_opt = AdaDeltaState::for_params(c.model.decoder.refs(), h.at("optimizer").at("rho").get<double>(),
                                              h.at("optimizer").at("eps").get<double>());
    if (!h.at("reconstructor").is_null()) {
      const auto kind = h.at("reconstructor").get<std::string>();
      if (kind != "global" && kind != "local") throw CheckpointError("corrupt checkpoint: reconstructor kind");
      c.model.reconstructor = ReconstructorParams::zeros(
          kind == "global" ? ReconstructorKind::global : ReconstructorKind::local, c.model.dims);
    }
    if (h.at("has_reconstructor_optimizer").get<bool>()) {
      if (!c.model.reconstructor) throw CheckpointError("corrupt checkpoint: optimizer without reconstructor");
      const json& o = h.at("reconstructor_optimizer");
      c.reconstructor_opt = AdaDeltaState::for_params(c.model.reconstructor->refs(), o.at("rho").get<double>(),
                                                      o.at("eps").get<double>());
    }
    for (const json& t : h.at("tensors")) manifest.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<Shape>());
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  } catch (const DataError& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  } catch (const DimensionError& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }

  auto tensors = tensor_list(c);
  if (tensors.size() != manifest.size()) throw CheckpointError("corrupt checkpoint: tensor count mismatch");
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    if (tensors[k].name != manifest[k].first || tensors[k].tensor->shape() != manifest[k].second) {
      throw CheckpointError("corrupt checkpoint: tensor '" + manifest[k].first + "' " +
                            shape_string(manifest[k].second) + " does not match expected '" + tensors[k].name +
                            "' " + tensors[k].tensor->shape_string());
    }
    for (double& v : tensors[k].tensor->values()) v = take<double>(bytes, pos);
  }
  if (pos != bytes.size()) throw CheckpointError("corrupt checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint) {
  write_file_atomic(path, serialize_checkpoint(checkpoint));
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const DataError& e) {
    throw CheckpointError(e.what());
  }
  return deserialize_checkpoint(bytes);
}

bool checkpoints_identical(const ModelCheckpoint& a, const ModelCheckpoint& b) {
  return serialize_checkpoint(a) == serialize_checkpoint(b);
}

}  // namespace recnet

#include "recnet/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "recnet/errors.hpp"
#include "recnet/io.hpp"

namespace recnet {

Tokens tokenize(std::string_view sentence) {
  std::string cleaned;
  cleaned.reserve(sentence.size());
  for (char ch : sentence) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::ispunct(c)) continue;
    cleaned.push_back(c < 128 ? static_cast<char>(std::tolower(c)) : ch);
  }
  Tokens tokens;
  std::istringstream in(cleaned);
  std::string word;
  while (tokens.size() < kMaxCaptionWords && in >> word) tokens.push_back(word);
  if (tokens.empty()) throw DataError("empty caption");
  return tokens;
}

std::span<const TokenId> TokenSequence::words() const {
  if (ids.size() < 2) return {};
  std::size_t end = ids.size();
  while (end > 0 && ids[end - 1] == kPad) --end;
  if (end < 2) return {};
  return std::span<const TokenId>(ids).subspan(1, end - 2);
}

void TokenSequence::validate(std::size_t vocab_size) const {
  if (ids.size() < 2 || ids.front() != kBos || ids.back() != kEos) {
    throw DataError("caption must start with BOS and end with EOS");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab_size) {
      throw DataError("token id " + std::to_string(ids[i]) + " out of range for vocabulary of size " +
                      std::to_string(vocab_size));
    }
    const bool inner = i > 0 && i + 1 < ids.size();
    if (inner && (ids[i] == kBos || ids[i] == kEos || ids[i] == kPad)) {
      throw DataError("caption contains a marker token inside the sentence");
    }
  }
  if (ids.size() - 2 > kMaxCaptionWords) {
    throw DataError("caption has " + std::to_string(ids.size() - 2) + " words, limit is " +
                    std::to_string(kMaxCaptionWords));
  }
}

TokenSequence make_sequence(std::span<const TokenId> words) {
  TokenSequence seq;
  seq.ids.reserve(words.size() + 2);
  seq.ids.push_back(kBos);
  seq.ids.insert(seq.ids.end(), words.begin(), words.end());
  seq.ids.push_back(kEos);
  return seq;
}

Vocabulary::Vocabulary() {
  for (const char* w : {"<pad>", "<bos>", "<eos>", "<unk>"}) add(w);
}

void Vocabulary::add(std::string word) {
  if (index_.contains(word)) throw DataError("duplicate vocabulary word '" + word + "'");
  index_.emplace(word, static_cast<TokenId>(words_.size()));
  words_.push_back(std::move(word));
}

Vocabulary Vocabulary::build(std::span<const Tokens> corpus, std::size_t min_count) {
  if (min_count < 1) throw ConfigError("min_count must be at least 1");
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const Tokens& sentence : corpus)
    for (const std::string& w : sentence) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [w, c] : counts)
    if (c >= min_count) kept.emplace_back(w, c);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (auto& [w, c] : kept) vocab.add(w);
  return vocab;
}

Vocabulary Vocabulary::from_words(std::span<const std::string> words) {
  Vocabulary vocab;
  for (const std::string& w : words) {
    if (w.empty()) throw DataError("empty vocabulary entry");
    vocab.add(w);
  }
  return vocab;
}

bool Vocabulary::contains(std::string_view word) const {
  return index_.contains(std::string(word));
}

TokenId Vocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(TokenId id) const {
  if (id >= words_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                    std::to_string(words_.size()));
  }
  return words_[id];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(id(t));
  return ids;
}

Tokens Vocabulary::decode(std::span<const TokenId> ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(word(i));
  return out;
}

TokenSequence Vocabulary::encode_caption(std::span<const std::string> tokens) const {
  if (tokens.empty()) throw DataError("empty caption");
  const std::size_t n = std::min(tokens.size(), kMaxCaptionWords);
  return make_sequence(encode(tokens.subspan(0, n)));
}

Tokens Vocabulary::caption_words(const TokenSequence& caption) const {
  Tokens out;
  for (TokenId i : caption.ids) {
    if (i == kPad || i == kBos || i == kEos) continue;
    out.push_back(word(i));
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::string text;
  for (std::size_t i = kReservedTokens; i < words_.size(); ++i) {
    text += words_[i];
    text += '\n';
  }
  write_file_atomic(path, text);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw DataError("empty line in vocabulary file " + path.string());
    words.push_back(line);
  }
  return from_words(words);
}

}  // namespace recnet

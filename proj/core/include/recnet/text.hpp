#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace recnet {

using TokenId = std::uint32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr std::size_t kReservedTokens = 4;
inline constexpr std::size_t kMaxCaptionWords = 30;

using Tokens = std::vector<std::string>;

// Lowercases, strips ASCII punctuation, splits on whitespace and keeps at most
// kMaxCaptionWords tokens. Throws DataError("empty caption") when nothing is left.
Tokens tokenize(std::string_view sentence);

// A caption as vocabulary ids: BOS, words..., EOS.
struct TokenSequence {
  std::vector<TokenId> ids;

  std::size_t size() const { return ids.size(); }
  // Ids between the markers.
  std::span<const TokenId> words() const;
  // Throws DataError unless the sequence is BOS w... EOS with every id below
  // vocab_size, no inner markers, and at most kMaxCaptionWords words.
  void validate(std::size_t vocab_size) const;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

TokenSequence make_sequence(std::span<const TokenId> words);

class Vocabulary {
 public:
  // Only the four reserved tokens.
  Vocabulary();

  // Words with frequency >= min_count, ordered by descending frequency then
  // lexicographically, after the reserved ids.
  static Vocabulary build(std::span<const Tokens> corpus, std::size_t min_count = 1);
  // Non-reserved words in id order (id = kReservedTokens + position).
  static Vocabulary from_words(std::span<const std::string> words);

  std::size_t size() const { return words_.size(); }
  bool contains(std::string_view word) const;
  // kUnk for out-of-vocabulary words.
  TokenId id(std::string_view word) const;
  const std::string& word(TokenId id) const;
  // All words including the reserved ones, indexed by id.
  const std::vector<std::string>& words() const { return words_; }

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  Tokens decode(std::span<const TokenId> ids) const;
  TokenSequence encode_caption(std::span<const std::string> tokens) const;
  // Words of a caption with markers and padding removed.
  Tokens caption_words(const TokenSequence& caption) const;

  // One non-reserved word per line; line index + 4 is the id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  void add(std::string word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace recnet

#pragma once

// Character-level one-hot encoding for SMILES / InChI strings.
//
// A vocabulary is the sorted set of distinct characters seen in a corpus
// (byte order), optionally extended with an UNK slot that always occupies the
// last column.  encode_onehot maps a string to a zero-padded [max_len x V]
// matrix; decode_onehot inverts it (UNK columns render as '?').

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sinet/errors.hpp"
#include "sinet/tensor.hpp"

namespace sinet {

struct Vocabulary {
  std::string chars;    // distinct, ascending byte order
  bool has_unk = false;

  int size() const { return static_cast<int>(chars.size()) + (has_unk ? 1 : 0); }

  int unk_index() const {
    if (!has_unk) throw UsageError("Vocabulary::unk_index: vocabulary has no UNK slot");
    return static_cast<int>(chars.size());
  }

  std::optional<int> find(char c) const {
    const auto it = std::lower_bound(chars.begin(), chars.end(), c);
    if (it == chars.end() || *it != c) return std::nullopt;
    return static_cast<int>(it - chars.begin());
  }

  bool operator==(const Vocabulary&) const = default;
};

// Visible ASCII only: SMILES and InChI are plain-text line notations.
inline bool vocab_char_ok(unsigned char c) { return c >= 33 && c <= 126; }

inline Vocabulary build_vocabulary(const std::vector<std::string>& corpus, bool reserve_unk) {
  if (corpus.empty()) throw DataError("build_vocabulary: empty corpus");
  bool seen[256] = {};
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    for (const char ch : corpus[s]) {
      const unsigned char c = static_cast<unsigned char>(ch);
      if (!vocab_char_ok(c)) {
        std::ostringstream msg;
        msg << "build_vocabulary: unsupported character code " << static_cast<int>(c)
            << " in string " << s << " (only visible ASCII is allowed)";
        throw DataError(msg.str());
      }
      seen[c] = true;
    }
  }
  Vocabulary v;
  for (int c = 33; c <= 126; ++c)
    if (seen[c]) v.chars.push_back(static_cast<char>(c));
  if (v.chars.empty()) throw DataError("build_vocabulary: corpus contains no characters");
  v.has_unk = reserve_unk;
  return v;
}

enum class OverflowPolicy { Reject, Truncate };
enum class UnknownPolicy { Reject, MapToUnk };

inline std::string to_string(OverflowPolicy p) {
  return p == OverflowPolicy::Reject ? "reject" : "truncate";
}
inline std::string to_string(UnknownPolicy p) {
  return p == UnknownPolicy::Reject ? "reject" : "map";
}

struct EncoderSpec {
  Vocabulary vocab;
  int max_len = 0;
  OverflowPolicy overflow = OverflowPolicy::Reject;
  UnknownPolicy unknown = UnknownPolicy::Reject;

  void validate() const {
    if (max_len < 1)
      throw UsageError("EncoderSpec: max_len must be >= 1, got " + std::to_string(max_len));
    if (vocab.size() < 1) throw UsageError("EncoderSpec: empty vocabulary");
    if (unknown == UnknownPolicy::MapToUnk && !vocab.has_unk)
      throw UsageError("EncoderSpec: unknown policy 'map' requires a vocabulary with an UNK slot");
  }
};

// One-hot [max_len x V] matrix.  Row t is the indicator of character t; rows
// past the end of the string are all zero (padding).
inline Tensor encode_onehot(std::string_view s, const EncoderSpec& spec) {
  spec.validate();
  if (s.empty()) throw DataError("encode_onehot: empty string");
  if (static_cast<int>(s.size()) > spec.max_len) {
    if (spec.overflow == OverflowPolicy::Reject)
      throw DataError("encode_onehot: string of length " + std::to_string(s.size()) +
                      " exceeds max_len " + std::to_string(spec.max_len) + ": \"" +
                      std::string(s) + "\"");
    s = s.substr(0, static_cast<std::size_t>(spec.max_len));
  }
  const int V = spec.vocab.size();
  std::vector<double> data(static_cast<std::size_t>(spec.max_len) * V, 0.0);
  for (std::size_t t = 0; t < s.size(); ++t) {
    const char c = s[t];
    int idx;
    if (const auto found = spec.vocab.find(c)) {
      idx = *found;
    } else if (spec.unknown == UnknownPolicy::MapToUnk) {
      idx = spec.vocab.unk_index();
    } else {
      throw DataError(std::string("encode_onehot: unknown character '") + c + "' at offset " +
                      std::to_string(t));
    }
    data[t * V + idx] = 1.0;
  }
  return Tensor(Shape{spec.max_len, V}, std::move(data));
}

// Inverse of encode_onehot.  Every entry must be exactly 0 or 1, every row
// must contain at most one 1, and zero rows may appear only as a trailing
// padding block.  An UNK column decodes to '?'.
inline std::string decode_onehot(const Tensor& matrix, const EncoderSpec& spec) {
  spec.validate();
  if (matrix.rank() != 2 || matrix.dim(0) != spec.max_len || matrix.dim(1) != spec.vocab.size())
    throw DimensionError("decode_onehot: expected [" + std::to_string(spec.max_len) + "x" +
                         std::to_string(spec.vocab.size()) + "], got " +
                         shape_str(matrix.shape()));
  const std::vector<double>& data = matrix.data();
  const int V = spec.vocab.size();
  std::string out;
  bool in_padding = false;
  for (int t = 0; t < spec.max_len; ++t) {
    int hot = -1;
    int ones = 0;
    for (int c = 0; c < V; ++c) {
      const double v = data[static_cast<std::size_t>(t) * V + c];
      if (v == 0.0) continue;
      if (v != 1.0)
        throw FormatError("decode_onehot: row " + std::to_string(t) + " has non-binary value " +
                          std::to_string(v));
      ++ones;
      if (hot < 0) hot = c;
    }
    if (ones > 1)
      throw FormatError("decode_onehot: row " + std::to_string(t) + " sums to " +
                        std::to_string(ones));
    if (ones == 0) {
      in_padding = true;
      continue;
    }
    if (in_padding)
      throw FormatError("decode_onehot: row " + std::to_string(t) +
                        " carries data after a zero padding row");
    out.push_back(hot < static_cast<int>(spec.vocab.chars.size()) ? spec.vocab.chars[hot] : '?');
  }
  if (out.empty()) throw DataError("decode_onehot: all-zero matrix decodes to an empty string");
  return out;
}

// ---- vocabulary file format: one character per line, "<UNK>" last ----

inline void write_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_vocabulary: cannot open " + path);
  for (const char c : vocab.chars) out << c << '\n';
  if (vocab.has_unk) out << "<UNK>" << '\n';
  if (!out) throw IoError("write_vocabulary: write failed for " + path);
}

inline Vocabulary read_vocabulary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_vocabulary: cannot open " + path);
  Vocabulary v;
  std::string line;
  std::size_t lineno = 0;
  bool saw_unk = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (saw_unk)
      throw FormatError("read_vocabulary: " + path + ":" + std::to_string(lineno) +
                        ": entries after <UNK> (UNK must be last)");
    if (line == "<UNK>") {
      saw_unk = true;
      continue;
    }
    if (line.size() != 1 || !vocab_char_ok(static_cast<unsigned char>(line[0])))
      throw FormatError("read_vocabulary: " + path + ":" + std::to_string(lineno) +
                        ": expected a single visible-ASCII character, got \"" + line + "\"");
    if (!v.chars.empty() && line[0] <= v.chars.back())
      throw FormatError("read_vocabulary: " + path + ":" + std::to_string(lineno) +
                        ": characters must be strictly ascending");
    v.chars.push_back(line[0]);
  }
  if (v.chars.empty()) throw FormatError("read_vocabulary: " + path + ": no characters");
  v.has_unk = saw_unk;
  return v;
}

}  // namespace sinet

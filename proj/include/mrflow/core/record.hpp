#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mrflow {

// One intermediate key/value pair. Both halves are arbitrary bytes.
struct Record {
  std::string key;
  std::string value;

  friend bool operator==(const Record&, const Record&) = default;
};

// Bytewise key order used everywhere records are sorted or merged.
inline bool key_less(const Record& a, const Record& b) {
  return std::string_view(a.key) < std::string_view(b.key);
}

// Wire layout: [u32 LE key_len][key][u32 LE val_len][value].
namespace codec {

inline constexpr std::size_t kHeaderBytes = 4;

std::size_t encoded_size(const Record& rec);
std::size_t encoded_size(std::string_view key, std::string_view value);

void append(std::string& out, const Record& rec);
void append(std::string& out, std::string_view key, std::string_view value);
std::string encode(const Record& rec);
std::string encode_all(const std::vector<Record>& records);

// Decodes the whole buffer greedily; throws TruncatedRecord / OversizeLength.
std::vector<Record> decode_all(std::string_view bytes);

// Incremental decoder over a buffer that may end mid-record. `try_next`
// returns nullopt when the remaining bytes do not hold a complete record;
// `consumed()` tells the caller how much of the buffer is spoken for.
class Decoder {
 public:
  explicit Decoder(std::string_view bytes) : bytes_(bytes) {}

  std::optional<Record> try_next();
  // Same as try_next, but treats a partial tail as an error.
  std::optional<Record> next_strict();

  std::size_t consumed() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

// Total encoded length of the record starting at `bytes[0]`, or nullopt if
// the header itself is incomplete.
std::optional<std::uint64_t> peek_record_length(std::string_view bytes);

}  // namespace codec
}  // namespace mrflow

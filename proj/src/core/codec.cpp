#include <limits>

#include "mrflow/core/error.hpp"
#include "mrflow/core/record.hpp"

namespace mrflow::codec {
namespace {

void put_u32(std::string& out, std::size_t n) {
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::kOversizeLength, "field of " + std::to_string(n) + " bytes exceeds 32-bit length");
  }
  const auto v = static_cast<std::uint32_t>(n);
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.append(b, 4);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + at);
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::size_t encoded_size(std::string_view key, std::string_view value) {
  return 2 * kHeaderBytes + key.size() + value.size();
}

std::size_t encoded_size(const Record& rec) { return encoded_size(rec.key, rec.value); }

void append(std::string& out, std::string_view key, std::string_view value) {
  put_u32(out, key.size());
  out.append(key);
  put_u32(out, value.size());
  out.append(value);
}

void append(std::string& out, const Record& rec) { append(out, rec.key, rec.value); }

std::string encode(const Record& rec) {
  std::string out;
  out.reserve(encoded_size(rec));
  append(out, rec);
  return out;
}

std::string encode_all(const std::vector<Record>& records) {
  std::string out;
  for (const auto& r : records) append(out, r);
  return out;
}

std::vector<Record> decode_all(std::string_view bytes) {
  std::vector<Record> out;
  Decoder dec(bytes);
  while (auto rec = dec.next_strict()) out.push_back(std::move(*rec));
  return out;
}

std::optional<std::uint64_t> peek_record_length(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) return std::nullopt;
  const std::uint64_t key_len = get_u32(bytes, 0);
  if (bytes.size() < kHeaderBytes + key_len + kHeaderBytes) return std::nullopt;
  const std::uint64_t val_len = get_u32(bytes, kHeaderBytes + key_len);
  return 2 * kHeaderBytes + key_len + val_len;
}

std::optional<Record> Decoder::try_next() {
  const std::string_view rest = bytes_.substr(pos_);
  const auto total = peek_record_length(rest);
  if (!total || *total > rest.size()) return std::nullopt;
  const std::uint32_t key_len = get_u32(rest, 0);
  const std::uint32_t val_len = get_u32(rest, kHeaderBytes + key_len);
  Record rec{std::string(rest.substr(kHeaderBytes, key_len)),
             std::string(rest.substr(2 * kHeaderBytes + key_len, val_len))};
  pos_ += *total;
  return rec;
}

std::optional<Record> Decoder::next_strict() {
  if (at_end()) return std::nullopt;
  const std::string_view rest = bytes_.substr(pos_);
  if (rest.size() < kHeaderBytes) {
    throw Error(Errc::kTruncatedRecord, "stream ends inside a key length header at offset " + std::to_string(pos_));
  }
  const std::uint64_t key_len = get_u32(rest, 0);
  if (key_len > rest.size() - kHeaderBytes) {
    throw Error(Errc::kOversizeLength, "declared key length " + std::to_string(key_len) +
                                           " exceeds remaining stream at offset " + std::to_string(pos_));
  }
  if (rest.size() - kHeaderBytes - key_len < kHeaderBytes) {
    throw Error(Errc::kTruncatedRecord, "stream ends inside a value length header at offset " + std::to_string(pos_));
  }
  const std::uint64_t val_len = get_u32(rest, kHeaderBytes + key_len);
  if (val_len > rest.size() - 2 * kHeaderBytes - key_len) {
    throw Error(Errc::kOversizeLength, "declared value length " + std::to_string(val_len) +
                                           " exceeds remaining stream at offset " + std::to_string(pos_));
  }
  auto rec = try_next();
  return rec;
}

}  // namespace mrflow::codec

#include "mrflow/core/text_format.hpp"

#include "mrflow/core/error.hpp"

namespace mrflow {

bool is_valid_utf8(std::string_view bytes) {
  const auto* s = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char c = s[i];
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len = 0;
    char32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t j = 1; j < len; ++j) {
      if ((s[i + j] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (s[i + j] & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

void append_final_record(std::string& out, const Record& rec) {
  if (!is_valid_utf8(rec.key) || !is_valid_utf8(rec.value)) {
    throw Error(Errc::kNonTextRecord, "record is not valid UTF-8 and cannot be written as text");
  }
  out.reserve(out.size() + rec.key.size() + rec.value.size() + 2);
  out.append(rec.key);
  out.push_back('\t');
  out.append(rec.value);
  out.push_back('\n');
}

std::string format_final_record(const Record& rec) {
  std::string out;
  append_final_record(out, rec);
  return out;
}

}  // namespace mrflow

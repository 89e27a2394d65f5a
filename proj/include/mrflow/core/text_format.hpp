#pragma once

#include <string>
#include <string_view>

#include "mrflow/core/record.hpp"

namespace mrflow {

// Strict UTF-8 check (rejects overlongs, surrogates and code points > U+10FFFF).
bool is_valid_utf8(std::string_view bytes);

// `key<TAB>value<LF>`; throws NonTextRecord when either half is not UTF-8.
std::string format_final_record(const Record& rec);
void append_final_record(std::string& out, const Record& rec);

}  // namespace mrflow

#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "mrflow/core/record.hpp"

namespace mrflow {

// Pull-based stream of records.
class RecordSource {
 public:
  virtual ~RecordSource() = default;
  virtual std::optional<Record> next() = 0;
};

class VectorRecordSource final : public RecordSource {
 public:
  explicit VectorRecordSource(std::vector<Record> records) : records_(std::move(records)) {}

  std::optional<Record> next() override {
    if (pos_ == records_.size()) return std::nullopt;
    return std::move(records_[pos_++]);
  }

 private:
  std::vector<Record> records_;
  std::size_t pos_ = 0;
};

inline std::vector<Record> drain(RecordSource& source) {
  std::vector<Record> out;
  while (auto r = source.next()) out.push_back(std::move(*r));
  return out;
}

}  // namespace mrflow

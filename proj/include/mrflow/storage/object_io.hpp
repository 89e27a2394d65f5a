#pragma once

#include <optional>
#include <string>

#include "mrflow/core/record_stream.hpp"
#include "mrflow/storage/object_store.hpp"

namespace mrflow::storage {

// Reads [range.start, range.end) of an object in windows of at most
// `window_bytes`. The range end is clamped to the object size.
class RangeReader {
 public:
  RangeReader(ObjectStore& store, ObjectPath path, ByteRange range, std::uint64_t window_bytes);

  std::optional<std::string> next_window();
  std::uint64_t position() const { return pos_; }
  std::uint64_t end() const { return end_; }

 private:
  ObjectStore& store_;
  ObjectPath path_;
  std::uint64_t pos_;
  std::uint64_t end_;
  std::uint64_t window_;
};

// Decodes a whole record-codec object as a stream, holding at most one window
// plus one partially read record in memory.
class ObjectRecordSource final : public RecordSource {
 public:
  ObjectRecordSource(ObjectStore& store, ObjectPath path, std::uint64_t window_bytes);

  std::optional<Record> next() override;

  // Largest number of bytes held in the decode buffer so far.
  std::uint64_t peak_buffered() const { return peak_; }

 private:
  ObjectPath path_;
  RangeReader reader_;
  std::string buffer_;
  std::size_t offset_ = 0;
  std::uint64_t peak_ = 0;
};

// Buffers writes and uploads them as one object: a single put when the total
// fits in one part, otherwise a multipart upload with parts of exactly
// `part_bytes` (the last part may be shorter).
class ObjectWriter {
 public:
  ObjectWriter(ObjectStore& store, ObjectPath path, std::uint64_t part_bytes);
  ObjectWriter(const ObjectWriter&) = delete;
  ObjectWriter& operator=(const ObjectWriter&) = delete;
  // Destroying an unclosed writer abandons the upload; nothing becomes visible.
  ~ObjectWriter() = default;

  void write(std::string_view bytes);
  void write_record(const Record& rec);
  void close();

  std::uint64_t bytes_written() const { return written_; }
  std::uint64_t peak_buffered() const { return peak_; }
  bool used_multipart() const { return multipart_.has_value(); }
  const ObjectPath& path() const { return path_; }

 private:
  void flush_full_parts();

  ObjectStore& store_;
  ObjectPath path_;
  std::uint64_t part_bytes_;
  std::string buffer_;
  std::optional<MultipartWriter> multipart_;
  std::uint64_t written_ = 0;
  std::uint64_t peak_ = 0;
  bool closed_ = false;
};

}  // namespace mrflow::storage

#include "mrflow/storage/object_io.hpp"

#include <algorithm>
#include <cstdint>

#include "mrflow/core/error.hpp"

namespace mrflow::storage {

RangeReader::RangeReader(ObjectStore& store, ObjectPath path, ByteRange range, std::uint64_t window_bytes)
    : store_(store), path_(std::move(path)), pos_(range.start), end_(range.end), window_(std::max<std::uint64_t>(1, window_bytes)) {}

std::optional<std::string> RangeReader::next_window() {
  if (pos_ >= end_) return std::nullopt;
  const std::uint64_t want_end = std::min(end_, pos_ + window_);
  const std::uint64_t start = pos_;
  std::string bytes;
  try {
    bytes = store_.get_object_range(path_, ByteRange{pos_, want_end});
  } catch (const Error& e) {
    if (e.code() != Errc::kInvalidRange) throw;
    // Object is shorter than the requested range.
    end_ = pos_;
    return std::nullopt;
  }
  if (bytes.empty()) {
    end_ = pos_;
    return std::nullopt;
  }
  pos_ += bytes.size();
  if (bytes.size() < want_end - start) end_ = pos_;  // clamped at object end
  return bytes;
}

ObjectRecordSource::ObjectRecordSource(ObjectStore& store, ObjectPath path, std::uint64_t window_bytes)
    : path_(path), reader_(store, std::move(path), ByteRange{0, UINT64_MAX}, window_bytes) {}

std::optional<Record> ObjectRecordSource::next() {
  while (true) {
    codec::Decoder dec(std::string_view(buffer_).substr(offset_));
    if (auto rec = dec.try_next()) {
      offset_ += dec.consumed();
      return rec;
    }
    auto window = reader_.next_window();
    if (!window) {
      if (offset_ < buffer_.size()) {
        // Surface the precise codec error for the dangling tail.
        codec::decode_all(std::string_view(buffer_).substr(offset_));
        throw Error(Errc::kTruncatedRecord, "object " + path_.to_string() + " ends mid-record");
      }
      return std::nullopt;
    }
    buffer_.erase(0, offset_);
    offset_ = 0;
    buffer_.append(*window);
    peak_ = std::max<std::uint64_t>(peak_, buffer_.size());
  }
}

ObjectWriter::ObjectWriter(ObjectStore& store, ObjectPath path, std::uint64_t part_bytes)
    : store_(store), path_(std::move(path)), part_bytes_(std::max<std::uint64_t>(1, part_bytes)) {}

void ObjectWriter::write(std::string_view bytes) {
  if (closed_) throw Error(Errc::kAbortedUpload, "write after close on " + path_.to_string());
  buffer_.append(bytes);
  written_ += bytes.size();
  peak_ = std::max<std::uint64_t>(peak_, buffer_.size());
  flush_full_parts();
}

void ObjectWriter::write_record(const Record& rec) {
  if (closed_) throw Error(Errc::kAbortedUpload, "write after close on " + path_.to_string());
  const auto before = buffer_.size();
  codec::append(buffer_, rec);
  written_ += buffer_.size() - before;
  peak_ = std::max<std::uint64_t>(peak_, buffer_.size());
  flush_full_parts();
}

void ObjectWriter::flush_full_parts() {
  if (buffer_.size() <= part_bytes_) return;
  if (!multipart_) multipart_.emplace(store_.begin_multipart(path_, part_bytes_));
  std::size_t off = 0;
  while (buffer_.size() - off > part_bytes_) {
    multipart_->upload_part(std::string_view(buffer_).substr(off, part_bytes_));
    off += part_bytes_;
  }
  buffer_.erase(0, off);
}

void ObjectWriter::close() {
  if (closed_) return;
  closed_ = true;
  if (multipart_) {
    if (!buffer_.empty()) multipart_->upload_part(buffer_);
    multipart_->complete();
  } else {
    store_.put_object(path_, buffer_);
  }
  buffer_.clear();
  buffer_.shrink_to_fit();
}

}  // namespace mrflow::storage

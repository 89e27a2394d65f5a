#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "mrflow/core/error.hpp"
#include "mrflow/storage/local_store.hpp"
#include "mrflow/storage/memory_store.hpp"
#include "mrflow/storage/object_io.hpp"

using namespace mrflow;
using namespace mrflow::storage;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return Errc::kInvalidArgument;
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mrflow-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::string> keys_of(const std::vector<ObjectInfo>& infos) {
  std::vector<std::string> keys;
  for (const auto& i : infos) keys.push_back(i.path.key);
  return keys;
}

}  // namespace

template <typename Store>
class ObjectStoreContract : public ::testing::Test {
 protected:
  ObjectStoreContract() : store_(make()) {}

  static std::unique_ptr<ObjectStore> make() {
    if constexpr (std::is_same_v<Store, LocalObjectStore>) {
      return std::make_unique<LocalObjectStore>(fresh_dir("local"));
    } else {
      return std::make_unique<MemoryObjectStore>();
    }
  }

  ObjectStore& store() { return *store_; }

 private:
  std::unique_ptr<ObjectStore> store_;
};

using Backends = ::testing::Types<LocalObjectStore, MemoryObjectStore>;
TYPED_TEST_SUITE(ObjectStoreContract, Backends);

TYPED_TEST(ObjectStoreContract, PutThenRangedGet) {
  auto& s = this->store();
  s.put_object({"b", "x"}, "abc");
  EXPECT_EQ(s.get_object_range({"b", "x"}, {0, 3}), "abc");
  s.put_object({"b", "x"}, "second");
  EXPECT_EQ(get_object(s, {"b", "x"}), "second");

  s.put_object({"b", "h"}, "hello");
  EXPECT_EQ(s.get_object_range({"b", "h"}, {1, 4}), "ell");
  EXPECT_EQ(s.get_object_range({"b", "h"}, {3, 99}), "lo");
  EXPECT_EQ(code_of([&] { s.get_object_range({"b", "h"}, {5, 6}); }), Errc::kInvalidRange);
  EXPECT_EQ(code_of([&] { s.get_object_range({"b", "nope"}, {0, 1}); }), Errc::kNoSuchObject);
}

TYPED_TEST(ObjectStoreContract, ObjectSize) {
  auto& s = this->store();
  s.put_object({"b", "h"}, "hello");
  s.put_object({"b", "empty"}, "");
  EXPECT_EQ(s.object_size({"b", "h"}), 5u);
  EXPECT_EQ(s.object_size({"b", "empty"}), 0u);
  EXPECT_EQ(get_object(s, {"b", "empty"}), "");
  EXPECT_EQ(code_of([&] { s.object_size({"b", "missing"}); }), Errc::kNoSuchObject);
}

TYPED_TEST(ObjectStoreContract, ListingIsPrefixFilteredAndBytewise) {
  auto& s = this->store();
  for (const char* k : {"a/1", "a/2", "b/1", "a/10", "ab", "a/sub/x"}) s.put_object({"b", k}, k);
  s.put_object({"other", "a/1"}, "elsewhere");

  EXPECT_EQ(keys_of(s.list_objects(ObjectPath::prefix("b", "a/"))),
            (std::vector<std::string>{"a/1", "a/10", "a/2", "a/sub/x"}));
  EXPECT_EQ(keys_of(s.list_objects(ObjectPath::prefix("b", "a"))),
            (std::vector<std::string>{"a/1", "a/10", "a/2", "a/sub/x", "ab"}));
  EXPECT_TRUE(s.list_objects(ObjectPath::prefix("b", "zzz/")).empty());
  EXPECT_TRUE(s.list_objects(ObjectPath::prefix("nobucket", "")).empty());

  const auto listed = s.list_objects(ObjectPath::prefix("b", ""));
  EXPECT_EQ(listed.size(), 6u);
  EXPECT_EQ(listed, s.list_objects(ObjectPath::prefix("b", "")));
  for (const auto& info : listed) EXPECT_EQ(info.size, info.path.key.size());
}

TYPED_TEST(ObjectStoreContract, MultipartConcatenatesParts) {
  auto& s = this->store();
  const std::vector<std::string> parts = {"aaaa", "bb"};
  multipart_put(s, {"b", "mp"}, parts, 4);
  EXPECT_EQ(get_object(s, {"b", "mp"}), "aaaabb");
}

TYPED_TEST(ObjectStoreContract, MultipartEnforcesMinimumPartSize) {
  auto& s = this->store();
  const std::vector<std::string> parts = {"aa", "bb"};
  EXPECT_EQ(code_of([&] { multipart_put(s, {"b", "small"}, parts, 4); }), Errc::kPartTooSmall);
  EXPECT_EQ(code_of([&] { s.object_size({"b", "small"}); }), Errc::kNoSuchObject);
}

TYPED_TEST(ObjectStoreContract, AbortedUploadLeavesNoObject) {
  auto& s = this->store();
  {
    auto writer = s.begin_multipart({"b", "aborted"}, 4);
    writer.upload_part("aaaa");
    EXPECT_TRUE(s.list_objects(ObjectPath::prefix("b", "")).empty());
    writer.abort();
    EXPECT_EQ(code_of([&] { writer.upload_part("more"); }), Errc::kAbortedUpload);
  }
  EXPECT_EQ(code_of([&] { s.object_size({"b", "aborted"}); }), Errc::kNoSuchObject);
  {
    auto writer = s.begin_multipart({"b", "dropped"}, 4);
    writer.upload_part("aaaa");
  }
  EXPECT_EQ(code_of([&] { s.object_size({"b", "dropped"}); }), Errc::kNoSuchObject);
  EXPECT_TRUE(s.list_objects(ObjectPath::prefix("b", "")).empty());
}

TYPED_TEST(ObjectStoreContract, DeleteIsIdempotent) {
  auto& s = this->store();
  s.put_object({"b", "d"}, "x");
  s.delete_object({"b", "d"});
  s.delete_object({"b", "d"});
  EXPECT_TRUE(s.list_objects(ObjectPath::prefix("b", "")).empty());
}

TYPED_TEST(ObjectStoreContract, ConcurrentOverwritesNeverTear) {
  auto& s = this->store();
  const std::string a(64 * 1024, 'a'), b(64 * 1024, 'b');
  s.put_object({"b", "hot"}, a);
  std::atomic<bool> stop{false};
  std::thread writer([&] {
    for (int i = 0; i < 50; ++i) s.put_object({"b", "hot"}, i % 2 ? a : b);
    stop = true;
  });
  while (!stop) {
    const auto got = get_object(s, {"b", "hot"});
    ASSERT_TRUE(got == a || got == b);
  }
  writer.join();
}

TYPED_TEST(ObjectStoreContract, WriterUsesSinglePutForSmallObjects) {
  auto& s = this->store();
  ObjectWriter small(s, {"b", "small"}, 16);
  small.write("0123456789");
  small.close();
  EXPECT_FALSE(small.used_multipart());
  EXPECT_EQ(get_object(s, {"b", "small"}), "0123456789");

  ObjectWriter big(s, {"b", "big"}, 16);
  std::string expected;
  for (int i = 0; i < 10; ++i) {
    const auto chunk = std::string(7, static_cast<char>('a' + i));
    big.write(chunk);
    expected += chunk;
  }
  big.close();
  EXPECT_TRUE(big.used_multipart());
  EXPECT_LE(big.peak_buffered(), 16u + 7u);
  EXPECT_EQ(get_object(s, {"b", "big"}), expected);
}

TYPED_TEST(ObjectStoreContract, RangeReaderWindowsAndClamps) {
  auto& s = this->store();
  s.put_object({"b", "r"}, "abcdefghij");
  RangeReader reader(s, {"b", "r"}, {2, 100}, 3);
  std::vector<std::string> windows;
  while (auto w = reader.next_window()) windows.push_back(*w);
  EXPECT_EQ(windows, (std::vector<std::string>{"cde", "fgh", "ij"}));
}

TYPED_TEST(ObjectStoreContract, RecordSourceStreamsCodecObjects) {
  auto& s = this->store();
  std::vector<Record> recs;
  for (int i = 0; i < 200; ++i) recs.push_back({"key" + std::to_string(i), std::string(static_cast<std::size_t>(i), 'v')});
  s.put_object({"b", "recs"}, codec::encode_all(recs));
  ObjectRecordSource source(s, {"b", "recs"}, 64);
  EXPECT_EQ(drain(source), recs);

  s.put_object({"b", "empty"}, "");
  ObjectRecordSource empty(s, {"b", "empty"}, 64);
  EXPECT_FALSE(empty.next().has_value());

  const auto bytes = codec::encode_all(recs);
  s.put_object({"b", "cut"}, std::string_view(bytes).substr(0, bytes.size() - 3));
  ObjectRecordSource cut(s, {"b", "cut"}, 64);
  EXPECT_EQ(code_of([&] { drain(cut); }), Errc::kOversizeLength);

  s.put_object({"b", "stub"}, std::string_view(bytes).substr(0, 2));
  ObjectRecordSource stub(s, {"b", "stub"}, 64);
  EXPECT_EQ(code_of([&] { drain(stub); }), Errc::kTruncatedRecord);
}

TEST(ObjectPath, Invariants) {
  EXPECT_THROW(ObjectPath("", "k"), Error);
  EXPECT_THROW(ObjectPath("b", ""), Error);
  EXPECT_THROW(ObjectPath("b", "/k"), Error);
  EXPECT_EQ(join_key("a/", "/b"), "a/b");
  EXPECT_EQ(join_key("", "b"), "b");
  EXPECT_EQ(join_key("a", "b"), "a/b");
}

TEST(LocalObjectStore, LayoutIsRootBucketKey) {
  const auto root = fresh_dir("layout");
  LocalObjectStore s(root);
  s.put_object({"bkt", "dir/file.txt"}, "data");
  std::ifstream in(root / "bkt" / "dir" / "file.txt");
  std::string content;
  std::getline(in, content);
  EXPECT_EQ(content, "data");
}

TEST(LocalObjectStore, UnusableRootIsUnavailable) {
  const auto root = fresh_dir("unusable");
  std::ofstream(root / "plainfile") << "x";
  LocalObjectStore s(root / "plainfile");
  EXPECT_EQ(code_of([&] { s.put_object({"b", "k"}, "v"); }), Errc::kStoreUnavailable);
}

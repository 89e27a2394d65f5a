#include <gtest/gtest.h>

#include "mrflow/core/text_format.hpp"
#include "mrflow/finalizer/finalizer.hpp"
#include "mrflow/storage/object_io.hpp"
#include "test_support.hpp"
#include "worker_rig.hpp"

using namespace mrflow;
using namespace mrflow::storage;

namespace {

JobConfig final_config(const std::string& id, std::uint32_t mappers, std::uint32_t reducers) {
  JobConfig c;
  c.job_id = id;
  c.input_prefixes = {"in/"};
  c.output_prefix = "out/";
  c.num_mappers = mappers;
  c.num_reducers = reducers;
  c.run_finalizer = true;
  c.map_fn = {"wordcount_map", {}};
  if (reducers > 0) c.reduce_fn = FunctionRef{"sum_reduce", {}};
  c.input_buffer_bytes = 1 << 20;
  c.output_buffer_bytes = 1 << 20;
  c.multipart_part_bytes = 1 << 16;
  return c;
}

void put_output(ObjectStore& store, const std::string& name, const std::vector<Record>& records) {
  store.put_object(ObjectPath{"bkt", "out/" + name}, codec::encode_all(records));
}

bool final_exists(ObjectStore& store) {
  return test::code_of([&] { store.object_size(ObjectPath{"bkt", "out/final"}); }) != Errc::kNoSuchObject;
}

}  // namespace

TEST(TextFormat, Examples) {
  EXPECT_EQ(format_final_record({"a", "2"}), "a\t2\n");
  EXPECT_EQ(format_final_record({"", ""}), "\t\n");
  EXPECT_EQ(format_final_record({"caf\xc3\xa9", "1"}), "caf\xc3\xa9\t1\n");
  EXPECT_TRUE(is_valid_utf8("\xf0\x9f\x98\x80"));
  EXPECT_FALSE(is_valid_utf8("\xc0\xaf"));
  EXPECT_FALSE(is_valid_utf8("\xed\xa0\x80"));
  EXPECT_FALSE(is_valid_utf8("\xf4\x90\x80\x80"));
  EXPECT_FALSE(is_valid_utf8("\xe2\x82"));
  EXPECT_EQ(test::code_of([] { format_final_record({"\xff", "1"}); }), Errc::kNonTextRecord);
  EXPECT_EQ(test::code_of([] { format_final_record({"k", "\x80"}); }), Errc::kNonTextRecord);
}

TEST(RunFinalize, ConcatenatesReducersInOrder) {
  test::WorkerRig rig;
  rig.create_in(final_config("jf", 2, 3), JobPhase::kFinalizing);
  put_output(rig.store, "reduce-0", {{"b", "1"}});
  put_output(rig.store, "reduce-1", {});
  put_output(rig.store, "reduce-2", {{"a", "2"}});

  EXPECT_TRUE(run_finalize(rig.ctx, rig.event("jf", EventType::kFinalize, 0)));
  EXPECT_EQ(get_object(rig.store, ObjectPath{"bkt", "out/final"}), "b\t1\na\t2\n");
  const auto notices = rig.take_notices();
  ASSERT_EQ(notices.size(), 1u);
  EXPECT_EQ(notices[0], CompletionNotice::ok("jf", JobPhase::kFinalizing, 0));
}

TEST(RunFinalize, WordCountExample) {
  test::WorkerRig rig;
  const auto job = rig.create_in(final_config("jw", 1, 1), JobPhase::kFinalizing);
  put_output(rig.store, "reduce-0", {{"a", "2"}, {"b", "1"}});
  const auto stats = run_finalize_task(rig.ctx, job);
  EXPECT_EQ(get_object(rig.store, ObjectPath{"bkt", "out/final"}), "a\t2\nb\t1\n");
  EXPECT_EQ(stats.records, 2u);
  EXPECT_EQ(stats.sources, 1u);
  EXPECT_EQ(stats.bytes_written, 8u);
}

TEST(RunFinalize, AllEmptyGivesEmptyFinal) {
  test::WorkerRig rig;
  const auto job = rig.create_in(final_config("je", 1, 4), JobPhase::kFinalizing);
  for (int r = 0; r < 4; ++r) put_output(rig.store, "reduce-" + std::to_string(r), {});
  run_finalize_task(rig.ctx, job);
  EXPECT_EQ(get_object(rig.store, ObjectPath{"bkt", "out/final"}), "");
}

TEST(RunFinalize, BinaryFinalIsConcatenatedCodec) {
  test::WorkerRig rig;
  auto cfg = final_config("jb", 1, 2);
  cfg.final_binary = true;
  const auto job = rig.create_in(cfg, JobPhase::kFinalizing);
  const std::vector<Record> r0 = {{"\xff", std::string("\0\1", 2)}};
  const std::vector<Record> r1 = {{"k", "v"}};
  put_output(rig.store, "reduce-0", r0);
  put_output(rig.store, "reduce-1", r1);
  run_finalize_task(rig.ctx, job);
  EXPECT_EQ(get_object(rig.store, ObjectPath{"bkt", "out/final"}), codec::encode_all(r0) + codec::encode_all(r1));
}

TEST(RunFinalize, NonTextRecordFailsWithoutFinal) {
  test::WorkerRig rig;
  auto cfg = final_config("jn", 1, 2);
  cfg.multipart_part_bytes = 1024;
  rig.create_in(cfg, JobPhase::kFinalizing);
  std::vector<Record> big;
  for (int i = 0; i < 500; ++i) big.push_back({"key" + std::to_string(1000 + i), "1"});
  put_output(rig.store, "reduce-0", big);
  put_output(rig.store, "reduce-1", {{"bad\xfe", "1"}});

  EXPECT_FALSE(run_finalize(rig.ctx, rig.event("jn", EventType::kFinalize, 0)));
  EXPECT_FALSE(final_exists(rig.store));
  const auto notices = rig.take_notices();
  ASSERT_EQ(notices.size(), 1u);
  EXPECT_EQ(notices[0].status, NoticeStatus::kFailed);
  EXPECT_NE(notices[0].error_detail->find("NonTextRecord"), std::string::npos);
}

TEST(RunFinalize, MissingSourceFailsWithoutFinal) {
  test::WorkerRig rig;
  rig.create_in(final_config("jx", 1, 2), JobPhase::kFinalizing);
  put_output(rig.store, "reduce-0", {{"a", "1"}});
  EXPECT_FALSE(run_finalize(rig.ctx, rig.event("jx", EventType::kFinalize, 0)));
  EXPECT_FALSE(final_exists(rig.store));
  const auto notices = rig.take_notices();
  ASSERT_EQ(notices.size(), 1u);
  EXPECT_NE(notices[0].error_detail->find("NoSuchObject"), std::string::npos);
}

TEST(RunFinalize, StreamsWithBoundedBuffers) {
  test::WorkerRig rig;
  auto cfg = final_config("js", 1, 3);
  cfg.multipart_part_bytes = 64 * 1024;
  const auto job = rig.create_in(cfg, JobPhase::kFinalizing);
  std::string expected;
  for (int r = 0; r < 3; ++r) {
    std::vector<Record> recs;
    for (int i = 0; i < 20000; ++i) {
      recs.push_back({"r" + std::to_string(r) + "-" + std::to_string(100000 + i), std::to_string(i)});
      expected += recs.back().key + "\t" + recs.back().value + "\n";
    }
    put_output(rig.store, "reduce-" + std::to_string(r), recs);
  }
  const auto stats = run_finalize_task(rig.ctx, job);
  EXPECT_EQ(get_object(rig.store, ObjectPath{"bkt", "out/final"}), expected);
  EXPECT_GT(expected.size(), 10 * cfg.multipart_part_bytes);
  EXPECT_GT(stats.peak_buffered_bytes, 0u);
  EXPECT_LT(stats.peak_buffered_bytes, 2 * cfg.multipart_part_bytes);
}

#include <gtest/gtest.h>

#include <httplib.h>

#include <map>
#include <random>
#include <regex>
#include <thread>

#include "mrflow/coordinator/coordinator.hpp"
#include "mrflow/coordinator/http_service.hpp"
#include "mrflow/coordinator/notice.hpp"
#include "mrflow/eventbus/event_bus.hpp"
#include "test_support.hpp"

using namespace mrflow;
using namespace std::chrono_literals;
using mrflow::test::code_of;

namespace {

JobConfig wc_config(std::uint32_t mappers, std::uint32_t reducers, bool finalizer) {
  JobConfig c;
  c.input_prefixes = {"in/"};
  c.output_prefix = "out/";
  c.num_mappers = mappers;
  c.num_reducers = reducers;
  c.run_finalizer = finalizer;
  c.map_fn = {"wordcount_map", {}};
  if (reducers > 0) c.reduce_fn = FunctionRef{"sum_reduce", {}};
  return c;
}

struct Rig {
  Rig() : metastore(std::make_shared<metastore::MemoryKvStore>()), coordinator(metastore, bus) {
    declare_standard_topics(bus);
    coordinator.set_callback_base("http://coord");
  }

  // Published events of one type for one job, in publish order.
  std::vector<TriggerEvent> events(const std::string& job, EventType type) const {
    std::vector<TriggerEvent> out;
    for (const auto& p : bus.publish_log()) {
      if (p.event.job_id == job && p.event.event_type == type) out.push_back(p.event);
    }
    return out;
  }

  JobPhase phase(const std::string& job) const { return metastore.get_job_state(job).phase; }

  InProcessEventBus bus;
  Metastore metastore;
  Coordinator coordinator;
};

std::vector<std::uint32_t> indices(const std::vector<TriggerEvent>& events) {
  std::vector<std::uint32_t> out;
  for (const auto& e : events) out.push_back(e.worker_index);
  return out;
}

}  // namespace

TEST(Coordinator, SubmitPublishesOneSplitEvent) {
  Rig rig;
  const auto id = rig.coordinator.submit_job(wc_config(4, 2, true));
  EXPECT_EQ(rig.phase(id), JobPhase::kSplitting);
  const auto splits = rig.events(id, EventType::kSplit);
  ASSERT_EQ(splits.size(), 1u);
  EXPECT_EQ(splits[0].worker_index, 0u);
  EXPECT_EQ(splits[0].coordinator_callback, "http://coord/jobs/" + id + "/notify");
  EXPECT_EQ(rig.bus.publish_log().size(), 1u);
}

TEST(Coordinator, InvalidSubmissionCreatesNothing) {
  Rig rig;
  auto cfg = wc_config(4, 2, false);
  cfg.reduce_fn.reset();
  EXPECT_EQ(code_of([&] { rig.coordinator.submit_job(cfg); }), Errc::kInvalidConfig);
  EXPECT_TRUE(rig.metastore.kv().keys_with_prefix("").empty());
  EXPECT_TRUE(rig.bus.publish_log().empty());
}

TEST(Coordinator, BusFailureRecordsJobFailed) {
  Rig rig;
  rig.bus.shutdown();
  auto cfg = wc_config(2, 1, false);
  cfg.job_id = "doomed";
  EXPECT_EQ(code_of([&] { rig.coordinator.submit_job(cfg); }), Errc::kBusUnavailable);
  const auto state = rig.metastore.get_job_state("doomed");
  EXPECT_EQ(state.phase, JobPhase::kFailed);
  ASSERT_TRUE(state.failure_reason.has_value());
  EXPECT_NE(state.failure_reason->find("BusUnavailable"), std::string::npos);
}

TEST(Coordinator, JobIdsAreRandom128BitHex) {
  const auto a = generate_job_id();
  const auto b = generate_job_id();
  EXPECT_NE(a, b);
  EXPECT_TRUE(std::regex_match(a, std::regex("[0-9a-f]{32}")));
}

TEST(Coordinator, ParallelSubmissionsAreIndependent) {
  Rig rig;
  std::string a, b;
  std::thread t1([&] { a = rig.coordinator.submit_job(wc_config(2, 1, false)); });
  std::thread t2([&] { b = rig.coordinator.submit_job(wc_config(3, 1, false)); });
  t1.join();
  t2.join();
  EXPECT_NE(a, b);
  EXPECT_EQ(rig.coordinator.on_worker_done(CompletionNotice::ok(a, JobPhase::kSplitting, 0)), NoticeOutcome::kAdvanced);
  EXPECT_EQ(rig.coordinator.on_worker_done(CompletionNotice::ok(b, JobPhase::kSplitting, 0)), NoticeOutcome::kAdvanced);
  EXPECT_EQ(rig.events(a, EventType::kMap).size(), 2u);
  EXPECT_EQ(rig.events(b, EventType::kMap).size(), 3u);
}

TEST(Coordinator, FullPhaseWalkWithFanOut) {
  Rig rig;
  std::vector<PhaseAdvance> advances;
  rig.coordinator.set_observer([&](const PhaseAdvance& a) { advances.push_back(a); });
  const auto id = rig.coordinator.submit_job(wc_config(4, 2, true));
  auto& c = rig.coordinator;

  EXPECT_EQ(c.on_worker_done(CompletionNotice::ok(id, JobPhase::kSplitting, 0)), NoticeOutcome::kAdvanced);
  EXPECT_EQ(rig.phase(id), JobPhase::kMapping);
  EXPECT_EQ(indices(rig.events(id, EventType::kMap)), (std::vector<std::uint32_t>{0, 1, 2, 3}));

  EXPECT_EQ(c.on_worker_done(CompletionNotice::ok(id, JobPhase::kMapping, 0)), NoticeOutcome::kRecorded);
  EXPECT_EQ(c.on_worker_done(CompletionNotice::ok(id, JobPhase::kMapping, 1)), NoticeOutcome::kRecorded);
  EXPECT_EQ(c.on_worker_done(CompletionNotice::ok(id, JobPhase::kMapping, 1)), NoticeOutcome::kDuplicate);
  EXPECT_EQ(c.on_worker_done(CompletionNotice::ok(id, JobPhase::kMapping, 2)), NoticeOutcome::kRecorded);
  EXPECT_TRUE(rig.events(id, EventType::kReduce).empty());
  EXPECT_EQ(c.on_worker_done(CompletionNotice::ok(id, JobPhase::kMapping, 3)), NoticeOutcome::kAdvanced);
  EXPECT_EQ(rig.phase(id), JobPhase::kReducing);
  EXPECT_EQ(indices(rig.events(id, EventType::kReduce)), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(c.on_worker_done(CompletionNotice::ok(id, JobPhase::kMapping, 3)), NoticeOutcome::kStale);

  c.on_worker_done(CompletionNotice::ok(id, JobPhase::kReducing, 1));
  EXPECT_EQ(c.on_worker_done(CompletionNotice::ok(id, JobPhase::kReducing, 0)), NoticeOutcome::kAdvanced);
  EXPECT_EQ(rig.events(id, EventType::kFinalize).size(), 1u);
  EXPECT_EQ(c.on_worker_done(CompletionNotice::ok(id, JobPhase::kFinalizing, 0)), NoticeOutcome::kAdvanced);
  EXPECT_EQ(rig.phase(id), JobPhase::kCompleted);
  EXPECT_EQ(rig.bus.publish_log().size(), 1u + 4u + 2u + 1u);

  std::vector<std::pair<JobPhase, JobPhase>> steps;
  for (const auto& a : advances) steps.emplace_back(a.from, a.to);
  EXPECT_EQ(steps, (std::vector<std::pair<JobPhase, JobPhase>>{{JobPhase::kPending, JobPhase::kSplitting},
                                                               {JobPhase::kSplitting, JobPhase::kMapping},
                                                               {JobPhase::kMapping, JobPhase::kReducing},
                                                               {JobPhase::kReducing, JobPhase::kFinalizing},
                                                               {JobPhase::kFinalizing, JobPhase::kCompleted}}));
  EXPECT_TRUE(advances.back().event_ids.empty());
  EXPECT_EQ(advances[2].event_ids, (std::vector<std::string>{id + "-REDUCE-0", id + "-REDUCE-1"}));
}

TEST(Coordinator, MapOnlyJobCompletesAfterMapping) {
  Rig rig;
  const auto id = rig.coordinator.submit_job(wc_config(2, 0, false));
  rig.coordinator.on_worker_done(CompletionNotice::ok(id, JobPhase::kSplitting, 0));
  rig.coordinator.on_worker_done(CompletionNotice::ok(id, JobPhase::kMapping, 0));
  rig.coordinator.on_worker_done(CompletionNotice::ok(id, JobPhase::kMapping, 1));
  EXPECT_EQ(rig.phase(id), JobPhase::kCompleted);
  EXPECT_TRUE(rig.events(id, EventType::kReduce).empty());
  EXPECT_TRUE(rig.events(id, EventType::kFinalize).empty());
}

TEST(Coordinator, NoFinalizerCompletesAfterReducing) {
  Rig rig;
  const auto id = rig.coordinator.submit_job(wc_config(1, 1, false));
  rig.coordinator.on_worker_done(CompletionNotice::ok(id, JobPhase::kSplitting, 0));
  rig.coordinator.on_worker_done(CompletionNotice::ok(id, JobPhase::kMapping, 0));
  rig.coordinator.on_worker_done(CompletionNotice::ok(id, JobPhase::kReducing, 0));
  EXPECT_EQ(rig.phase(id), JobPhase::kCompleted);
  EXPECT_TRUE(rig.events(id, EventType::kFinalize).empty());
}

TEST(Coordinator, FailedNoticeFailsJobAndStopsEvents) {
  Rig rig;
  const auto id = rig.coordinator.submit_job(wc_config(1, 2, true));
  rig.coordinator.on_worker_done(CompletionNotice::ok(id, JobPhase::kSplitting, 0));
  rig.coordinator.on_worker_done(CompletionNotice::ok(id, JobPhase::kMapping, 0));
  EXPECT_EQ(rig.coordinator.on_worker_done(CompletionNotice::failed(id, JobPhase::kReducing, 0, "disk on fire")),
            NoticeOutcome::kJobFailed);
  const auto state = rig.metastore.get_job_state(id);
  EXPECT_EQ(state.phase, JobPhase::kFailed);
  EXPECT_NE(state.failure_reason->find("disk on fire"), std::string::npos);
  EXPECT_EQ(rig.coordinator.on_worker_done(CompletionNotice::ok(id, JobPhase::kReducing, 1)), NoticeOutcome::kStale);
  EXPECT_TRUE(rig.events(id, EventType::kFinalize).empty());
}

TEST(Coordinator, FailJobAndAdvanceGuards) {
  Rig rig;
  const auto id = rig.coordinator.submit_job(wc_config(1, 0, false));
  EXPECT_EQ(code_of([&] { rig.coordinator.advance_phase(id, JobPhase::kMapping); }), Errc::kIllegalTransition);
  rig.coordinator.advance_phase(id, JobPhase::kSplitting);
  rig.coordinator.advance_phase(id, JobPhase::kMapping);
  EXPECT_EQ(rig.phase(id), JobPhase::kCompleted);
  rig.coordinator.fail_job(id, "too late");
  EXPECT_EQ(rig.phase(id), JobPhase::kCompleted);
  EXPECT_EQ(code_of([&] { rig.coordinator.fail_job("ghost", "x"); }), Errc::kNoSuchJob);
  EXPECT_EQ(code_of([&] { rig.coordinator.on_worker_done(CompletionNotice::ok("ghost", JobPhase::kMapping, 0)); }),
            Errc::kNoSuchJob);
}

// Duplicated, shuffled, concurrent notices from many threads with the
// coordinator object replaced between deliveries: every phase publishes its
// events exactly once and every job completes.
TEST(Coordinator, FuzzedNoticesPublishEachPhaseOnce) {
  InProcessEventBus bus;
  declare_standard_topics(bus);
  Metastore metastore(std::make_shared<metastore::MemoryKvStore>());
  std::mt19937_64 rng(2024);

  for (int trial = 0; trial < 10; ++trial) {
    const std::uint32_t m = 1 + static_cast<std::uint32_t>(rng() % 6);
    const std::uint32_t r = static_cast<std::uint32_t>(rng() % 4);
    const bool fin = r > 0 && rng() % 2;
    const auto id = Coordinator(metastore, bus).submit_job(wc_config(m, r, fin));

    for (const auto phase : {JobPhase::kSplitting, JobPhase::kMapping, JobPhase::kReducing, JobPhase::kFinalizing}) {
      if (metastore.get_job_state(id).phase != phase) continue;
      const auto workers = expected_completions(phase, metastore.get_job_state(id).config);
      std::vector<std::uint32_t> notices;
      for (std::uint32_t w = 0; w < workers; ++w) {
        for (std::uint64_t c = 0, n = 1 + rng() % 3; c < n; ++c) notices.push_back(w);
      }
      std::shuffle(notices.begin(), notices.end(), rng);
      std::vector<std::thread> threads;
      for (std::size_t t = 0; t < 3; ++t) {
        threads.emplace_back([&, t] {
          for (std::size_t i = t; i < notices.size(); i += 3) {
            Coordinator fresh(metastore, bus);
            fresh.on_worker_done(CompletionNotice::ok(id, phase, notices[i]));
          }
        });
      }
      for (auto& th : threads) th.join();
    }
    EXPECT_EQ(metastore.get_job_state(id).phase, JobPhase::kCompleted);

    std::map<std::pair<EventType, std::uint32_t>, int> counts;
    for (const auto& p : bus.publish_log()) {
      if (p.event.job_id == id) ++counts[{p.event.event_type, p.event.worker_index}];
    }
    const std::size_t expected = 1 + m + r + (fin ? 1 : 0);
    EXPECT_EQ(counts.size(), expected);
    for (const auto& [key, n] : counts) EXPECT_EQ(n, 1);
  }
}

TEST(CompletionNoticeJson, RoundTripAndValidation) {
  const auto ok = CompletionNotice::ok("j", JobPhase::kMapping, 3);
  EXPECT_EQ(completion_notice_from_json(to_json(ok)), ok);
  const auto failed = CompletionNotice::failed("j", JobPhase::kReducing, 1, "boom");
  EXPECT_EQ(completion_notice_from_json(to_json(failed)), failed);
  EXPECT_EQ(to_json(failed).at("status"), "FAILED");
  auto doc = to_json(failed);
  doc.erase("error_detail");
  EXPECT_EQ(code_of([&] { completion_notice_from_json(doc); }), Errc::kInvalidArgument);
  EXPECT_EQ(code_of([] { completion_notice_from_json(nlohmann::json{{"job_id", "j"}}); }), Errc::kInvalidArgument);
}

class HttpRig : public ::testing::Test {
 protected:
  HttpRig() : service(rig.coordinator) {
    port = service.start("127.0.0.1", 0);
  }
  ~HttpRig() override { service.stop(); }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(5s);
    return c;
  }

  Rig rig;
  CoordinatorService service;
  int port = 0;
};

TEST_F(HttpRig, HealthAndSubmission) {
  auto c = client();
  auto health = c.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto res = c.Post("/jobs", serialize_job_config(wc_config(2, 1, false)), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto id = nlohmann::json::parse(res->body).at("job_id").get<std::string>();
  EXPECT_EQ(rig.phase(id), JobPhase::kSplitting);

  EXPECT_EQ(c.Post("/jobs", "{not json", "application/json")->status, 400);
  EXPECT_EQ(c.Post("/jobs", R"({"input_prefixes":["in/"]})", "application/json")->status, 400);

  CoordinatorClient typed("127.0.0.1", port);
  EXPECT_TRUE(typed.healthy());
  EXPECT_EQ(rig.phase(typed.submit(wc_config(1, 1, false))), JobPhase::kSplitting);
  auto bad = wc_config(1, 1, false);
  bad.map_fn.name = "no_such_fn";
  EXPECT_EQ(code_of([&] { typed.submit(bad); }), Errc::kInvalidConfig);
}

TEST_F(HttpRig, NotifyStatusCodes) {
  auto c = client();
  const auto id = rig.coordinator.submit_job(wc_config(1, 0, false));
  const auto notice = to_json(CompletionNotice::ok(id, JobPhase::kSplitting, 0)).dump();
  auto res = c.Post("/jobs/" + id + "/notify", notice, "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(nlohmann::json::parse(res->body).at("outcome"), "advanced");

  EXPECT_EQ(c.Post("/jobs/other/notify", notice, "application/json")->status, 400);
  EXPECT_EQ(c.Post("/jobs/" + id + "/notify", "[]", "application/json")->status, 400);
  const auto ghost = to_json(CompletionNotice::ok("ghost", JobPhase::kMapping, 0)).dump();
  EXPECT_EQ(c.Post("/jobs/ghost/notify", ghost, "application/json")->status, 404);
}

TEST_F(HttpRig, HttpNotifierDeliversAndMapsErrors) {
  const auto id = rig.coordinator.submit_job(wc_config(1, 0, false));
  HttpNotifier notifier;
  const auto base = "http://127.0.0.1:" + std::to_string(port);
  notifier.notify(base + "/jobs/" + id + "/notify", CompletionNotice::ok(id, JobPhase::kSplitting, 0));
  EXPECT_EQ(rig.phase(id), JobPhase::kMapping);
  EXPECT_EQ(code_of([&] {
              notifier.notify(base + "/jobs/ghost/notify", CompletionNotice::ok("ghost", JobPhase::kMapping, 0));
            }),
            Errc::kNoSuchJob);
}

TEST(HttpNotifier, RetriesServerErrorsWithBackoff) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::vector<std::chrono::steady_clock::time_point> times;
  std::mutex mu;
  server.Post(R"(/jobs/([^/]+)/notify)", [&](const httplib::Request&, httplib::Response& res) {
    {
      std::lock_guard lock(mu);
      times.push_back(std::chrono::steady_clock::now());
    }
    res.status = ++hits < 3 ? 503 : 200;
    res.set_content(R"({"outcome":"RECORDED"})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const auto url = "http://127.0.0.1:" + std::to_string(port) + "/jobs/j/notify";

  HttpNotifier notifier(RetryPolicy{3, 50ms});
  notifier.notify(url, CompletionNotice::ok("j", JobPhase::kMapping, 0));
  EXPECT_EQ(hits, 3);
  ASSERT_EQ(times.size(), 3u);
  EXPECT_GE(times[1] - times[0], 50ms);
  EXPECT_GE(times[2] - times[1], 100ms);

  hits = -100;
  EXPECT_EQ(code_of([&] { notifier.notify(url, CompletionNotice::ok("j", JobPhase::kMapping, 0)); }),
            Errc::kCoordinatorUnreachable);
  EXPECT_EQ(hits, -97);
  server.stop();
  th.join();

  EXPECT_EQ(code_of([&] { notifier.notify(url, CompletionNotice::ok("j", JobPhase::kMapping, 0)); }),
            Errc::kCoordinatorUnreachable);
  const RetryPolicy defaults;
  EXPECT_EQ(defaults.attempts, 3);
  EXPECT_EQ(defaults.initial_backoff, 200ms);
}

TEST(DuplicatingNotifier, SendsEveryNoticeAndSomeTwice) {
  std::vector<CompletionNotice> seen;
  CallbackNotifier sink([&](const CompletionNotice& n) { seen.push_back(n); });
  DuplicatingNotifier dup(sink, 0.5, 9);
  for (std::uint32_t i = 0; i < 200; ++i) dup.notify("", CompletionNotice::ok("j", JobPhase::kMapping, i));
  EXPECT_EQ(seen.size(), 200u + dup.duplicates_sent());
  EXPECT_GT(dup.duplicates_sent(), 50u);
  EXPECT_LT(dup.duplicates_sent(), 150u);
}

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include "mrflow/client/cluster.hpp"
#include "mrflow/reducer/merge.hpp"
#include "mrflow/splitter/splitter.hpp"
#include "mrflow/storage/local_store.hpp"
#include "mrflow/storage/memory_store.hpp"
#include "mrflow/testkit/testkit.hpp"

using namespace mrflow;
using namespace std::chrono_literals;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

Verdict pass(std::string detail) { return {true, std::move(detail)}; }
Verdict fail(std::string detail) { return {false, std::move(detail)}; }

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

testkit::WordCounts final_counts(storage::ObjectStore& store, const std::string& bucket, const std::string& prefix) {
  return testkit::counts_from_records(
      testkit::parse_final_text(testkit::read_output(store, bucket, prefix, "final")));
}

PipelineSpec wordcount_pipeline(std::vector<std::string> stages, const std::string& in, const std::string& out) {
  PipelineSpec spec;
  spec.name = out;
  for (auto& s : stages) spec.stages.push_back(FunctionRef{s, {}});
  spec.reduce = FunctionRef{"sum_reduce", {}};
  spec.config = {{"input_prefixes", {in}},
                 {"output_prefix", out},
                 {"num_mappers", 4},
                 {"num_reducers", 2},
                 {"run_finalizer", true},
                 {"input_buffer_bytes", 1 << 20},
                 {"output_buffer_bytes", 1 << 20},
                 {"multipart_part_bytes", 128 * 1024}};
  return spec;
}

// Shared fixture for criteria 1, 2 and 6: one 10MB corpus on the local backend.
struct Fixture {
  std::filesystem::path root;
  std::shared_ptr<storage::LocalObjectStore> store;
  std::string bucket = "acceptance";
  std::string corpus;
  testkit::WordCounts oracle;
  std::string reference_final;  // criterion 1 output
  std::string reference_job;
};

ClusterOptions local_options(Fixture& fx) {
  ClusterOptions o;
  o.store = fx.store;
  o.bucket = fx.bucket;
  return o;
}

Verdict criterion_1(Fixture& fx) {
  Cluster cluster(local_options(fx));
  const auto start = Clock::now();
  const auto outcome = testkit::run_job(cluster, testkit::wordcount_config("corpus/", "c1", 4, 2));
  const auto elapsed = seconds_since(start);
  if (outcome.state != RunState::kCompleted) {
    return fail("job " + std::string(to_string(outcome.state)) + ": " + outcome.failure_reason.value_or(""));
  }
  fx.reference_job = outcome.job_id;
  fx.reference_final = testkit::read_output(*fx.store, fx.bucket, "c1", "final");
  const auto counts = testkit::counts_from_records(testkit::parse_final_text(fx.reference_final));
  if (counts != fx.oracle) return fail(fmt::format("final has {} words, oracle {}", counts.size(), fx.oracle.size()));
  return pass(fmt::format("{} distinct words match the oracle exactly, {:.1f}s", counts.size(), elapsed));
}

Verdict criterion_2(Fixture& fx) {
  if (fx.reference_final.empty()) return fail("criterion 1 produced no reference output");
  Cluster cluster(local_options(fx));
  auto cfg = testkit::wordcount_config("corpus/", "c2", 4, 2);
  cfg.combiner_enabled = false;
  const auto outcome = testkit::run_job(cluster, cfg);
  if (outcome.state != RunState::kCompleted) return fail("combiner-off job " + std::string(to_string(outcome.state)));
  const auto off = testkit::read_output(*fx.store, fx.bucket, "c2", "final");
  if (off != fx.reference_final) return fail("combiner-off final differs from combiner-on final");
  return pass(fmt::format("finals byte-identical ({} bytes); intermediates {} bytes with combiner, {} without",
                          off.size(), testkit::intermediate_bytes(*fx.store, fx.bucket, fx.reference_job),
                          testkit::intermediate_bytes(*fx.store, fx.bucket, outcome.job_id)));
}

Verdict criterion_3() {
  const auto start = Clock::now();
  std::mt19937_64 rng(3);
  std::size_t pieces_checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    storage::MemoryObjectStore store;
    std::vector<storage::ObjectInfo> objects;
    std::string expected;
    const auto n_objects = 1 + rng() % 5;
    const auto max_line = 1 + rng() % 200;
    for (std::uint64_t o = 0; o < n_objects; ++o) {
      std::string body;
      const auto target = rng() % 4000;
      while (body.size() < target) {
        body += std::string(rng() % max_line, static_cast<char>('a' + rng() % 26));
        body += '\n';
      }
      if (rng() % 4 == 0) body += "unterminated";
      const storage::ObjectPath path("b", fmt::format("in/{:03}", o));
      store.put_object(path, body);
      objects.push_back({path, body.size()});
      expected += body;
    }
    const auto m = 1 + static_cast<std::uint32_t>(rng() % 16);
    const auto lists = compute_split(store, objects, m, SplitMode::kLines, 1 + rng() % 64);
    if (lists.size() != m) return fail(fmt::format("case {}: {} piece lists for M={}", trial, lists.size(), m));

    std::string covered;
    std::size_t obj = 0;
    std::uint64_t pos = 0;
    for (const auto& list : lists) {
      for (const auto& piece : list) {
        while (obj < objects.size() && pos == objects[obj].size) ++obj, pos = 0;
        if (obj == objects.size() || !(piece.path == objects[obj].path) || piece.range.start != pos ||
            piece.range.end <= piece.range.start) {
          return fail(fmt::format("case {}: pieces overlap or leave a gap", trial));
        }
        const auto bytes = store.get_object_range(piece.path, piece.range);
        const bool starts_line = piece.range.start == 0 ||
                                 store.get_object_range(piece.path, {piece.range.start - 1, piece.range.start}) == "\n";
        const bool ends_line = piece.range.end == objects[obj].size || bytes.back() == '\n';
        if (!starts_line || !ends_line) return fail(fmt::format("case {}: a piece cuts a line", trial));
        covered += bytes;
        pos = piece.range.end;
        ++pieces_checked;
      }
    }
    if (covered != expected) return fail(fmt::format("case {}: pieces do not reassemble the input", trial));
  }
  const auto elapsed = seconds_since(start);
  if (elapsed >= 10) return fail(fmt::format("took {:.1f}s", elapsed));
  return pass(fmt::format("1000 cases, {} pieces: coverage, disjointness and line integrity hold, {:.2f}s",
                          pieces_checked, elapsed));
}

Verdict criterion_4() {
  const auto start = Clock::now();
  std::mt19937_64 rng(4);
  std::map<std::uint32_t, std::size_t> hierarchical;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto runs = testkit::random_sorted_runs(rng, 1 + rng() % 250, 1 + rng() % 12);
    const auto expected = testkit::merge_oracle(runs);
    for (std::uint32_t k : {2u, 3u, 100u}) {
      MergeStats stats;
      if (k_way_merge(runs, k, &stats) != expected) {
        return fail(fmt::format("case {} k={} ({} runs) differs from the oracle", trial, k, runs.size()));
      }
      if (stats.max_open_runs > k) return fail(fmt::format("case {} k={} opened {} runs", trial, k, stats.max_open_runs));
      if (runs.size() > k) ++hierarchical[k];
    }
  }
  const auto elapsed = seconds_since(start);
  for (std::uint32_t k : {2u, 3u, 100u}) {
    if (hierarchical[k] == 0) return fail(fmt::format("no case forced a hierarchical merge for k={}", k));
  }
  if (elapsed >= 10) return fail(fmt::format("took {:.1f}s", elapsed));
  return pass(fmt::format("1000 cases x k in {{2,3,100}} equal the oracle; hierarchical cases {}/{}/{}, {:.2f}s",
                          hierarchical[2], hierarchical[3], hierarchical[100], elapsed));
}

Verdict criterion_5() {
  const auto start = Clock::now();
  Cluster cluster(ClusterOptions{});
  const auto corpus = testkit::generate_corpus(4 << 20, 5000, true, 5);
  testkit::upload_corpus(cluster.store(), cluster.bucket(), "in/", corpus, 4);
  PipelineRunner runner(cluster.submitter(), cluster.metastore(), MonitorOptions{10ms, 60s});
  const auto two = runner.run(wordcount_pipeline({"identity_map", "wordcount_map"}, "in/", "two"));
  const auto one = runner.run(wordcount_pipeline({"wordcount_map"}, "in/", "one"));
  if (two.state != RunState::kCompleted || one.state != RunState::kCompleted) {
    return fail("pipeline did not complete: " + two.failure_reason.value_or(one.failure_reason.value_or("")));
  }
  if (two.job_ids.size() != 2) return fail(fmt::format("two-stage pipeline ran {} jobs", two.job_ids.size()));
  const auto two_final = testkit::read_output(cluster.store(), cluster.bucket(), "two", "final");
  const auto one_final = testkit::read_output(cluster.store(), cluster.bucket(), "one", "final");
  if (two_final != one_final) return fail("two-stage final differs from single-stage final");
  if (final_counts(cluster.store(), cluster.bucket(), "one") != testkit::oracle_wordcount(corpus)) {
    return fail("single-stage final differs from the oracle");
  }
  const auto elapsed = seconds_since(start);
  if (elapsed >= 60) return fail(fmt::format("took {:.1f}s", elapsed));
  return pass(fmt::format("2 jobs vs 1 job, finals byte-identical ({} bytes), {:.1f}s", two_final.size(), elapsed));
}

Verdict criterion_6(Fixture& fx) {
  if (fx.reference_final.empty()) return fail("criterion 1 produced no reference output");
  auto o = local_options(fx);
  o.event_duplicate_rate = 0.5;
  o.notice_duplicate_rate = 0.5;
  o.seed = 6;
  Cluster cluster(std::move(o));
  const auto outcome = testkit::run_job(cluster, testkit::wordcount_config("corpus/", "c6", 4, 2));
  if (outcome.state != RunState::kCompleted) return fail("job " + std::string(to_string(outcome.state)));
  if (testkit::read_output(*fx.store, fx.bucket, "c6", "final") != fx.reference_final) {
    return fail("final differs from the duplicate-free run");
  }
  std::map<JobPhase, int> advances;
  for (const auto& a : cluster.phase_log()) {
    if (a.job_id == outcome.job_id) ++advances[a.to];
  }
  for (auto phase : {JobPhase::kSplitting, JobPhase::kMapping, JobPhase::kReducing, JobPhase::kFinalizing,
                     JobPhase::kCompleted}) {
    if (advances[phase] != 1) {
      return fail(fmt::format("{} advances into {}", advances[phase], to_string(phase)));
    }
  }
  const auto dup_events = cluster.bus().duplicates_injected();
  const auto dup_notices = cluster.notice_duplicates();
  if (dup_events == 0 || dup_notices == 0) return fail("no duplicates were injected");
  return pass(fmt::format("{} duplicate events, {} duplicate notices; final identical, one advance per phase",
                          dup_events, dup_notices));
}

Verdict criterion_7() {
  const auto start = Clock::now();
  FunctionCatalog catalog;
  testkit::register_test_functions(catalog);
  ClusterOptions o;
  o.catalog = &catalog;
  Cluster cluster(std::move(o));
  auto corpus = testkit::generate_corpus(1 << 20, 2000, false, 7);
  corpus.insert(corpus.size() / 2, "\npoison\n");
  testkit::upload_corpus(cluster.store(), cluster.bucket(), "in/", corpus, 4);

  PipelineRunner runner(cluster.submitter(), cluster.metastore(), MonitorOptions{10ms, 30s}, catalog);
  const auto result = runner.run(wordcount_pipeline({"fail_on_marker_map"}, "in/", "c7"));
  if (result.state != RunState::kFailed) return fail("pipeline ended " + std::string(to_string(result.state)));
  const auto state = cluster.metastore().get_job_state(result.job_ids.at(0));
  if (state.phase != JobPhase::kFailed || !state.failure_reason) return fail("job state is not FAILED with a reason");
  if (!result.failure_reason || result.failure_reason->find(*state.failure_reason) == std::string::npos ||
      state.failure_reason->find("poison") == std::string::npos) {
    return fail("client did not report the stored failure_reason");
  }
  std::this_thread::sleep_for(100ms);
  for (const auto& e : cluster.bus().publish_log()) {
    if (e.event.job_id == state.job_id && e.event.event_type == EventType::kReduce) {
      return fail("a REDUCE event was published");
    }
  }
  const auto elapsed = seconds_since(start);
  if (elapsed >= 10) return fail(fmt::format("took {:.1f}s", elapsed));
  return pass(fmt::format("FAILED with \"{}\", no REDUCE events, {:.2f}s", *state.failure_reason, elapsed));
}

Verdict criterion_8() {
  Cluster cluster(ClusterOptions{});
  const auto corpus_a = testkit::generate_corpus(3 << 20, 3000, false, 81);
  const auto corpus_b = testkit::generate_corpus(2 << 20, 4000, true, 82);
  testkit::upload_corpus(cluster.store(), cluster.bucket(), "a/in/", corpus_a, 3);
  testkit::upload_corpus(cluster.store(), cluster.bucket(), "b/in/", corpus_b, 5);
  PipelineRunner runner(cluster.submitter(), cluster.metastore(), MonitorOptions{10ms, 120s});
  const auto results =
      runner.run_all({wordcount_pipeline({"wordcount_map"}, "a/in/", "a/out"),
                      wordcount_pipeline({"wordcount_map"}, "b/in/", "b/out")});
  for (const auto& r : results) {
    if (r.state != RunState::kCompleted) return fail(r.name + " " + std::string(to_string(r.state)));
  }
  if (results[0].job_ids[0] == results[1].job_ids[0]) return fail("both pipelines got the same job id");
  if (final_counts(cluster.store(), cluster.bucket(), "a/out") != testkit::oracle_wordcount(corpus_a)) {
    return fail("pipeline a output differs from its oracle");
  }
  if (final_counts(cluster.store(), cluster.bucket(), "b/out") != testkit::oracle_wordcount(corpus_b)) {
    return fail("pipeline b output differs from its oracle");
  }
  return pass(fmt::format("jobs {} and {} both COMPLETED with their own oracle outputs", results[0].job_ids[0],
                          results[1].job_ids[0]));
}

double timed_wordcount(std::uint64_t size, std::chrono::milliseconds cold_start, const std::string& tag) {
  ClusterOptions o;
  o.spawner.cold_start_delay = cold_start;
  Cluster cluster(std::move(o));
  testkit::upload_corpus(cluster.store(), cluster.bucket(), "in/", testkit::generate_corpus(size, 20000, false, 9),
                         4);
  const auto start = Clock::now();
  const auto outcome = testkit::run_job(cluster, testkit::wordcount_config("in/", "out", 4, 2));
  const auto elapsed = seconds_since(start);
  if (outcome.state != RunState::kCompleted) throw std::runtime_error(tag + " run did not complete");
  return elapsed;
}

Verdict criterion_9() {
  std::vector<double> times;
  for (std::uint64_t mb : {1, 4, 16}) times.push_back(timed_wordcount(mb << 20, 0ms, fmt::format("{}MB", mb)));
  const auto cold = timed_wordcount(1 << 20, 500ms, "cold 1MB");
  // SPLIT, MAP, REDUCE and FINALIZE each wait one cold start on the critical path.
  const double delay = 4 * 0.5;
  const auto report = fmt::format("1MB {:.2f}s, 4MB {:.2f}s, 16MB {:.2f}s; 1MB with 500ms cold starts {:.2f}s "
                                  "(delay share {:.0f}%)",
                                  times[0], times[1], times[2], cold, 100 * delay / cold);
  if (!(times[0] <= times[1] && times[1] <= times[2])) return fail("not monotonic: " + report);
  return pass(report);
}

Verdict criterion_10(Fixture& fx) {
  ClusterOptions o;
  o.store = fx.store;
  o.bucket = fx.bucket;
  o.http = true;
  o.spawner.max_concurrency = 1;
  Cluster cluster(std::move(o));
  const auto id = cluster.submit(testkit::wordcount_config("corpus/", "c10", 4, 2));

  const auto deadline = Clock::now() + 60s;
  std::size_t maps_done = 0;
  while (true) {
    const auto state = cluster.metastore().get_job_state(id);
    maps_done = cluster.metastore().completion_count(id, JobPhase::kMapping);
    if (state.phase == JobPhase::kMapping && maps_done >= 1) break;
    if (state.phase != JobPhase::kSplitting && state.phase != JobPhase::kMapping) {
      return fail("job left MAPPING before the restart point");
    }
    if (Clock::now() > deadline) return fail("mapping never started");
    std::this_thread::sleep_for(1ms);
  }
  const auto log_before = cluster.phase_log().size();
  const int port_before = cluster.coordinator_port();
  cluster.restart_coordinator();
  if (cluster.coordinator_port() != port_before) return fail("coordinator came back on another port");

  const auto outcome = wait_for_job(cluster.metastore(), id, MonitorOptions{10ms, 120s});
  if (outcome.state != RunState::kCompleted) {
    return fail("job " + std::string(to_string(outcome.state)) + ": " + outcome.failure_reason.value_or(""));
  }
  const auto log = cluster.phase_log();
  bool reduced_after_restart = false;
  for (std::size_t i = log_before; i < log.size(); ++i) {
    if (log[i].job_id == id && log[i].to == JobPhase::kReducing) reduced_after_restart = true;
  }
  if (!reduced_after_restart) return fail("MAPPING -> REDUCING was not driven by the restarted coordinator");
  if (final_counts(*fx.store, fx.bucket, "c10") != fx.oracle) return fail("output differs from the oracle");
  return pass(fmt::format("restarted after {}/4 map notices; new instance advanced to REDUCING; output matches "
                          "the oracle",
                          maps_done));
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);

  Fixture fx;
  fx.root = std::filesystem::temp_directory_path() / fmt::format("mrflow-acceptance-{}", ::getpid());
  std::filesystem::remove_all(fx.root);
  fx.store = std::make_shared<storage::LocalObjectStore>(fx.root);
  fx.corpus = testkit::generate_corpus(10 << 20, 20000, false, 1);
  fx.oracle = testkit::oracle_wordcount(fx.corpus);
  testkit::upload_corpus(*fx.store, fx.bucket, "corpus/", fx.corpus, 8);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"End-to-end correctness", [&] { return criterion_1(fx); }},
      {"Combiner equivalence", [&] { return criterion_2(fx); }},
      {"Split properties", [] { return criterion_3(); }},
      {"Merge oracle", [] { return criterion_4(); }},
      {"Pipeline chaining", [] { return criterion_5(); }},
      {"Duplicate-delivery robustness", [&] { return criterion_6(fx); }},
      {"Failure path", [] { return criterion_7(); }},
      {"Concurrent jobs", [] { return criterion_8(); }},
      {"Scaling trend", [] { return criterion_9(); }},
      {"Coordinator statelessness", [&] { return criterion_10(fx); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    if (!v.pass) ++failures;
    std::printf("%s  %2zu. %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  std::filesystem::remove_all(fx.root);
  return failures == 0 ? 0 : 1;
}

// mrflow: submit, monitor and inspect MapReduce pipelines.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mrflow/client/client.hpp"
#include "mrflow/client/cluster.hpp"
#include "mrflow/client/settings.hpp"
#include "mrflow/core/error.hpp"
#include "mrflow/core/text_format.hpp"
#include "mrflow/metastore/resp.hpp"
#include "mrflow/testkit/testkit.hpp"

namespace {

using namespace mrflow;

Settings settings_from(const std::string& path) {
  if (!path.empty()) return load_settings(path);
  if (std::filesystem::exists("mrflow.yaml")) return load_settings("mrflow.yaml");
  return Settings{};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kInvalidArgument, "cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

bool remote(const Settings& s) { return s.metastore.backend == "kv"; }

// Metastore access for commands that inspect jobs after the fact.
Metastore shared_metastore(const Settings& s) {
  if (!remote(s)) {
    throw Error(Errc::kInvalidArgument,
                "this command needs a shared metastore; set metastore.backend: kv in the settings file");
  }
  return Metastore(make_kv_store(s.metastore));
}

ClusterOptions embedded_options(const Settings& s) {
  ClusterOptions opts;
  opts.store = make_object_store(s.storage);
  opts.bucket = s.storage.bucket;
  opts.kv = make_kv_store(s.metastore);
  opts.spawner = SpawnerOptions{s.eventbus.cold_start_delay, s.eventbus.max_concurrency};
  return opts;
}

void print_results(const std::vector<PipelineSpec>& specs, const std::vector<PipelineResult>& results) {
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    nlohmann::json doc = {{"pipeline", specs[i].name.empty() ? std::to_string(i) : specs[i].name},
                          {"state", std::string(to_string(r.state))},
                          {"job_ids", r.job_ids}};
    if (r.failure_reason) doc["failure_reason"] = *r.failure_reason;
    std::cout << doc.dump() << "\n";
  }
}

int cmd_submit(const Settings& settings, const std::string& file, const std::string& fetch_dir) {
  const auto specs = parse_pipeline_file(read_file(file));
  const MonitorOptions monitor{settings.client.poll_interval, settings.client.deadline};
  std::vector<PipelineResult> results;

  auto fetch_all = [&](storage::ObjectStore& store, const Metastore& ms) {
    if (fetch_dir.empty()) return;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i].state != RunState::kCompleted || results[i].job_ids.empty()) continue;
      const auto dir = std::filesystem::path(fetch_dir) / (specs[i].name.empty() ? std::to_string(i) : specs[i].name);
      for (const auto& p : fetch_results(store, ms, settings.storage.bucket, results[i].job_ids.back(), dir)) {
        std::cout << p.string() << "\n";
      }
    }
  };

  if (remote(settings)) {
    const CoordinatorClient coordinator(settings.coordinator.host, settings.coordinator.port);
    auto metastore = shared_metastore(settings);
    PipelineRunner runner([&](const JobConfig& c) { return coordinator.submit(c); }, metastore, monitor);
    results = runner.run_all(specs);
    print_results(specs, results);
    auto store = make_object_store(settings.storage);
    fetch_all(*store, metastore);
  } else {
    spdlog::info("no shared metastore configured; running the pipelines in-process");
    Cluster cluster(embedded_options(settings));
    PipelineRunner runner(cluster.submitter(), cluster.metastore(), monitor);
    results = runner.run_all(specs);
    print_results(specs, results);
    fetch_all(cluster.store(), cluster.metastore());
  }
  const bool all_ok = std::all_of(results.begin(), results.end(),
                                  [](const auto& r) { return r.state == RunState::kCompleted; });
  return all_ok ? 0 : 1;
}

int cmd_status(const Settings& settings, const std::string& job_id) {
  const auto metastore = shared_metastore(settings);
  const auto state = metastore.get_job_state(job_id);
  nlohmann::json doc = to_json(state);
  doc["completions"] = metastore.completion_count(job_id, state.phase);
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_fetch(const Settings& settings, const std::string& job_id, const std::string& out) {
  const auto metastore = shared_metastore(settings);
  auto store = make_object_store(settings.storage);
  for (const auto& p : fetch_results(*store, metastore, settings.storage.bucket, job_id, out)) {
    std::cout << p.string() << "\n";
  }
  return 0;
}

int cmd_gc(const Settings& settings, const std::string& job_id) {
  auto metastore = shared_metastore(settings);
  auto store = make_object_store(settings.storage);
  const auto report = gc_job(*store, metastore, settings.storage.bucket, job_id);
  std::cout << "deleted " << report.objects_deleted << " objects and " << report.keys_deleted
            << " metastore keys\n";
  return 0;
}

int cmd_demo(const Settings& settings, std::uint64_t size, std::uint32_t mappers, std::uint32_t reducers,
             std::uint64_t seed) {
  const auto corpus = testkit::generate_corpus(size, 5000, true, seed);
  const std::string run = "demo-" + generate_job_id().substr(0, 8);
  const std::string input = run + "/input/";
  const std::string output = run + "/output";

  PipelineSpec spec;
  spec.name = "demo-wordcount";
  spec.stages = {FunctionRef{"wordcount_map", {}}};
  spec.reduce = FunctionRef{"sum_reduce", {}};
  spec.config = {{"input_prefixes", {input}},
                 {"output_prefix", output},
                 {"num_mappers", mappers},
                 {"num_reducers", reducers},
                 {"run_finalizer", true},
                 {"input_buffer_bytes", 1 << 20},
                 {"output_buffer_bytes", 1 << 20},
                 {"multipart_part_bytes", 128 * 1024}};
  const MonitorOptions monitor{settings.client.poll_interval, settings.client.deadline};

  auto check = [&](storage::ObjectStore& store, const PipelineResult& result) {
    if (result.state != RunState::kCompleted) {
      std::cout << "demo-wordcount: " << to_string(result.state) << ": " << result.failure_reason.value_or("") << "\n";
      return 1;
    }
    const auto final_text = testkit::read_output(store, settings.storage.bucket, output, "final");
    const auto got = testkit::counts_from_records(testkit::parse_final_text(final_text));
    const auto want = testkit::oracle_wordcount(corpus);
    std::cout << "demo-wordcount: job " << result.job_ids.back() << ", " << corpus.size() << " input bytes, "
              << want.size() << " distinct words: " << (got == want ? "matches oracle" : "DIFFERS from oracle")
              << "\n";
    return got == want ? 0 : 1;
  };

  if (remote(settings)) {
    auto store = make_object_store(settings.storage);
    testkit::upload_corpus(*store, settings.storage.bucket, input, corpus, 1);
    const CoordinatorClient coordinator(settings.coordinator.host, settings.coordinator.port);
    auto metastore = shared_metastore(settings);
    PipelineRunner runner([&](const JobConfig& c) { return coordinator.submit(c); }, metastore, monitor);
    return check(*store, runner.run(spec));
  }
  Cluster cluster(embedded_options(settings));
  testkit::upload_corpus(cluster.store(), settings.storage.bucket, input, corpus, 1);
  PipelineRunner runner(cluster.submitter(), cluster.metastore(), monitor);
  return check(cluster.store(), runner.run(spec));
}

void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("signal {} received, shutting down", sig);
}

void block_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

int cmd_serve(const Settings& settings) {
  if (!remote(settings)) spdlog::warn("metastore is in-memory; clients in other processes cannot poll job state");
  block_signals();
  auto opts = embedded_options(settings);
  opts.http = true;
  opts.host = settings.coordinator.host;
  opts.port = settings.coordinator.port;
  Cluster cluster(std::move(opts));
  std::cout << "coordinator listening on " << settings.coordinator.host << ":" << cluster.coordinator_port()
            << std::endl;
  wait_for_signal();
  cluster.shutdown();
  return 0;
}

int cmd_kv_serve(const std::string& host, int port) {
  block_signals();
  metastore::RespServer server;
  const auto bound = server.start(host, port);
  std::cout << "kv store listening on " << host << ":" << bound << std::endl;
  wait_for_signal();
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mrflow: event-driven MapReduce pipelines over object storage"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string settings_path;
  std::string log_level = "warn";
  app.add_option("--settings", settings_path, "Deployment settings (YAML); defaults to ./mrflow.yaml if present");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  std::string pipeline_file, fetch_dir;
  auto* submit = app.add_subcommand("submit", "Run the pipelines in a pipeline file and wait for them");
  submit->add_option("pipeline-file", pipeline_file)->required()->check(CLI::ExistingFile);
  submit->add_option("--fetch", fetch_dir, "Download each completed pipeline's results here");

  std::string job_id, out_dir = ".";
  auto* status = app.add_subcommand("status", "Print a job's state");
  status->add_option("job_id", job_id)->required();

  auto* fetch = app.add_subcommand("fetch", "Download a completed job's results");
  fetch->add_option("job_id", job_id)->required();
  fetch->add_option("--out", out_dir, "Target directory");

  auto* gc = app.add_subcommand("gc", "Delete a job's intermediate objects and metadata");
  gc->add_option("job_id", job_id)->required();

  std::uint64_t demo_size = 1 << 20, demo_seed = 42;
  std::uint32_t demo_mappers = 4, demo_reducers = 2;
  auto* demo = app.add_subcommand("demo-wordcount", "Generate a corpus, count its words and check the result");
  demo->add_option("--size", demo_size, "Corpus size in bytes");
  demo->add_option("--mappers", demo_mappers)->check(CLI::PositiveNumber);
  demo->add_option("--reducers", demo_reducers)->check(CLI::PositiveNumber);
  demo->add_option("--seed", demo_seed);

  auto* serve = app.add_subcommand("serve", "Run the coordinator and workers until interrupted");

  std::string kv_host = "127.0.0.1";
  int kv_port = 6379;
  auto* kv_serve = app.add_subcommand("kv-serve", "Run a standalone metastore server");
  kv_serve->add_option("--host", kv_host);
  kv_serve->add_option("--port", kv_port);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*kv_serve) return cmd_kv_serve(kv_host, kv_port);
    const auto settings = settings_from(settings_path);
    if (*submit) return cmd_submit(settings, pipeline_file, fetch_dir);
    if (*status) return cmd_status(settings, job_id);
    if (*fetch) return cmd_fetch(settings, job_id, out_dir);
    if (*gc) return cmd_gc(settings, job_id);
    if (*demo) return cmd_demo(settings, demo_size, demo_mappers, demo_reducers, demo_seed);
    if (*serve) return cmd_serve(settings);
  } catch (const Error& e) {
    std::cerr << "mrflow: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mrflow: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

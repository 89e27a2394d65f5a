#include "mrflow/testkit/testkit.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_map>

#include "mrflow/core/error.hpp"
#include "mrflow/runtime/layout.hpp"
#include "mrflow/storage/object_store.hpp"

namespace mrflow::testkit {

WordCounts oracle_wordcount(std::string_view corpus) {
  std::unordered_map<std::string, std::uint64_t> counts;
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  std::size_t i = 0;
  while (i < corpus.size()) {
    while (i < corpus.size() && is_space(corpus[i])) ++i;
    const auto start = i;
    while (i < corpus.size() && !is_space(corpus[i])) ++i;
    if (i > start) ++counts[std::string(corpus.substr(start, i - start))];
  }
  WordCounts out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::string render_counts(const WordCounts& counts) {
  std::string text;
  for (const auto& [word, n] : counts) {
    text += word;
    text += '\t';
    text += std::to_string(n);
    text += '\n';
  }
  return text;
}

std::vector<Record> parse_final_text(std::string_view text) {
  std::vector<Record> records;
  while (!text.empty()) {
    const auto lf = text.find('\n');
    if (lf == std::string_view::npos) throw Error(Errc::kTruncatedRecord, "final text does not end with LF");
    const auto line = text.substr(0, lf);
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw Error(Errc::kTruncatedRecord, "final line without TAB");
    records.push_back(Record{std::string(line.substr(0, tab)), std::string(line.substr(tab + 1))});
    text.remove_prefix(lf + 1);
  }
  return records;
}

WordCounts counts_from_records(const std::vector<Record>& records) {
  WordCounts out;
  out.reserve(records.size());
  for (const auto& r : records) {
    std::uint64_t n = 0;
    const auto [ptr, ec] = std::from_chars(r.value.data(), r.value.data() + r.value.size(), n);
    if (ec != std::errc{} || ptr != r.value.data() + r.value.size()) {
      throw Error(Errc::kInvalidArgument, "count for '" + r.key + "' is not a number: " + r.value);
    }
    out.emplace_back(r.key, n);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string generate_corpus(std::uint64_t size_bytes, std::size_t vocabulary_size, bool locality,
                            std::uint64_t seed) {
  if (size_bytes == 0) return {};
  vocabulary_size = std::max<std::size_t>(vocabulary_size, 1);

  // The vocabulary depends only on the seed, never on locality.
  std::mt19937_64 vocab_rng(seed);
  std::uniform_int_distribution<int> letter('a', 'z');
  std::uniform_int_distribution<int> word_len(2, 10);
  std::vector<std::string> vocab;
  vocab.reserve(vocabulary_size);
  {
    std::unordered_map<std::string, bool> seen;
    while (vocab.size() < vocabulary_size) {
      std::string w(static_cast<std::size_t>(word_len(vocab_rng)), 'a');
      for (auto& c : w) c = static_cast<char>(letter(vocab_rng));
      if (seen.emplace(w, true).second) vocab.push_back(std::move(w));
    }
  }

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> any_word(0, vocab.size() - 1);
  std::uniform_int_distribution<int> line_words(4, 14);
  const std::size_t window = std::min<std::size_t>(vocab.size(), 8);
  std::uniform_int_distribution<std::size_t> in_window(0, window - 1);
  std::size_t topic = any_word(rng);
  int paragraph_left = 0;

  std::string out;
  out.reserve(size_bytes + 128);
  while (out.size() < size_bytes) {
    if (locality && paragraph_left-- <= 0) {
      topic = any_word(rng);
      paragraph_left = 40;
    }
    const int n = line_words(rng);
    for (int i = 0; i < n; ++i) {
      const auto idx = locality ? (topic + in_window(rng)) % vocab.size() : any_word(rng);
      if (i > 0) out += ' ';
      out += vocab[idx];
    }
    out += '\n';
  }
  out.resize(size_bytes);
  out.back() = '\n';
  return out;
}

std::vector<Record> merge_oracle(const std::vector<std::vector<Record>>& runs) {
  std::vector<Record> all;
  for (const auto& run : runs) all.insert(all.end(), run.begin(), run.end());
  std::stable_sort(all.begin(), all.end(), key_less);
  return all;
}

std::vector<std::vector<Record>> random_sorted_runs(std::mt19937_64& rng, std::size_t max_runs,
                                                    std::size_t max_run_length) {
  std::uniform_int_distribution<std::size_t> run_count(0, max_runs);
  std::uniform_int_distribution<std::size_t> run_length(0, max_run_length);
  std::uniform_int_distribution<int> key_len(0, 3);
  std::uniform_int_distribution<int> key_char('a', 'd');
  std::uniform_int_distribution<int> value(0, 999);
  std::vector<std::vector<Record>> runs(run_count(rng));
  for (auto& run : runs) {
    run.resize(run_length(rng));
    for (auto& rec : run) {
      rec.key.resize(static_cast<std::size_t>(key_len(rng)));
      for (auto& c : rec.key) c = static_cast<char>(key_char(rng));
      rec.value = std::to_string(value(rng));
    }
    std::stable_sort(run.begin(), run.end(), key_less);
  }
  return runs;
}

void register_test_functions(FunctionCatalog& catalog) {
  catalog.register_map("fail_on_marker_map", [](std::string_view chunk_key, std::string_view payload,
                                                const Params& params, const Emit& emit) {
    const auto it = params.find("marker");
    const std::string marker = it == params.end() ? "poison" : it->second;
    builtin::wordcount_map(chunk_key, payload, params, [&](std::string_view key, std::string_view value) {
      if (key == marker) throw Error(Errc::kUdfFailure, "marker word '" + marker + "' encountered");
      emit(key, value);
    });
  });
  catalog.register_reduce("concat_reduce", [](std::string_view key, std::span<const std::string> values,
                                              const Params&) {
    std::string joined;
    for (const auto& v : values) {
      if (!joined.empty()) joined += ',';
      joined += v;
    }
    return Record{std::string(key), std::move(joined)};
  });
}

void upload_corpus(storage::ObjectStore& store, const std::string& bucket, const std::string& prefix,
                   std::string_view corpus, std::size_t parts) {
  parts = std::max<std::size_t>(parts, 1);
  std::size_t start = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    auto end = p + 1 == parts ? corpus.size() : std::max(start, corpus.size() * (p + 1) / parts);
    if (end < corpus.size()) {
      const auto lf = corpus.find('\n', end == 0 ? 0 : end - 1);
      end = lf == std::string_view::npos ? corpus.size() : lf + 1;
    }
    char name[32];
    std::snprintf(name, sizeof name, "part-%05zu", p);
    store.put_object(object_under(prefix, name, bucket), corpus.substr(start, end - start));
    start = end;
  }
}

std::string read_output(storage::ObjectStore& store, const std::string& bucket, const std::string& prefix,
                        const std::string& name) {
  return storage::get_object(store, object_under(prefix, name, bucket));
}

std::uint64_t intermediate_bytes(storage::ObjectStore& store, const std::string& bucket, const std::string& job_id) {
  std::uint64_t total = 0;
  for (const auto& info : store.list_objects(intermediate_prefix(bucket, job_id))) total += info.size;
  return total;
}

JobConfig wordcount_config(const std::string& input_prefix, const std::string& output_prefix,
                           std::uint32_t mappers, std::uint32_t reducers) {
  JobConfig cfg;
  cfg.input_prefixes = {input_prefix};
  cfg.output_prefix = output_prefix;
  cfg.num_mappers = mappers;
  cfg.num_reducers = reducers;
  cfg.run_finalizer = true;
  cfg.input_buffer_bytes = 1 << 20;
  cfg.output_buffer_bytes = 1 << 20;
  cfg.multipart_part_bytes = 128 * 1024;
  cfg.buffer_threshold_percent = 75;
  cfg.merge_fan_in = 100;
  cfg.combiner_enabled = true;
  cfg.map_fn = FunctionRef{"wordcount_map", {}};
  if (reducers > 0) cfg.reduce_fn = FunctionRef{"sum_reduce", {}};
  return cfg;
}

JobOutcome run_job(Cluster& cluster, const JobConfig& config, std::chrono::milliseconds deadline) {
  const auto job_id = cluster.submit(config);
  return wait_for_job(cluster.metastore(), job_id, MonitorOptions{std::chrono::milliseconds(10), deadline});
}

}  // namespace mrflow::testkit

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mrflow/client/cluster.hpp"
#include "mrflow/core/catalog.hpp"
#include "mrflow/core/record.hpp"

namespace mrflow::testkit {

using WordCounts = std::vector<std::pair<std::string, std::uint64_t>>;

// Single-process word count with the same whitespace rules as wordcount_map,
// sorted bytewise by word.
WordCounts oracle_wordcount(std::string_view corpus);

// Word counts rendered as final text ("word\tcount\n" per word, sorted).
std::string render_counts(const WordCounts& counts);

// Parses "key\tvalue\n" lines back into records.
std::vector<Record> parse_final_text(std::string_view text);

// Word counts from parsed final records, sorted by word.
WordCounts counts_from_records(const std::vector<Record>& records);

// Deterministic corpus of exactly `size_bytes` bytes: LF-terminated lines of
// lowercase words separated by single spaces, drawn from a seeded vocabulary.
// With `locality` each paragraph draws from a small window of related words,
// so identical words land close together.
std::string generate_corpus(std::uint64_t size_bytes, std::size_t vocabulary_size, bool locality,
                            std::uint64_t seed = 42);

// Stable concatenate-and-sort: the reference for k_way_merge.
std::vector<Record> merge_oracle(const std::vector<std::vector<Record>>& runs);

// Random runs, each sorted bytewise by key, with keys drawn from a small
// alphabet so duplicates across and within runs are common.
std::vector<std::vector<Record>> random_sorted_runs(std::mt19937_64& rng, std::size_t max_runs,
                                                    std::size_t max_run_length);

// Registers helper functions used by tests:
//   fail_on_marker_map   wordcount_map that throws on params["marker"]
//                        (default "poison")
//   concat_reduce        joins values with ','
void register_test_functions(FunctionCatalog& catalog);

// Uploads `corpus` as `parts` objects named part-00000.. under `prefix`,
// cutting only after LF so each object holds whole lines.
void upload_corpus(storage::ObjectStore& store, const std::string& bucket, const std::string& prefix,
                   std::string_view corpus, std::size_t parts);

// Whole object under an output prefix.
std::string read_output(storage::ObjectStore& store, const std::string& bucket, const std::string& prefix,
                        const std::string& name);

// Total bytes of the job's spill objects.
std::uint64_t intermediate_bytes(storage::ObjectStore& store, const std::string& bucket, const std::string& job_id);

// Word-count job config with small buffers suitable for tests.
JobConfig wordcount_config(const std::string& input_prefix, const std::string& output_prefix,
                           std::uint32_t mappers, std::uint32_t reducers);

// Submits a job to the cluster and waits for a terminal state.
JobOutcome run_job(Cluster& cluster, const JobConfig& config,
                   std::chrono::milliseconds deadline = std::chrono::minutes(5));

}  // namespace mrflow::testkit

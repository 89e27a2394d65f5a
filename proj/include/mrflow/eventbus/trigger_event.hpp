#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mrflow/metastore/metastore.hpp"

namespace mrflow {

enum class EventType { kSplit, kMap, kReduce, kFinalize };

std::string_view to_string(EventType type);
EventType event_type_from_string(std::string_view name);

// Topic per event type: mr.split, mr.map, mr.reduce, mr.finalize.
std::string_view topic_for(EventType type);
// The job phase a worker triggered by `type` runs in.
JobPhase phase_for(EventType type);

struct TriggerEvent {
  std::string event_id;
  EventType event_type = EventType::kSplit;
  std::string job_id;
  std::uint32_t worker_index = 0;  // 0 for SPLIT and FINALIZE
  std::string coordinator_callback;
  std::int64_t emitted_at = 0;  // unix epoch milliseconds

  friend bool operator==(const TriggerEvent&, const TriggerEvent&) = default;
};

// Flat JSON envelope carrying the fields above verbatim.
nlohmann::json to_json(const TriggerEvent& event);
TriggerEvent trigger_event_from_json(const nlohmann::json& doc);
std::string serialize_event(const TriggerEvent& event);
TriggerEvent parse_event(std::string_view raw);

}  // namespace mrflow

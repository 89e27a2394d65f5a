#include "mrflow/eventbus/trigger_event.hpp"

#include "mrflow/core/error.hpp"

namespace mrflow {

std::string_view to_string(EventType type) {
  switch (type) {
    case EventType::kSplit: return "SPLIT";
    case EventType::kMap: return "MAP";
    case EventType::kReduce: return "REDUCE";
    case EventType::kFinalize: return "FINALIZE";
  }
  return "UNKNOWN";
}

EventType event_type_from_string(std::string_view name) {
  if (name == "SPLIT") return EventType::kSplit;
  if (name == "MAP") return EventType::kMap;
  if (name == "REDUCE") return EventType::kReduce;
  if (name == "FINALIZE") return EventType::kFinalize;
  throw Error(Errc::kInvalidArgument, "unknown event type '" + std::string(name) + "'");
}

std::string_view topic_for(EventType type) {
  switch (type) {
    case EventType::kSplit: return "mr.split";
    case EventType::kMap: return "mr.map";
    case EventType::kReduce: return "mr.reduce";
    case EventType::kFinalize: return "mr.finalize";
  }
  return "";
}

JobPhase phase_for(EventType type) {
  switch (type) {
    case EventType::kSplit: return JobPhase::kSplitting;
    case EventType::kMap: return JobPhase::kMapping;
    case EventType::kReduce: return JobPhase::kReducing;
    case EventType::kFinalize: return JobPhase::kFinalizing;
  }
  return JobPhase::kFailed;
}

nlohmann::json to_json(const TriggerEvent& e) {
  return {
      {"event_id", e.event_id},
      {"event_type", std::string(to_string(e.event_type))},
      {"job_id", e.job_id},
      {"worker_index", e.worker_index},
      {"coordinator_callback", e.coordinator_callback},
      {"emitted_at", e.emitted_at},
  };
}

TriggerEvent trigger_event_from_json(const nlohmann::json& doc) {
  try {
    TriggerEvent e;
    e.event_id = doc.at("event_id").get<std::string>();
    e.event_type = event_type_from_string(doc.at("event_type").get<std::string>());
    e.job_id = doc.at("job_id").get<std::string>();
    e.worker_index = doc.at("worker_index").get<std::uint32_t>();
    e.coordinator_callback = doc.at("coordinator_callback").get<std::string>();
    e.emitted_at = doc.at("emitted_at").get<std::int64_t>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::kInvalidArgument, std::string("bad trigger event: ") + ex.what());
  }
}

std::string serialize_event(const TriggerEvent& event) { return to_json(event).dump(); }

TriggerEvent parse_event(std::string_view raw) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(Errc::kInvalidArgument, std::string("bad trigger event: ") + ex.what());
  }
  return trigger_event_from_json(doc);
}

}  // namespace mrflow

#include "tracebench/event_log.hpp"

#include "tracebench/crypto.hpp"

namespace tracebench {

using nlohmann::json;

std::string chain_digest(const std::string& prev, const std::string& body) {
  return to_hex(hash(prev + "\n" + body).bytes).substr(0, 16);
}

EventLogWriter::EventLogWriter(std::ostream& out, const json& effective_config, const std::string& config_hash)
    : out_(out) {
  append({{"type", "header"},
          {"schema_version", kEventSchemaVersion},
          {"config_hash", config_hash},
          {"config", effective_config}});
}

std::uint64_t EventLogWriter::append(json record) {
  if (closed_) throw LogError("append after close");
  record.erase("chain");
  const std::uint64_t id = next_id_++;
  record["id"] = id;
  chain_ = chain_digest(chain_, record.dump());
  record["chain"] = chain_;
  out_ << record.dump() << '\n';
  if (!out_) throw LogError("failed writing event log");
  return id;
}

void EventLogWriter::close() {
  if (closed_) return;
  append({{"type", "end"}, {"records", next_id_ + 1}});
  closed_ = true;
  out_.flush();
}

EventLogReader::EventLogReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {
  std::string line;
  if (!read_line(line)) throw LogError(name_ + ": empty event log");
  header_ = parse_verified(line);
  if (header_.value("type", "") != "header") throw LogError(name_ + ":1: first record is not a header");
  if (header_.value("schema_version", -1) != kEventSchemaVersion) {
    throw LogError(name_ + ": schema version " + header_.value("schema_version", json(nullptr)).dump() +
                   " is not supported (expected " + std::to_string(kEventSchemaVersion) + ")");
  }
}

bool EventLogReader::read_line(std::string& line) {
  if (!std::getline(in_, line)) return false;
  ++line_no_;
  last_line_unterminated_ = in_.eof();
  return true;
}

json EventLogReader::parse_verified(const std::string& line) {
  const std::string where = name_ + ":" + std::to_string(line_no_);
  auto truncated = [&] {
    return LogError(name_ + ": truncated log; last valid record is id " +
                    (expected_id_ == 0 ? std::string("none") : std::to_string(expected_id_ - 1)) + " at line " +
                    std::to_string(last_valid_line_));
  };
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    if (last_line_unterminated_) throw truncated();
    throw LogError(where + ": corrupted record: " + e.what());
  }
  if (!rec.is_object() || !rec.contains("id") || !rec.contains("chain") || !rec.contains("type")) {
    throw LogError(where + ": corrupted record: missing id, type or chain");
  }
  if (!rec["id"].is_number_unsigned() || rec["id"].get<std::uint64_t>() != expected_id_) {
    throw LogError(where + ": corrupted record: expected id " + std::to_string(expected_id_));
  }
  const std::string chain = rec["chain"].is_string() ? rec["chain"].get<std::string>() : "";
  json body = rec;
  body.erase("chain");
  const std::string want = chain_digest(chain_, body.dump());
  if (chain != want) throw LogError(where + ": corrupted record: hash chain mismatch at id " + std::to_string(expected_id_));
  chain_ = want;
  ++expected_id_;
  last_valid_line_ = line_no_;
  return body;
}

bool EventLogReader::next(json& record) {
  if (done_) return false;
  std::string line;
  if (!read_line(line) || line.empty()) {
    throw LogError(name_ + ": truncated log; last valid record is id " + std::to_string(expected_id_ - 1) +
                   " at line " + std::to_string(last_valid_line_));
  }
  record = parse_verified(line);
  if (record["type"] == "end") {
    if (record.value("records", std::uint64_t{0}) != expected_id_) {
      throw LogError(name_ + ":" + std::to_string(line_no_) + ": end trailer count does not match");
    }
    done_ = true;
    std::string extra;
    if (std::getline(in_, extra) && !extra.empty()) {
      throw LogError(name_ + ":" + std::to_string(line_no_ + 1) + ": record after end trailer");
    }
    return false;
  }
  return true;
}

}  // namespace tracebench

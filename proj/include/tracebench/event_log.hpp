#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"

namespace tracebench {

inline constexpr int kEventSchemaVersion = 1;

struct LogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// JSON Lines writer. Every record gets a sequential "id" and a "chain"
/// digest over the previous chain value and the record body.
class EventLogWriter {
 public:
  EventLogWriter(std::ostream& out, const nlohmann::json& effective_config, const std::string& config_hash);

  std::uint64_t append(nlohmann::json record);
  std::uint64_t next_id() const { return next_id_; }
  /// Writes the end trailer. Further appends throw.
  void close();

 private:
  std::ostream& out_;
  std::uint64_t next_id_ = 0;
  std::string chain_;
  bool closed_ = false;
};

/// Reads and verifies a log written by EventLogWriter. Errors name the
/// offending line, or for truncation the last valid record.
class EventLogReader {
 public:
  EventLogReader(std::istream& in, std::string name);

  const nlohmann::json& header() const { return header_; }
  /// False once the end trailer has been consumed.
  bool next(nlohmann::json& record);
  /// Chain digest of the last verified record.
  const std::string& chain() const { return chain_; }

 private:
  bool read_line(std::string& line);
  nlohmann::json parse_verified(const std::string& line);

  std::istream& in_;
  std::string name_;
  nlohmann::json header_;
  std::uint64_t line_no_ = 0;
  std::uint64_t last_valid_line_ = 0;
  std::uint64_t expected_id_ = 0;
  std::string chain_;
  bool done_ = false;
  bool last_line_unterminated_ = false;
};

/// First 16 hex digits of SHA-256(prev || body).
std::string chain_digest(const std::string& prev, const std::string& body);

}  // namespace tracebench

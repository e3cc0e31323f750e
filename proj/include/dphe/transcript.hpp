#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace dphe {

// One message in a protocol run. The payload is a summary of what crossed
// the wire (lengths, supports, flag fields), not the ciphertext bytes; it
// carries enough structure for the leak checks below to inspect.
struct TranscriptEntry {
  std::size_t seq = 0;
  std::string sender;
  std::string receiver;
  std::string kind;
  nlohmann::json payload;
};

// Append-only log of every message exchanged in one protocol run.
class Transcript {
 public:
  std::size_t record(std::string sender, std::string receiver,
                     std::string kind, nlohmann::json payload);

  const std::vector<TranscriptEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // One JSON object per line, in sequence order.
  void write_jsonl(std::ostream& out) const;

 private:
  std::vector<TranscriptEntry> entries_;
};

struct SecurityReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Scans a transcript for messages that would break the protocol's privacy
// claims: plaintext update values sent to the aggregator or another user,
// supports forwarded with fewer than two permutation layers, the aggregator
// asking the key holder to decrypt anything but the final aggregate, the
// private key leaving the key holder, or the shared index permutation
// reaching the aggregator.
SecurityReport check_transcript(const Transcript& transcript);

// check_transcript, but throws SecurityError listing every violation.
void assert_transcript_secure(const Transcript& transcript);

}  // namespace dphe

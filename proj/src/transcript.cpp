#include "dphe/transcript.hpp"

#include <sstream>

#include "dphe/errors.hpp"

namespace dphe {

std::size_t Transcript::record(std::string sender, std::string receiver,
                               std::string kind, nlohmann::json payload) {
  TranscriptEntry entry;
  entry.seq = entries_.size();
  entry.sender = std::move(sender);
  entry.receiver = std::move(receiver);
  entry.kind = std::move(kind);
  entry.payload = std::move(payload);
  entries_.push_back(std::move(entry));
  return entries_.back().seq;
}

void Transcript::write_jsonl(std::ostream& out) const {
  for (const TranscriptEntry& entry : entries_) {
    nlohmann::json line{{"seq", entry.seq},
                        {"sender", entry.sender},
                        {"receiver", entry.receiver},
                        {"kind", entry.kind},
                        {"payload", entry.payload}};
    out << line.dump() << '\n';
  }
}

SecurityReport check_transcript(const Transcript& transcript) {
  SecurityReport report;
  auto flag = [&report](std::size_t seq, const std::string& what) {
    report.ok = false;
    report.violations.push_back("seq " + std::to_string(seq) + ": " + what);
  };

  for (const TranscriptEntry& entry : transcript.entries()) {
    const bool to_aggregator = entry.receiver == "aggregator";
    const bool to_user = entry.receiver.rfind("user:", 0) == 0;

    // Per-user update values may exist only inside the sending party;
    // anything carrying them to the aggregator or another user is a leak.
    if (entry.payload.contains("plaintext_values") &&
        (to_aggregator || to_user)) {
      flag(entry.seq,
           "plaintext update values delivered to " + entry.receiver);
    }

    // Supports shown to the aggregator must carry both permutation layers;
    // one layer would let the aggregator undo it with the map it holds.
    if (to_aggregator && entry.payload.contains("support")) {
      const int layers = entry.payload.value("support_permutations", 0);
      if (layers != 2) {
        flag(entry.seq, "support delivered to the aggregator with " +
                            std::to_string(layers) +
                            " permutation layer(s); 2 are required");
      }
    }

    // The key holder decrypts the summed aggregate only, never an
    // individual contribution.
    if (entry.kind == "decrypt_request") {
      const std::string target = entry.payload.value("target", "");
      if (target != "aggregate") {
        flag(entry.seq, "decrypt request targets '" + target +
                            "'; only the aggregate may be decrypted");
      }
    }

    // The private key stays with the key holder.
    if (entry.payload.value("private_key", false) &&
        entry.receiver != entry.sender) {
      flag(entry.seq, "private key delivered to " + entry.receiver);
    }

    // The shared permutation reaching the aggregator would let it combine
    // with the user maps it already holds and undo both layers.
    if (to_aggregator && entry.payload.value("us_permutation", false)) {
      flag(entry.seq,
           "shared index permutation delivered to the aggregator");
    }
  }
  return report;
}

void assert_transcript_secure(const Transcript& transcript) {
  const SecurityReport report = check_transcript(transcript);
  if (!report.ok) {
    std::ostringstream what;
    what << "transcript failed security check with "
         << report.violations.size() << " violation(s):";
    for (const std::string& v : report.violations) {
      what << "\n  - " << v;
    }
    throw SecurityError(what.str());
  }
}

}  // namespace dphe

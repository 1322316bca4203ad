#pragma once

#include "leakprobe/email.hpp"

#include "json.hpp"

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace leakprobe {

enum class MailboxFormat {
  maildir,      // directory tree, one message per regular file
  concatenated, // mbox-style file, messages separated by "From " lines
  csv,          // header row, then (id, raw message text) rows
};

MailboxFormat parse_mailbox_format(std::string_view name);
std::string_view to_string(MailboxFormat format);

struct RawEmailMessage {
  std::string message_id;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;

  std::optional<std::string> header(std::string_view name) const;
};

struct MailboxParseResult {
  std::vector<RawEmailMessage> messages;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Splits one raw message at its first blank line, unfolds headers and undoes
// quoted-printable encoding when the headers declare it. CRLF is normalized to
// LF first. Returns nullopt when there is no blank line.
std::optional<RawEmailMessage> parse_message(std::string id, std::string_view raw);

MailboxParseResult parse_mailbox(const std::filesystem::path& source, MailboxFormat format);
MailboxParseResult parse_concatenated(std::istream& in);
MailboxParseResult parse_csv_mailbox(std::istream& in);

std::string decode_quoted_printable(std::string_view text);

struct Occurrence {
  std::string message_id;
  std::size_t offset = 0;

  bool operator==(const Occurrence&) const = default;
};

// Immutable message store plus an index of every extracted address.
class Corpus {
public:
  explicit Corpus(std::vector<RawEmailMessage> messages);

  std::span<const RawEmailMessage> messages() const { return messages_; }
  const RawEmailMessage* find(std::string_view message_id) const;

  // Number of extracted addresses equal to `address` across all bodies.
  std::size_t frequency(const EmailAddress& address) const;
  std::optional<Occurrence> first_occurrence(const EmailAddress& address) const;

  // Case-insensitive substring occurrence anywhere in any body, including
  // inside a longer address.
  bool mentions(std::string_view text) const;

  std::vector<std::string> bodies() const;

private:
  struct Entry {
    std::size_t count = 0;
    Occurrence first;
  };

  std::vector<RawEmailMessage> messages_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, Entry> addresses_;
};

struct NameEmailPair {
  PersonName name;
  EmailAddress email;
  std::size_t frequency = 0;
  std::optional<Occurrence> first_occurrence;
};

nlohmann::json to_json(const NameEmailPair& pair);
NameEmailPair pair_from_json(const nlohmann::json& j);

void write_pairs_jsonl(const std::filesystem::path& path, std::span<const NameEmailPair> pairs);
std::vector<NameEmailPair> read_pairs_jsonl(const std::filesystem::path& path);

// Address to owner mapping in file order. Later duplicates of an address are
// ignored.
class Roster {
public:
  struct Entry {
    EmailAddress email;
    PersonName name;
  };

  void add(EmailAddress email, PersonName name);
  const PersonName* find(const EmailAddress& email) const;
  std::span<const Entry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Header "email,name". Rows with an unparsable address are counted in
  // `rejected` and skipped.
  static Roster from_csv(std::istream& in, std::size_t* rejected = nullptr);
  static Roster load_csv(const std::filesystem::path& path, std::size_t* rejected = nullptr);

private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct FilterOptions {
  std::string excluded_domain = "enron.com";
  std::size_t min_domain_count = 3;
  std::size_t max_name_tokens = 3;
};

struct DropCounts {
  std::size_t not_in_corpus = 0;
  std::size_t corporate_domain = 0;
  std::size_t name_tokens = 0;
  std::size_t rare_domain = 0;

  bool operator==(const DropCounts&) const = default;
};

nlohmann::json to_json(const DropCounts& drops);
DropCounts drops_from_json(const nlohmann::json& j);

struct PairBuildResult {
  std::vector<NameEmailPair> pairs;
  DropCounts drops;
};

// Filters run in order: corporate domain, name length (0 or more than
// max_name_tokens), then domain rarity counted over distinct surviving
// addresses. This order makes the filter idempotent.
PairBuildResult apply_filters(std::vector<NameEmailPair> pairs, const FilterOptions& options);

// One pair per roster address that occurs in some body, in order of first
// occurrence, then filtered.
PairBuildResult build_pairs(const Corpus& corpus, const Roster& roster, const FilterOptions& options);

// The first n roster entries (in roster order) whose address never appears in
// the corpus, not even as a substring, that also pass the corporate and name
// filters. Throws InsufficientDataError when fewer exist.
std::vector<NameEmailPair> build_unseen_set(const Corpus& corpus, const Roster& roster,
                                            std::span<const NameEmailPair> corpus_pairs,
                                            std::size_t n, const FilterOptions& options);

} // namespace leakprobe

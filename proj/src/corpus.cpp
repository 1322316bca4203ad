#include "leakprobe/corpus.hpp"

#include "leakprobe/csv.hpp"
#include "leakprobe/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace leakprobe {

namespace {

std::string normalize_newlines(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n')
      continue;
    out += raw[i];
  }
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos)
    return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

int hex_value(char c) {
  if (c >= '0' && c <= '9')
    return c - '0';
  if (c >= 'A' && c <= 'F')
    return c - 'A' + 10;
  if (c >= 'a' && c <= 'f')
    return c - 'a' + 10;
  return -1;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Keeps message ids unique: a clash gets the ordinal appended.
class IdAllocator {
public:
  std::string allocate(std::string preferred, std::size_t ordinal) {
    if (preferred.empty() || used_.contains(preferred))
      preferred = (preferred.empty() ? std::string("msg") : preferred) + "#" + std::to_string(ordinal);
    used_.insert(preferred);
    return preferred;
  }

private:
  std::set<std::string> used_;
};

void add_parsed(MailboxParseResult& result, IdAllocator& ids, std::string locator,
                std::string_view raw, bool prefer_message_id) {
  std::size_t ordinal = result.messages.size() + result.skipped;
  auto msg = parse_message(locator, raw);
  if (!msg) {
    ++result.skipped;
    result.warnings.push_back(locator + ": no blank line between headers and body");
    return;
  }
  std::string preferred = locator;
  if (prefer_message_id) {
    if (auto mid = msg->header("Message-ID"); mid && !mid->empty())
      preferred = *mid;
  }
  msg->message_id = ids.allocate(std::move(preferred), ordinal);
  result.messages.push_back(std::move(*msg));
}

} // namespace

MailboxFormat parse_mailbox_format(std::string_view name) {
  if (name == "maildir" || name == "dir")
    return MailboxFormat::maildir;
  if (name == "mbox" || name == "concatenated")
    return MailboxFormat::concatenated;
  if (name == "csv")
    return MailboxFormat::csv;
  throw std::invalid_argument("unknown mailbox format '" + std::string(name) +
                              "' (expected maildir, mbox or csv)");
}

std::string_view to_string(MailboxFormat format) {
  switch (format) {
  case MailboxFormat::maildir:
    return "maildir";
  case MailboxFormat::concatenated:
    return "mbox";
  case MailboxFormat::csv:
    return "csv";
  }
  return "?";
}

std::optional<std::string> RawEmailMessage::header(std::string_view name) const {
  auto folded = ascii_lower(name);
  for (const auto& [key, value] : headers)
    if (ascii_lower(key) == folded)
      return value;
  return std::nullopt;
}

std::string decode_quoted_printable(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '=') {
      out += c;
      continue;
    }
    // Soft line break, possibly with trailing whitespace before the newline.
    std::size_t j = i + 1;
    while (j < text.size() && (text[j] == ' ' || text[j] == '\t'))
      ++j;
    if (j < text.size() && text[j] == '\n') {
      i = j;
      continue;
    }
    if (j == text.size()) {
      i = j;
      continue;
    }
    if (i + 2 < text.size() && hex_value(text[i + 1]) >= 0 && hex_value(text[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(text[i + 1]) * 16 + hex_value(text[i + 2]));
      i += 2;
      continue;
    }
    out += c;
  }
  return out;
}

std::optional<RawEmailMessage> parse_message(std::string id, std::string_view raw) {
  std::string text = normalize_newlines(raw);
  std::size_t split;
  std::size_t body_start;
  if (text.starts_with("\n")) {
    split = 0;
    body_start = 1;
  } else {
    split = text.find("\n\n");
    if (split == std::string::npos)
      return std::nullopt;
    body_start = split + 2;
  }

  RawEmailMessage msg;
  msg.message_id = std::move(id);
  std::istringstream head(text.substr(0, split));
  for (std::string line; std::getline(head, line);) {
    if ((line.starts_with(" ") || line.starts_with("\t")) && !msg.headers.empty()) {
      msg.headers.back().second += ' ' + trim(line);
      continue;
    }
    auto colon = line.find(':');
    if (colon == std::string::npos)
      continue; // "From " envelope lines and other noise
    msg.headers.emplace_back(trim(line.substr(0, colon)), trim(line.substr(colon + 1)));
  }

  msg.body = text.substr(body_start);
  auto cte = msg.header("Content-Transfer-Encoding");
  if (cte && ascii_lower(trim(*cte)) == "quoted-printable")
    msg.body = decode_quoted_printable(msg.body);
  return msg;
}

MailboxParseResult parse_concatenated(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad())
    throw IoError("error while reading concatenated mailbox");
  const std::string content = ss.str();

  MailboxParseResult result;
  IdAllocator ids;
  std::string current;
  bool have_current = false;
  bool previous_blank = true;
  std::size_t ordinal = 0;

  auto flush = [&] {
    if (!have_current)
      return;
    // The blank line before the next separator belongs to the mbox framing.
    if (current.ends_with("\n\n"))
      current.pop_back();
    add_parsed(result, ids, "mbox:" + std::to_string(ordinal++), current, true);
    current.clear();
    have_current = false;
  };

  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    bool terminated = nl != std::string::npos;
    std::string_view view(content.data() + pos, (terminated ? nl : content.size()) - pos);
    pos = terminated ? nl + 1 : content.size();
    if (view.ends_with('\r'))
      view.remove_suffix(1);

    if (previous_blank && view.starts_with("From ")) {
      flush();
      have_current = true;
      previous_blank = false;
      continue;
    }
    // mboxrd quoting of body lines that look like separators
    if (auto q = view.find_first_not_of('>'); q != 0 && q != std::string_view::npos &&
                                              view.substr(q).starts_with("From "))
      view.remove_prefix(1);
    current.append(view);
    if (terminated)
      current += '\n';
    have_current = true;
    previous_blank = view.empty();
  }
  flush();
  return result;
}

MailboxParseResult parse_csv_mailbox(std::istream& in) {
  MailboxParseResult result;
  IdAllocator ids;
  csv::Reader reader(in);
  if (!reader.next())
    return result; // header only or empty
  while (auto row = reader.next()) {
    if (row->size() < 2) {
      ++result.skipped;
      result.warnings.push_back("csv line " + std::to_string(reader.line()) + ": expected (id, message)");
      continue;
    }
    add_parsed(result, ids, (*row)[0], (*row)[1], false);
  }
  return result;
}

MailboxParseResult parse_mailbox(const fs::path& source, MailboxFormat format) {
  std::error_code ec;
  switch (format) {
  case MailboxFormat::maildir: {
    if (!fs::is_directory(source, ec))
      throw IoError("not a directory: " + source.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(source, ec))
      if (entry.is_regular_file())
        files.push_back(entry.path());
    if (ec)
      throw IoError("cannot list " + source.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    MailboxParseResult result;
    IdAllocator ids;
    for (const auto& file : files)
      add_parsed(result, ids, fs::relative(file, source).generic_string(), read_file(file), false);
    return result;
  }
  case MailboxFormat::concatenated: {
    std::ifstream in(source, std::ios::binary);
    if (!in)
      throw IoError("cannot read " + source.string());
    return parse_concatenated(in);
  }
  case MailboxFormat::csv: {
    std::ifstream in(source, std::ios::binary);
    if (!in)
      throw IoError("cannot read " + source.string());
    return parse_csv_mailbox(in);
  }
  }
  throw std::invalid_argument("unknown mailbox format");
}

Corpus::Corpus(std::vector<RawEmailMessage> messages) : messages_(std::move(messages)) {
  by_id_.reserve(messages_.size());
  for (std::size_t i = 0; i < messages_.size(); ++i) {
    const auto& msg = messages_[i];
    if (!by_id_.emplace(msg.message_id, i).second)
      throw std::invalid_argument("duplicate message id '" + msg.message_id + "'");
    for (auto& m : find_addresses(msg.body)) {
      auto [it, inserted] = addresses_.try_emplace(m.address.str());
      if (inserted)
        it->second.first = Occurrence{msg.message_id, m.offset};
      ++it->second.count;
    }
  }
}

const RawEmailMessage* Corpus::find(std::string_view message_id) const {
  auto it = by_id_.find(std::string(message_id));
  return it == by_id_.end() ? nullptr : &messages_[it->second];
}

std::size_t Corpus::frequency(const EmailAddress& address) const {
  auto it = addresses_.find(address.str());
  return it == addresses_.end() ? 0 : it->second.count;
}

std::optional<Occurrence> Corpus::first_occurrence(const EmailAddress& address) const {
  auto it = addresses_.find(address.str());
  if (it == addresses_.end())
    return std::nullopt;
  return it->second.first;
}

bool Corpus::mentions(std::string_view text) const {
  return std::any_of(messages_.begin(), messages_.end(),
                     [&](const RawEmailMessage& m) { return icontains(m.body, text); });
}

std::vector<std::string> Corpus::bodies() const {
  std::vector<std::string> out;
  out.reserve(messages_.size());
  for (const auto& m : messages_)
    out.push_back(m.body);
  return out;
}

json to_json(const NameEmailPair& pair) {
  json j{{"name", pair.name.display()},
         {"local", pair.email.local()},
         {"domain", pair.email.domain()},
         {"frequency", pair.frequency}};
  if (pair.first_occurrence) {
    j["message_id"] = pair.first_occurrence->message_id;
    j["offset"] = pair.first_occurrence->offset;
  } else {
    j["message_id"] = nullptr;
    j["offset"] = nullptr;
  }
  return j;
}

NameEmailPair pair_from_json(const json& j) {
  NameEmailPair pair{PersonName(j.at("name").get<std::string>()),
                     EmailAddress(j.at("local").get<std::string>(), j.at("domain").get<std::string>()),
                     j.at("frequency").get<std::size_t>(), std::nullopt};
  if (j.contains("message_id") && !j.at("message_id").is_null())
    pair.first_occurrence = Occurrence{j.at("message_id").get<std::string>(), j.at("offset").get<std::size_t>()};
  return pair;
}

void write_pairs_jsonl(const fs::path& path, std::span<const NameEmailPair> pairs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path.string());
  for (const auto& p : pairs)
    out << to_json(p).dump() << '\n';
}

std::vector<NameEmailPair> read_pairs_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path.string());
  std::vector<NameEmailPair> pairs;
  for (std::string line; std::getline(in, line);)
    if (!line.empty())
      pairs.push_back(pair_from_json(json::parse(line)));
  return pairs;
}

void Roster::add(EmailAddress email, PersonName name) {
  auto key = email.str();
  if (index_.contains(key))
    return;
  index_.emplace(std::move(key), entries_.size());
  entries_.push_back(Entry{std::move(email), std::move(name)});
}

const PersonName* Roster::find(const EmailAddress& email) const {
  auto it = index_.find(email.str());
  return it == index_.end() ? nullptr : &entries_[it->second].name;
}

Roster Roster::from_csv(std::istream& in, std::size_t* rejected) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header)
    throw IoError("roster is empty");
  std::size_t email_col = 0;
  std::size_t name_col = 1;
  for (std::size_t i = 0; i < header->size(); ++i) {
    auto col = ascii_lower(trim((*header)[i]));
    if (col == "email")
      email_col = i;
    else if (col == "name")
      name_col = i;
  }

  Roster roster;
  std::size_t bad = 0;
  while (auto row = reader.next()) {
    if (row->size() == 1 && row->front().empty())
      continue;
    if (row->size() <= std::max(email_col, name_col)) {
      ++bad;
      continue;
    }
    auto email = EmailAddress::parse(trim((*row)[email_col]));
    if (!email) {
      ++bad;
      continue;
    }
    roster.add(std::move(*email), PersonName((*row)[name_col]));
  }
  if (rejected)
    *rejected = bad;
  return roster;
}

Roster Roster::load_csv(const fs::path& path, std::size_t* rejected) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read roster " + path.string());
  return from_csv(in, rejected);
}

json to_json(const DropCounts& drops) {
  return json{{"not_in_corpus", drops.not_in_corpus},
              {"corporate_domain", drops.corporate_domain},
              {"name_tokens", drops.name_tokens},
              {"rare_domain", drops.rare_domain}};
}

DropCounts drops_from_json(const json& j) {
  return DropCounts{j.value("not_in_corpus", std::size_t{0}), j.value("corporate_domain", std::size_t{0}),
                    j.value("name_tokens", std::size_t{0}), j.value("rare_domain", std::size_t{0})};
}

PairBuildResult apply_filters(std::vector<NameEmailPair> pairs, const FilterOptions& options) {
  PairBuildResult result;
  auto excluded = ascii_lower(options.excluded_domain);

  std::vector<NameEmailPair> kept;
  kept.reserve(pairs.size());
  for (auto& p : pairs) {
    if (!excluded.empty() && p.email.domain() == excluded) {
      ++result.drops.corporate_domain;
    } else if (p.name.empty() || p.name.size() > options.max_name_tokens) {
      ++result.drops.name_tokens;
    } else {
      kept.push_back(std::move(p));
    }
  }

  std::map<std::string, std::set<std::string>> per_domain;
  for (const auto& p : kept)
    per_domain[p.email.domain()].insert(p.email.local());

  for (auto& p : kept) {
    if (per_domain[p.email.domain()].size() < options.min_domain_count)
      ++result.drops.rare_domain;
    else
      result.pairs.push_back(std::move(p));
  }
  return result;
}

PairBuildResult build_pairs(const Corpus& corpus, const Roster& roster, const FilterOptions& options) {
  if (roster.empty())
    throw std::invalid_argument("build_pairs: roster is empty");

  // Roster addresses seen in the corpus, ordered by first occurrence.
  std::unordered_map<std::string, std::size_t> message_rank;
  for (std::size_t i = 0; i < corpus.messages().size(); ++i)
    message_rank.emplace(corpus.messages()[i].message_id, i);

  std::vector<NameEmailPair> found;
  std::size_t missing = 0;
  for (const auto& entry : roster.entries()) {
    auto occ = corpus.first_occurrence(entry.email);
    if (!occ) {
      ++missing;
      continue;
    }
    found.push_back(NameEmailPair{entry.name, entry.email, corpus.frequency(entry.email), std::move(occ)});
  }
  std::stable_sort(found.begin(), found.end(), [&](const NameEmailPair& a, const NameEmailPair& b) {
    auto ra = message_rank.at(a.first_occurrence->message_id);
    auto rb = message_rank.at(b.first_occurrence->message_id);
    if (ra != rb)
      return ra < rb;
    return a.first_occurrence->offset < b.first_occurrence->offset;
  });

  auto result = apply_filters(std::move(found), options);
  result.drops.not_in_corpus = missing;
  return result;
}

std::vector<NameEmailPair> build_unseen_set(const Corpus& corpus, const Roster& roster,
                                            std::span<const NameEmailPair> corpus_pairs,
                                            std::size_t n, const FilterOptions& options) {
  std::set<std::string> seen;
  for (const auto& p : corpus_pairs)
    seen.insert(p.email.str());
  auto excluded = ascii_lower(options.excluded_domain);

  std::vector<NameEmailPair> out;
  for (const auto& entry : roster.entries()) {
    if (out.size() == n)
      break;
    const auto rendered = entry.email.str();
    if (seen.contains(rendered) || corpus.frequency(entry.email) > 0)
      continue;
    if (!excluded.empty() && entry.email.domain() == excluded)
      continue;
    if (entry.name.empty() || entry.name.size() > options.max_name_tokens)
      continue;
    if (corpus.mentions(rendered))
      continue;
    out.push_back(NameEmailPair{entry.name, entry.email, 0, std::nullopt});
  }
  if (out.size() < n)
    throw InsufficientDataError("unseen set: requested " + std::to_string(n) + " addresses but only " +
                                    std::to_string(out.size()) + " roster addresses are absent from the corpus",
                                out.size());
  return out;
}

} // namespace leakprobe

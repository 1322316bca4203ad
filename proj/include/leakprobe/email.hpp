#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace leakprobe {

std::string ascii_lower(std::string_view text);

// Case-insensitive (ASCII) substring test.
bool icontains(std::string_view haystack, std::string_view needle);

// An address split into local part and domain, both case-folded.
class EmailAddress {
public:
  // Throws std::invalid_argument if local is empty or domain has no dot.
  EmailAddress(std::string_view local, std::string_view domain);

  // Accepts exactly "local@domain"; anything else yields nullopt.
  static std::optional<EmailAddress> parse(std::string_view text);

  const std::string& local() const { return local_; }
  const std::string& domain() const { return domain_; }
  std::string str() const { return local_ + '@' + domain_; }

  auto operator<=>(const EmailAddress&) const = default;

private:
  std::string local_;
  std::string domain_;
};

struct AddressMatch {
  EmailAddress address;
  std::size_t offset;
  std::size_t length;
};

// Scans for [A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,} with leftmost,
// backtracking-greedy semantics (the same matches std::regex_search yields),
// without the recursion std::regex needs for long runs.
std::vector<AddressMatch> find_addresses(std::string_view text);
std::optional<AddressMatch> find_first_address(std::string_view text, std::size_t from = 0);

// Matches "@domain" where domain follows the domain half of the address
// pattern; returns the last one in text.
std::optional<std::string> last_domain_mention(std::string_view text);

// Owner name as an ordered token list. Tokens keep their case for prompting;
// comparisons use the folded form.
class PersonName {
public:
  explicit PersonName(std::string_view full);
  explicit PersonName(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  std::string display() const;
  std::string folded() const;
  std::vector<std::string> folded_tokens() const;

  bool operator==(const PersonName& other) const { return folded() == other.folded(); }

private:
  std::vector<std::string> tokens_;
};

} // namespace leakprobe

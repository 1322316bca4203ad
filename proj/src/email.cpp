#include "leakprobe/email.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace leakprobe {

namespace {

bool is_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_local_char(char c) {
  return is_alpha(c) || is_digit(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-';
}

bool is_domain_char(char c) { return is_alpha(c) || is_digit(c) || c == '.' || c == '-'; }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

// Length of the domain half matched at `text` start, or 0. The first
// quantifier is greedy, so the split dot is the rightmost one followed by two
// letters; the TLD then takes every letter after it.
std::size_t match_domain(std::string_view text) {
  std::size_t run = 0;
  while (run < text.size() && is_domain_char(text[run]))
    ++run;
  for (std::size_t dot = run; dot-- > 1;) {
    if (text[dot] != '.')
      continue;
    if (dot + 2 < run && is_alpha(text[dot + 1]) && is_alpha(text[dot + 2])) {
      std::size_t end = dot + 3;
      while (end < run && is_alpha(text[end]))
        ++end;
      return end;
    }
  }
  return 0;
}

} // namespace

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

bool icontains(std::string_view haystack, std::string_view needle) {
  if (needle.empty())
    return true;
  auto eq = [](char a, char b) { return lower(a) == lower(b); };
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(), eq) !=
         haystack.end();
}

EmailAddress::EmailAddress(std::string_view local, std::string_view domain)
    : local_(ascii_lower(local)), domain_(ascii_lower(domain)) {
  if (local_.empty())
    throw std::invalid_argument("email address has an empty local part");
  if (domain_.find('.') == std::string::npos)
    throw std::invalid_argument("email domain '" + domain_ + "' has no dot");
}

std::optional<EmailAddress> EmailAddress::parse(std::string_view text) {
  auto m = find_first_address(text);
  if (!m || m->offset != 0 || m->length != text.size())
    return std::nullopt;
  return m->address;
}

std::optional<AddressMatch> find_first_address(std::string_view text, std::size_t from) {
  std::size_t local_start = from;
  for (std::size_t at = text.find('@', from); at != std::string_view::npos;
       at = text.find('@', at + 1)) {
    // Local run ending right before '@', not reaching back past the search start
    // or a previous '@'.
    std::size_t begin = at;
    while (begin > local_start && is_local_char(text[begin - 1]))
      --begin;
    if (begin < at) {
      std::size_t dlen = match_domain(text.substr(at + 1));
      if (dlen > 0) {
        std::size_t length = at + 1 + dlen - begin;
        return AddressMatch{EmailAddress(text.substr(begin, at - begin), text.substr(at + 1, dlen)),
                            begin, length};
      }
    }
    local_start = at + 1;
  }
  return std::nullopt;
}

std::vector<AddressMatch> find_addresses(std::string_view text) {
  std::vector<AddressMatch> out;
  std::size_t pos = 0;
  while (auto m = find_first_address(text, pos)) {
    pos = m->offset + m->length;
    out.push_back(std::move(*m));
  }
  return out;
}

std::optional<std::string> last_domain_mention(std::string_view text) {
  for (std::size_t at = text.rfind('@'); at != std::string_view::npos;
       at = at == 0 ? std::string_view::npos : text.rfind('@', at - 1)) {
    if (std::size_t dlen = match_domain(text.substr(at + 1)); dlen > 0)
      return ascii_lower(text.substr(at + 1, dlen));
  }
  return std::nullopt;
}

PersonName::PersonName(std::string_view full) {
  std::istringstream in{std::string(full)};
  for (std::string tok; in >> tok;)
    tokens_.push_back(std::move(tok));
}

PersonName::PersonName(std::vector<std::string> tokens) {
  for (auto& t : tokens)
    if (!t.empty())
      tokens_.push_back(std::move(t));
}

std::string PersonName::display() const {
  std::string out;
  for (const auto& t : tokens_) {
    if (!out.empty())
      out += ' ';
    out += t;
  }
  return out;
}

std::string PersonName::folded() const { return ascii_lower(display()); }

std::vector<std::string> PersonName::folded_tokens() const {
  std::vector<std::string> out;
  out.reserve(tokens_.size());
  for (const auto& t : tokens_)
    out.push_back(ascii_lower(t));
  return out;
}

} // namespace leakprobe

#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include "leakprobe/audit.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace leakprobe::testing {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& relative) { return fs::path(LEAKPROBE_FIXTURES) / relative; }

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// A local port nothing listens on: bound once, never listened, then closed.
inline int closed_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof addr;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("leakprobe-" + tag + "-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

private:
  fs::path path_;
};

struct SyntheticPerson {
  std::vector<std::string> name; // 1 to 3 tokens, capitalized
  std::string local;
  std::string domain;
  std::size_t occurrences = 0; // 0 for roster-only people
};

struct SyntheticFixture {
  fs::path mbox;
  fs::path roster;
  std::vector<SyntheticPerson> seen;
  std::vector<SyntheticPerson> unseen;
};

// A mailbox in which every seen person's address occurs 1 to 4 times, each
// time preceded by fresh random filler words, so every window of five or more
// words before an address is unique. Locals follow a random naming pattern or
// none at all. Unseen people share the domains but never occur.
inline SyntheticFixture write_synthetic(const fs::path& dir, std::size_t n_seen, std::size_t n_unseen,
                                        std::uint64_t seed) {
  static const char* firsts[] = {"Alma",  "Bruno", "Celia", "Dario",  "Edith", "Felix", "Greta", "Hugo",
                                 "Irene", "Jonas", "Kira",  "Lucas",  "Mira",  "Nolan", "Olga",  "Pavel",
                                 "Quinn", "Rosa",  "Soren", "Tilda",  "Uri",   "Vera",  "Wendel", "Xenia",
                                 "Yusuf", "Zora",  "Anton", "Bianca", "Cyril", "Dagny"};
  static const char* lasts[] = {"Abbott", "Brandt", "Castell", "Dunmore", "Eriksen", "Falk",    "Gruber",
                                "Holm",   "Ivers",  "Jansen",  "Kessler", "Lind",    "Moreau",  "Nyberg",
                                "Ortega", "Pryce",  "Quist",   "Rourke",  "Stahl",   "Thorne",  "Ulman",
                                "Vance",  "Wexler", "Yates",   "Zeller",  "Achebe",  "Bergman", "Cordova"};
  static const char* middles[] = {"Ann", "Lee", "Ray", "Jo", "May", "Kai", "Sue", "Tom"};
  static const char* domains[] = {"northwind.com", "globex.net", "initech.org", "hooli.io",  "vandelay.biz",
                                  "tyrell.com",    "wayne.org",  "stark.net",   "acme.co",   "oscorp.com"};

  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto lower = [](std::string s) {
    for (auto& c : s)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  auto filler = [&] {
    std::string w(7, 'a');
    for (auto& c : w)
      c = static_cast<char>('a' + pick(26));
    return w;
  };

  std::set<std::string> names, addresses;
  auto make_person = [&] {
    for (;;) {
      SyntheticPerson p;
      auto roll = pick(10);
      p.name.push_back(firsts[pick(std::size(firsts))]);
      if (roll >= 8)
        p.name.push_back(middles[pick(std::size(middles))]);
      if (roll >= 1)
        p.name.push_back(lasts[pick(std::size(lasts))]);
      std::string key;
      for (const auto& t : p.name)
        key += lower(t) + " ";
      if (names.count(key))
        continue;
      const auto& t = p.name;
      std::string f = lower(t.front()), l = lower(t.back()), m = t.size() == 3 ? lower(t[1]) : "";
      std::vector<std::string> options;
      if (t.size() == 1)
        options = {f, f + "1"};
      else if (t.size() == 2)
        options = {f + "." + l, f + "_" + l, f + l, l, f.substr(0, 1) + l, f + l.substr(0, 1),
                   l + f.substr(0, 1), "x" + f + "9"};
      else
        options = {f + "." + l, f + "." + m + "." + l, f.substr(0, 1) + m.substr(0, 1) + l, f.substr(0, 1) + l,
                   f + m + l, "mx" + l};
      p.local = options[pick(options.size())];
      p.domain = domains[pick(std::size(domains))];
      if (!addresses.insert(p.local + "@" + p.domain).second)
        continue;
      names.insert(key);
      return p;
    }
  };

  SyntheticFixture fx;
  fx.mbox = dir / "synthetic.mbox";
  fx.roster = dir / "roster.csv";
  for (std::size_t i = 0; i < n_seen; ++i) {
    auto p = make_person();
    p.occurrences = 1 + pick(4);
    fx.seen.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < n_unseen; ++i)
    fx.unseen.push_back(make_person());

  // Occurrences are shuffled across messages.
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < fx.seen.size(); ++i)
    slots.insert(slots.end(), fx.seen[i].occurrences, i);
  std::shuffle(slots.begin(), slots.end(), rng);

  std::ostringstream mbox;
  for (std::size_t msg = 0; msg < slots.size(); ++msg) {
    const auto& p = fx.seen[slots[msg]];
    mbox << "From archive@example.org Mon Jan  1 00:00:00 2001\n"
         << "Message-ID: <" << msg << "@synthetic>\n"
         << "Subject: note " << msg << "\n\n";
    for (int w = 0; w < 24; ++w)
      mbox << filler() << (w % 8 == 7 ? "\n" : " ");
    mbox << "write to " << p.local << "@" << p.domain << " today";
    for (int w = 0; w < 8; ++w)
      mbox << " " << filler();
    mbox << "\n\n";
  }
  spit(fx.mbox, mbox.str());

  std::ostringstream roster;
  roster << "email,name\n";
  auto row = [&](const SyntheticPerson& p) {
    std::string name;
    for (const auto& t : p.name)
      name += (name.empty() ? "" : " ") + t;
    roster << p.local << "@" << p.domain << "," << name << "\n";
  };
  for (const auto& p : fx.seen)
    row(p);
  for (const auto& p : fx.unseen)
    row(p);
  spit(fx.roster, roster.str());
  return fx;
}

// A mock-backed config over a synthetic fixture: corpus training, no
// association table, directory pattern guessing as fallback.
inline AuditConfig synthetic_config(const SyntheticFixture& fx, const fs::path& output,
                                    std::vector<AttackSetting> settings) {
  AuditConfig c;
  c.corpus_path = fx.mbox;
  c.corpus_format = MailboxFormat::concatenated;
  c.roster_path = fx.roster;
  c.settings = std::move(settings);
  c.backend.kind = BackendKind::mock;
  c.backend.mock.association = false;
  c.backend.mock.pattern_guess = true;
  c.backend.mock.domain_source = DomainSource::directory;
  c.run_seed = 7;
  c.output_dir = output;
  return c;
}

inline AttackSetting setting(AttackKind kind, std::uint64_t seed = 7) {
  AttackSetting s;
  s.kind = kind;
  s.seed = seed;
  return s;
}

} // namespace leakprobe::testing

#include <algorithm>
#include <cctype>
#include <deque>
#include <set>

#include "fwcorpus/acquire.hpp"

namespace fwcorpus::acquire {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct Group {
  std::vector<std::string> agents;
  std::vector<std::pair<std::string, bool>> rules;
};

}  // namespace

RobotsRules RobotsRules::parse(std::string_view text, std::string_view agent) {
  std::vector<Group> groups;
  bool in_agents = false;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const auto key = lower(trim(line.substr(0, colon)));
    const auto value = std::string(trim(line.substr(colon + 1)));

    if (key == "user-agent") {
      if (!in_agents) groups.emplace_back();
      groups.back().agents.push_back(lower(value));
      in_agents = true;
    } else if (key == "allow" || key == "disallow") {
      in_agents = false;
      if (groups.empty()) continue;
      // An empty Disallow allows everything, which is the default anyway.
      if (value.empty()) continue;
      groups.back().rules.emplace_back(value, key == "allow");
    } else {
      in_agents = false;
    }
  }

  const auto me = lower(agent);
  RobotsRules r;
  bool specific = false;
  for (const auto& g : groups) {
    for (const auto& a : g.agents) {
      if (a != "*" && !me.empty() && me.find(a) != std::string::npos) specific = true;
    }
  }
  for (const auto& g : groups) {
    const bool match = std::any_of(g.agents.begin(), g.agents.end(), [&](const std::string& a) {
      return specific ? (a != "*" && me.find(a) != std::string::npos) : a == "*";
    });
    if (match) r.rules_.insert(r.rules_.end(), g.rules.begin(), g.rules.end());
  }
  return r;
}

bool RobotsRules::allowed(std::string_view path) const {
  std::size_t best_len = 0;
  bool verdict = true;
  bool found = false;
  for (const auto& [prefix, allow] : rules_) {
    if (path.substr(0, prefix.size()) != prefix) continue;
    // Longest prefix wins; Allow wins ties.
    if (!found || prefix.size() > best_len || (prefix.size() == best_len && allow)) {
      best_len = prefix.size();
      verdict = allow;
      found = true;
    }
  }
  return verdict;
}

RobotsCache::RobotsCache(HttpClient& http, std::string agent) : http_(http), agent_(std::move(agent)) {}

bool RobotsCache::allowed(const std::string& url) {
  const auto u = parse_url(url);
  if (!u) return true;
  const auto origin = u->origin();
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(origin); it != cache_.end()) return it->second.allowed(u->target);
  }
  const auto res = http_.get(origin + "/robots.txt");
  auto rules = res.status == 200 ? RobotsRules::parse(as_chars(res.body), agent_) : RobotsRules{};
  std::lock_guard lock(mu_);
  auto it = cache_.emplace(origin, std::move(rules)).first;
  return it->second.allowed(u->target);
}

CrawlResult crawl(ScraperAdapter& adapter, HttpClient& http, RobotsCache& robots, std::size_t max_pages) {
  CrawlResult out;
  std::deque<std::string> queue;
  std::set<std::string> seen;
  for (auto& u : adapter.start_urls()) {
    if (seen.insert(u).second) queue.push_back(u);
  }
  std::size_t fetched = 0;
  while (!queue.empty() && fetched < max_pages) {
    const auto url = queue.front();
    queue.pop_front();
    if (!robots.allowed(url)) {
      out.skipped_by_robots.push_back(url);
      continue;
    }
    ++fetched;
    const auto res = http.get(url);
    if (res.status != 200) {
      out.failed.push_back(url);
      continue;
    }
    auto page = adapter.parse_page(url, as_chars(res.body));
    out.records.insert(out.records.end(), std::make_move_iterator(page.records.begin()),
                       std::make_move_iterator(page.records.end()));
    for (auto& next : page.follow) {
      if (seen.insert(next).second) queue.push_back(std::move(next));
    }
  }
  return out;
}

}  // namespace fwcorpus::acquire

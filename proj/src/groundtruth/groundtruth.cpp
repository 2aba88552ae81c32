#include <algorithm>
#include <cctype>
#include <limits>

#include <json.hpp>

#include "fwcorpus/error.hpp"
#include "fwcorpus/groundtruth.hpp"
#include "fwcorpus/text_table.hpp"

namespace fwcorpus::groundtruth {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Reads a run of digits, saturating instead of overflowing.
std::uint64_t read_number(std::string_view s, std::size_t& pos) {
  std::uint64_t v = 0;
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  while (pos < s.size() && is_digit(s[pos])) {
    const auto d = static_cast<std::uint64_t>(s[pos] - '0');
    v = v > (kMax - d) / 10 ? kMax : v * 10 + d;
    ++pos;
  }
  return v;
}

Version parse_operand(std::string_view s, std::string_view constraint) {
  auto v = parse_version(s);
  if (!v) throw ParseError("malformed version constraint: " + std::string(constraint));
  return *v;
}

}  // namespace

std::string Version::str() const {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(segments[i]);
  }
  return out + suffix;
}

std::optional<Version> parse_version(std::string_view s) {
  s = trim(s);
  if (!s.empty() && (s.front() == 'v' || s.front() == 'V')) s.remove_prefix(1);
  if (s.empty() || !is_digit(s.front())) return std::nullopt;

  Version v;
  std::size_t pos = 0;
  v.segments.push_back(read_number(s, pos));
  while (pos + 1 < s.size() && s[pos] == '.' && is_digit(s[pos + 1])) {
    ++pos;
    v.segments.push_back(read_number(s, pos));
  }
  v.suffix = std::string(s.substr(pos));
  return v;
}

std::weak_ordering compare(const Version& a, const Version& b) {
  const auto n = std::max(a.segments.size(), b.segments.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = i < a.segments.size() ? a.segments[i] : 0;
    const auto y = i < b.segments.size() ? b.segments[i] : 0;
    if (x != y) return x < y ? std::weak_ordering::less : std::weak_ordering::greater;
  }
  if (a.suffix == b.suffix) return std::weak_ordering::equivalent;
  if (a.suffix.empty()) return std::weak_ordering::less;
  if (b.suffix.empty()) return std::weak_ordering::greater;
  return a.suffix < b.suffix ? std::weak_ordering::less : std::weak_ordering::greater;
}

VersionConstraint VersionConstraint::parse(std::string_view text) {
  VersionConstraint c;
  const auto t = trim(text);
  c.text = std::string(t);
  struct Prefix {
    std::string_view token;
    ConstraintOp op;
  };
  // Two-character operators first.
  for (const auto& [token, op] : {Prefix{"==", ConstraintOp::Eq}, Prefix{"<=", ConstraintOp::Le},
                                  Prefix{">=", ConstraintOp::Ge}, Prefix{"<", ConstraintOp::Lt},
                                  Prefix{">", ConstraintOp::Gt}}) {
    if (t.substr(0, token.size()) == token) {
      c.op = op;
      c.lo = parse_operand(t.substr(token.size()), t);
      return c;
    }
  }
  const auto dots = t.find("..");
  if (dots == std::string_view::npos) throw ParseError("malformed version constraint: " + c.text);
  c.op = ConstraintOp::Range;
  c.lo = parse_operand(t.substr(0, dots), t);
  c.hi = parse_operand(t.substr(dots + 2), t);
  if (compare(c.lo, c.hi) == std::weak_ordering::greater) {
    throw ParseError("empty version range: " + c.text);
  }
  return c;
}

bool VersionConstraint::satisfied_by(const Version& v) const {
  const auto cmp = compare(v, lo);
  switch (op) {
    case ConstraintOp::Eq: return cmp == 0;
    case ConstraintOp::Lt: return cmp < 0;
    case ConstraintOp::Le: return cmp <= 0;
    case ConstraintOp::Gt: return cmp > 0;
    case ConstraintOp::Ge: return cmp >= 0;
    case ConstraintOp::Range: break;
  }
  return cmp >= 0 && compare(v, hi) <= 0;
}

bool version_satisfies(const Version& v, const VersionConstraint& c) { return c.satisfied_by(v); }

std::string_view to_string(Confidence c) {
  return c == Confidence::Automatic ? "automatic" : "manually_confirmed";
}

std::string normalize_name(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string normalize_pattern(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '*' || c == '?') out += c;
    else if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool glob_match(std::string_view pattern, std::string_view text) {
  // Iterative matcher with single-star backtracking.
  std::size_t p = 0, t = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::vector<ExploitEntry> parse_exploit_db(std::string_view text) {
  std::vector<ExploitEntry> out;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto where = "exploit db line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw ParseError(where + "malformed JSON");
    }
    if (!j.is_object()) throw ParseError(where + "expected an object");

    auto str = [&](const char* key, bool required) -> std::string {
      if (!j.contains(key) || j[key].is_null()) {
        if (required) throw ParseError(where + "missing " + key);
        return {};
      }
      if (!j[key].is_string()) throw ParseError(where + key + " must be a string");
      return j[key].get<std::string>();
    };

    ExploitEntry e;
    e.id = str("id", true);
    e.manufacturer_pattern = str("manufacturer", true);
    e.model_pattern = str("model", true);
    e.advisory_ref = str("advisory_ref", false);
    if (j.contains("cve_ids")) {
      if (!j["cve_ids"].is_array()) throw ParseError(where + "cve_ids must be a list");
      for (const auto& c : j["cve_ids"]) {
        if (!c.is_string()) throw ParseError(where + "cve_ids must hold strings");
        e.cve_ids.push_back(c.get<std::string>());
      }
    }
    if (e.id.empty()) throw ParseError(where + "empty id");
    if (e.cve_ids.empty() && e.advisory_ref.empty()) throw ParseError(where + "needs cve_ids or advisory_ref");
    try {
      e.version_constraint = VersionConstraint::parse(str("version_constraint", true));
    } catch (const ParseError& err) {
      throw ParseError(where + err.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

MatchResult match_exploits(const manifest::CorpusManifest& m, const std::vector<ExploitEntry>& db) {
  struct Prepared {
    std::string manufacturer;
    std::string model;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(db.size());
  for (const auto& e : db) prepared.push_back({normalize_name(e.manufacturer_pattern), normalize_pattern(e.model_pattern)});

  MatchResult result;
  for (const auto& r : m.records) {
    const auto version = parse_version(r.firmware_version);
    if (!version) {
      result.unparseable_versions.push_back(r.sha256 + ": " + r.firmware_version);
      continue;
    }
    const auto manufacturer = normalize_name(r.manufacturer);
    const auto model = normalize_name(r.model);
    for (std::size_t i = 0; i < db.size(); ++i) {
      if (prepared[i].manufacturer != manufacturer || !glob_match(prepared[i].model, model)) continue;
      if (!db[i].version_constraint.satisfied_by(*version)) continue;
      result.matches.push_back({r.sha256, db[i].id, db[i].cve_ids, Confidence::Automatic,
                                "version " + version->str() + " satisfies " + db[i].version_constraint.text});
    }
  }
  return result;
}

std::string match_csv(const std::vector<GroundTruthMatch>& matches) {
  std::string out = csv_line({"sha256", "exploit_id", "cve_ids", "confidence"});
  for (const auto& mt : matches) {
    std::string cves;
    for (const auto& c : mt.cve_ids) cves += (cves.empty() ? "" : ";") + c;
    out += csv_line({mt.record_sha256, mt.exploit_id, cves, std::string(to_string(mt.confidence))});
  }
  return out;
}

}  // namespace fwcorpus::groundtruth

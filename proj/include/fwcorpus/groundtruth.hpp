#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fwcorpus/manifest.hpp"

namespace fwcorpus::groundtruth {

struct Version {
  std::vector<std::uint64_t> segments;
  std::string suffix;

  std::string str() const;
};

// Leading "v"/"V" stripped, dot-separated numeric segments, remaining tail
// kept as suffix. nullopt when no numeric segment leads the string.
std::optional<Version> parse_version(std::string_view s);

// Numeric segments compared with zero padding, then an empty suffix sorts
// before any non-empty one, then suffixes compare lexicographically.
std::weak_ordering compare(const Version& a, const Version& b);

enum class ConstraintOp { Eq, Lt, Le, Gt, Ge, Range };

struct VersionConstraint {
  ConstraintOp op = ConstraintOp::Eq;
  Version lo;  // the operand, or the lower bound of a range
  Version hi;  // upper bound, ranges only
  std::string text;

  // "==X", "<X", "<=X", ">X", ">=X", "X..Y" (inclusive). Throws ParseError.
  static VersionConstraint parse(std::string_view text);
  bool satisfied_by(const Version& v) const;
};

bool version_satisfies(const Version& v, const VersionConstraint& c);

enum class Confidence { Automatic, ManuallyConfirmed };
std::string_view to_string(Confidence c);

struct ExploitEntry {
  std::string id;
  std::vector<std::string> cve_ids;
  std::string manufacturer_pattern;
  std::string model_pattern;  // may contain '*' and '?'
  VersionConstraint version_constraint;
  std::string advisory_ref;
};

// Lowercase, ASCII alphanumerics only.
std::string normalize_name(std::string_view s);
// Like normalize_name but keeps glob metacharacters.
std::string normalize_pattern(std::string_view s);
bool glob_match(std::string_view pattern, std::string_view text);

// JSON lines: {"id", "cve_ids": [...], "manufacturer", "model",
// "version_constraint", "advisory_ref"}. Throws ParseError with the line
// number on malformed or invalid entries.
std::vector<ExploitEntry> parse_exploit_db(std::string_view text);

struct GroundTruthMatch {
  std::string record_sha256;
  std::string exploit_id;
  std::vector<std::string> cve_ids;
  Confidence confidence = Confidence::Automatic;
  std::string note;
  friend bool operator==(const GroundTruthMatch&, const GroundTruthMatch&) = default;
};

struct MatchResult {
  std::vector<GroundTruthMatch> matches;  // record order, then db order
  std::vector<std::string> unparseable_versions;  // "<sha256>: <version>"
};

MatchResult match_exploits(const manifest::CorpusManifest& m, const std::vector<ExploitEntry>& db);

// CSV: sha256,exploit_id,cve_ids,confidence
std::string match_csv(const std::vector<GroundTruthMatch>& matches);

}  // namespace fwcorpus::groundtruth

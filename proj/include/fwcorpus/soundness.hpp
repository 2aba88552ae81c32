#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fwcorpus/digest.hpp"
#include "fwcorpus/manifest.hpp"

namespace fwcorpus::soundness {

enum class Measure {
  PackedCount,
  UnpackedCount,
  Deduplication,
  UnpackProcess,
  Reasoning,
  Acquisition,
  Vulnerabilities,
  ReleaseDates,
  Versions,
  Links,
  Hashes,
  Manufacturers,
  Models,
  DeviceClasses,
  Isas,
  FwTypes,
};
inline constexpr std::size_t kMeasureCount = 16;

enum class Requirement { GroundTruth, Relevance, CleanData, RichMetaData, Documentation, Heterogeneity };
inline constexpr std::size_t kRequirementCount = 6;

enum class Status { Full, Partial, None, NotApplicable };

enum class EvidenceSource { Text, FigureOrTable, SharedMetaData, SampleList, References, SharedSamples };

const std::array<Measure, kMeasureCount>& all_measures();
const std::array<Requirement, kRequirementCount>& all_requirements();

std::string_view to_string(Measure m);
std::string_view to_string(Requirement r);  // "R1 Ground Truth"
std::string_view short_name(Requirement r);  // "R1"
std::string_view to_string(Status s);
std::string_view to_string(EvidenceSource e);
std::optional<Measure> measure_from_string(std::string_view s);
std::optional<Status> status_from_string(std::string_view s);
std::optional<EvidenceSource> evidence_from_string(std::string_view s);

// Which measures feed a requirement.
const std::vector<Measure>& measures_for(Requirement r);
bool applies(Requirement r, Measure m);

// Rubric groups of the fulfillment catalogue.
enum class MeasureGroup { Quantities, Process, FileProperties, SelectionAndGroundTruth };
MeasureGroup group_of(Measure m);
std::string_view to_string(MeasureGroup g);
// Evidence sources that can back a Full rating for this measure.
const std::set<EvidenceSource>& allowed_evidence(Measure m);
// False for groups whose catalogue entry prints no source list; those borrow
// the closest printed list and are flagged in reports.
bool evidence_list_printed(MeasureGroup g);

struct MeasureEntry {
  Status status = Status::None;
  std::set<EvidenceSource> evidence;
  std::string note;
  std::string annotation;  // raw printed value, e.g. "32,356" or "S;R"

  friend bool operator==(const MeasureEntry&, const MeasureEntry&) = default;
};

struct MeasureAssessment {
  std::string subject;
  std::array<MeasureEntry, kMeasureCount> measures{};

  MeasureEntry& at(Measure m) { return measures[static_cast<std::size_t>(m)]; }
  const MeasureEntry& at(Measure m) const { return measures[static_cast<std::size_t>(m)]; }
};

struct RubricViolation {
  Measure measure;
  std::string rule;
};

std::vector<RubricViolation> validate_assessment(const MeasureAssessment& a);

struct StatusCounts {
  std::size_t full = 0;
  std::size_t partial = 0;
  std::size_t none = 0;
  std::size_t not_applicable = 0;

  std::size_t applicable() const { return full + partial + none; }
  std::size_t count(Status s) const;
  // Share among applicable data points; 0 when nothing applies.
  double fraction(Status s) const;
  void add(Status s);
  friend bool operator==(const StatusCounts&, const StatusCounts&) = default;
};

using MeasureAggregate = std::array<StatusCounts, kMeasureCount>;
using RequirementAggregate = std::array<StatusCounts, kRequirementCount>;

// Both throw ValidationError on duplicate subject ids.
MeasureAggregate aggregate_by_measure(const std::vector<MeasureAssessment>& assessments);
RequirementAggregate aggregate_by_requirement(const std::vector<MeasureAssessment>& assessments);

struct SoundnessReport {
  std::size_t subjects = 0;
  MeasureAggregate per_measure{};
  RequirementAggregate per_requirement{};

  std::size_t data_points() const { return subjects * kMeasureCount; }
  std::size_t not_applicable_points() const;
};

SoundnessReport soundness_report(const std::vector<MeasureAssessment>& assessments);

std::string report_csv(const SoundnessReport& r);
std::string report_table(const SoundnessReport& r);

// ---------------------------------------------------------------------------
// Survey fixture (one row per reviewed paper, printed cell values).

// Cell grammar: ';'-separated parts; "yes" -> Full, "no" -> None,
// "unclear[ text]" -> Partial, "na" -> NotApplicable, anything else (counts,
// acquisition letters) -> Full. A multi-part cell takes its weakest part.
MeasureEntry parse_survey_cell(std::string_view cell);

// Tab-separated: subject then 16 cells. '#' starts a comment line.
std::vector<MeasureAssessment> parse_survey_table(std::string_view text);

// The bundled review of 44 papers.
std::string_view builtin_survey_text();
std::vector<MeasureAssessment> builtin_survey();

// JSON lines: {"subject": ..., "measures": {"Hashes": {"status": "full",
// "evidence": ["text"], "note": ""}, ...}}. Missing measures are None.
std::vector<MeasureAssessment> parse_assessments_jsonl(std::string_view text);
std::string assessment_to_json(const MeasureAssessment& a);

// ---------------------------------------------------------------------------
// Corpus self-audit

struct DocumentationFlags {
  Status unpack_process = Status::None;
  Status reasoning = Status::None;
  Status acquisition = Status::None;
  Status vulnerabilities = Status::None;
};

struct AuditArtifacts {
  const digest::DedupResult* dedup = nullptr;
  // sample sha256 -> identified ISA labels
  const std::map<std::string, std::vector<std::string>>* isas = nullptr;
  DocumentationFlags docs;
};

MeasureAssessment score_corpus_manifest(const manifest::CorpusManifest& m,
                                        const AuditArtifacts& artifacts,
                                        std::string subject = "corpus");

// One row shaped like the survey table.
std::string assessment_table(const MeasureAssessment& a);
std::string assessment_csv(const MeasureAssessment& a);

}  // namespace fwcorpus::soundness

#include <algorithm>
#include <cctype>

#include "fwcorpus/soundness.hpp"

namespace fwcorpus::soundness {

namespace {

using M = Measure;
using E = EvidenceSource;

constexpr std::array<std::string_view, kMeasureCount> kMeasureNames{
    "PackedCount",  "UnpackedCount", "Deduplication",   "UnpackProcess", "Reasoning",     "Acquisition",
    "Vulnerabilities", "ReleaseDates", "Versions",      "Links",         "Hashes",        "Manufacturers",
    "Models",       "DeviceClasses", "Isas",            "FwTypes"};

constexpr std::array<std::string_view, 4> kStatusNames{"full", "partial", "none", "na"};

constexpr std::array<std::string_view, 6> kEvidenceNames{"text",        "figure_or_table", "shared_meta_data",
                                                         "sample_list", "references",      "shared_samples"};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

const std::array<Measure, kMeasureCount>& all_measures() {
  static const std::array<Measure, kMeasureCount> all{
      M::PackedCount,  M::UnpackedCount, M::Deduplication, M::UnpackProcess, M::Reasoning, M::Acquisition,
      M::Vulnerabilities, M::ReleaseDates, M::Versions,   M::Links,         M::Hashes,    M::Manufacturers,
      M::Models,       M::DeviceClasses, M::Isas,          M::FwTypes};
  return all;
}

const std::array<Requirement, kRequirementCount>& all_requirements() {
  static const std::array<Requirement, kRequirementCount> all{
      Requirement::GroundTruth,  Requirement::Relevance,     Requirement::CleanData,
      Requirement::RichMetaData, Requirement::Documentation, Requirement::Heterogeneity};
  return all;
}

std::string_view to_string(Measure m) { return kMeasureNames[static_cast<std::size_t>(m)]; }

std::string_view to_string(Requirement r) {
  switch (r) {
    case Requirement::GroundTruth: return "R1 Ground Truth";
    case Requirement::Relevance: return "R2 Relevance";
    case Requirement::CleanData: return "R3 Clean Data";
    case Requirement::RichMetaData: return "R4 Rich Meta Data";
    case Requirement::Documentation: return "R5 Documentation";
    case Requirement::Heterogeneity: break;
  }
  return "R6 Heterogeneity";
}

std::string_view short_name(Requirement r) { return to_string(r).substr(0, 2); }

std::string_view to_string(Status s) { return kStatusNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(EvidenceSource e) { return kEvidenceNames[static_cast<std::size_t>(e)]; }

std::optional<Measure> measure_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kMeasureCount; ++i) {
    if (iequals(kMeasureNames[i], s)) return static_cast<Measure>(i);
  }
  return std::nullopt;
}

std::optional<Status> status_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
    if (iequals(kStatusNames[i], s)) return static_cast<Status>(i);
  }
  if (iequals(s, "not_applicable")) return Status::NotApplicable;
  return std::nullopt;
}

std::optional<EvidenceSource> evidence_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kEvidenceNames.size(); ++i) {
    if (iequals(kEvidenceNames[i], s)) return static_cast<EvidenceSource>(i);
  }
  return std::nullopt;
}

const std::vector<Measure>& measures_for(Requirement r) {
  static const std::array<std::vector<Measure>, kRequirementCount> table{{
      {M::Vulnerabilities},
      {M::ReleaseDates, M::Versions, M::Manufacturers, M::Models, M::DeviceClasses, M::Isas, M::FwTypes},
      {M::PackedCount, M::UnpackedCount, M::Deduplication},
      {M::ReleaseDates, M::Versions, M::Links, M::Hashes, M::Manufacturers, M::Models, M::DeviceClasses, M::Isas,
       M::FwTypes},
      {M::Deduplication, M::UnpackProcess, M::Reasoning, M::Acquisition},
      {M::UnpackedCount, M::Manufacturers, M::Models, M::DeviceClasses, M::Isas, M::FwTypes},
  }};
  return table[static_cast<std::size_t>(r)];
}

bool applies(Requirement r, Measure m) {
  const auto& ms = measures_for(r);
  return std::find(ms.begin(), ms.end(), m) != ms.end();
}

MeasureGroup group_of(Measure m) {
  switch (m) {
    case M::PackedCount:
    case M::UnpackedCount:
    case M::Manufacturers:
    case M::Models:
    case M::DeviceClasses:
    case M::Isas: return MeasureGroup::Quantities;
    case M::Deduplication:
    case M::UnpackProcess:
    case M::Acquisition: return MeasureGroup::Process;
    case M::ReleaseDates:
    case M::Versions:
    case M::Links:
    case M::Hashes:
    case M::FwTypes: return MeasureGroup::FileProperties;
    case M::Reasoning:
    case M::Vulnerabilities: break;
  }
  return MeasureGroup::SelectionAndGroundTruth;
}

std::string_view to_string(MeasureGroup g) {
  switch (g) {
    case MeasureGroup::Quantities: return "quantities";
    case MeasureGroup::Process: return "process";
    case MeasureGroup::FileProperties: return "file_properties";
    case MeasureGroup::SelectionAndGroundTruth: break;
  }
  return "selection_and_ground_truth";
}

bool evidence_list_printed(MeasureGroup g) { return g != MeasureGroup::SelectionAndGroundTruth; }

const std::set<EvidenceSource>& allowed_evidence(Measure m) {
  static const std::set<E> counted{E::Text, E::FigureOrTable, E::SharedMetaData, E::SampleList};
  static const std::set<E> properties{E::Text, E::References, E::FigureOrTable, E::SharedMetaData};
  static const std::set<E> shareable{E::Text, E::References, E::FigureOrTable, E::SharedMetaData, E::SharedSamples};
  switch (group_of(m)) {
    case MeasureGroup::FileProperties:
      return (m == M::Links || m == M::Hashes) ? shareable : properties;
    case MeasureGroup::Quantities:
    case MeasureGroup::Process:
    // No printed list for this group; it borrows the quantities list.
    case MeasureGroup::SelectionAndGroundTruth: break;
  }
  return counted;
}

}  // namespace fwcorpus::soundness

#include <set>

#include "fwcorpus/soundness.hpp"
#include "fwcorpus/text_table.hpp"

namespace fwcorpus::soundness {

namespace {

using manifest::FirmwareRecord;

// Full if every record passes, Partial if some do, None otherwise.
template <typename Pred>
Status coverage(const std::vector<FirmwareRecord>& records, Pred has) {
  std::size_t n = 0;
  for (const auto& r : records) n += has(r) ? 1 : 0;
  if (records.empty() || n == 0) return Status::None;
  return n == records.size() ? Status::Full : Status::Partial;
}

MeasureEntry entry(Status s, EvidenceSource src, std::string annotation = {}) {
  MeasureEntry e;
  e.status = s;
  if (s == Status::Full || s == Status::Partial) e.evidence = {src};
  e.annotation = std::move(annotation);
  return e;
}

template <typename Key>
std::string distinct(const std::vector<FirmwareRecord>& records, Key key) {
  std::set<std::string> values;
  for (const auto& r : records) values.insert(key(r));
  return std::to_string(values.size());
}

std::string cell_text(const MeasureEntry& e) {
  if (e.status == Status::Full && !e.annotation.empty()) return e.annotation;
  switch (e.status) {
    case Status::Full: return "yes";
    case Status::Partial: return e.annotation.empty() ? "unclear" : "unclear " + e.annotation;
    case Status::None: return "no";
    case Status::NotApplicable: break;
  }
  return "na";
}

}  // namespace

MeasureAssessment score_corpus_manifest(const manifest::CorpusManifest& m, const AuditArtifacts& artifacts,
                                        std::string subject) {
  const auto& rs = m.records;
  const auto meta = EvidenceSource::SharedMetaData;
  MeasureAssessment a;
  a.subject = std::move(subject);

  a.at(Measure::PackedCount) = entry(Status::Full, meta, std::to_string(rs.size()));

  std::size_t unpacked = 0;
  for (const auto& r : rs) unpacked += r.unpack_status == manifest::UnpackStatus::Unpacked ? 1 : 0;
  a.at(Measure::UnpackedCount) =
      entry(coverage(rs, [](const FirmwareRecord& r) { return r.unpack_status != manifest::UnpackStatus::Untested; }),
            meta, std::to_string(unpacked));

  a.at(Measure::Deduplication) = entry(artifacts.dedup ? Status::Full : Status::None, meta);
  a.at(Measure::UnpackProcess) = entry(artifacts.docs.unpack_process, EvidenceSource::Text);
  a.at(Measure::Reasoning) = entry(artifacts.docs.reasoning, EvidenceSource::Text);
  a.at(Measure::Acquisition) = entry(artifacts.docs.acquisition, EvidenceSource::Text);
  a.at(Measure::Vulnerabilities) = entry(artifacts.docs.vulnerabilities, EvidenceSource::Text);

  a.at(Measure::ReleaseDates) = entry(coverage(rs, [](const FirmwareRecord& r) { return r.release_date.has_value(); }), meta);
  a.at(Measure::Versions) = entry(coverage(rs, [](const FirmwareRecord& r) { return !r.firmware_version.empty(); }), meta);
  a.at(Measure::Links) = entry(coverage(rs, [](const FirmwareRecord& r) { return r.download_url.has_value(); }), meta);
  a.at(Measure::Hashes) = entry(coverage(rs, [](const FirmwareRecord& r) { return !r.sha256.empty(); }), meta);

  a.at(Measure::Manufacturers) =
      entry(coverage(rs, [](const FirmwareRecord& r) { return !r.manufacturer.empty(); }), meta,
            distinct(rs, [](const FirmwareRecord& r) { return r.manufacturer; }));
  a.at(Measure::Models) = entry(coverage(rs, [](const FirmwareRecord& r) { return !r.model.empty(); }), meta,
                                distinct(rs, [](const FirmwareRecord& r) { return r.manufacturer + "\n" + r.model; }));
  a.at(Measure::DeviceClasses) =
      entry(coverage(rs, [](const FirmwareRecord& r) { return !r.device_class.empty(); }), meta,
            distinct(rs, [](const FirmwareRecord& r) { return r.device_class; }));

  if (artifacts.isas) {
    const auto& isas = *artifacts.isas;
    std::set<std::string> labels;
    for (const auto& r : rs) {
      if (auto it = isas.find(r.sha256); it != isas.end()) labels.insert(it->second.begin(), it->second.end());
    }
    a.at(Measure::Isas) = entry(coverage(rs,
                                         [&](const FirmwareRecord& r) {
                                           auto it = isas.find(r.sha256);
                                           return it != isas.end() && !it->second.empty();
                                         }),
                                meta, std::to_string(labels.size()));
  } else {
    a.at(Measure::Isas) = entry(Status::None, meta);
  }

  std::set<std::string> types;
  for (const auto& r : rs) {
    if (r.firmware_type != manifest::FirmwareType::Unknown) types.insert(std::string(manifest::to_string(r.firmware_type)));
  }
  std::string type_list;
  for (const auto& t : types) type_list += (type_list.empty() ? "" : ",") + t;
  a.at(Measure::FwTypes) = entry(
      coverage(rs, [](const FirmwareRecord& r) { return r.firmware_type != manifest::FirmwareType::Unknown; }), meta,
      type_list);

  // Counts only make sense for the quantity measures when nothing is missing.
  for (auto ms : all_measures()) {
    auto& e = a.at(ms);
    if (e.status == Status::None) e.annotation.clear();
  }
  return a;
}

std::string assessment_table(const MeasureAssessment& a) {
  // Sixteen columns do not fit a terminal; print one measure per line.
  TextTable t({"Measure", "Status", "Value", "Evidence"});
  for (auto m : all_measures()) {
    const auto& e = a.at(m);
    std::string ev;
    for (auto src : e.evidence) ev += (ev.empty() ? "" : ",") + std::string(to_string(src));
    t.add_row({std::string(to_string(m)), std::string(to_string(e.status)), cell_text(e), ev});
  }
  return a.subject + "\n" + t.render();
}

std::string assessment_csv(const MeasureAssessment& a) {
  std::vector<std::string> header{"subject"};
  std::vector<std::string> row{a.subject};
  for (auto m : all_measures()) {
    header.emplace_back(to_string(m));
    row.push_back(cell_text(a.at(m)));
  }
  return csv_line(header) + csv_line(row);
}

}  // namespace fwcorpus::soundness

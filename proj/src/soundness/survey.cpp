#include <json.hpp>

#include "fwcorpus/error.hpp"
#include "fwcorpus/soundness.hpp"

namespace fwcorpus::soundness {

namespace {

constexpr std::string_view kNaNote = "marked not applicable to the subject's research question";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Lower rank is weaker.
int rank(Status s) {
  switch (s) {
    case Status::None: return 0;
    case Status::Partial: return 1;
    case Status::Full: return 2;
    case Status::NotApplicable: break;
  }
  return 3;
}

Status part_status(std::string_view part) {
  if (!part.empty() && part.front() == '\\') part.remove_prefix(1);
  if (part == "yes") return Status::Full;
  if (part == "no") return Status::None;
  if (part == "na" || part == "notapplicable") return Status::NotApplicable;
  if (part.substr(0, 7) == "unclear") return Status::Partial;
  return Status::Full;
}

}  // namespace

MeasureEntry parse_survey_cell(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) throw ParseError("empty survey cell");

  MeasureEntry e;
  e.annotation = std::string(cell);
  Status status = Status::NotApplicable;
  std::size_t start = 0;
  while (start <= cell.size()) {
    auto end = cell.find(';', start);
    if (end == std::string_view::npos) end = cell.size();
    const auto part = trim(cell.substr(start, end - start));
    if (part.empty()) throw ParseError("empty part in survey cell '" + e.annotation + "'");
    const auto s = part_status(part);
    if (rank(s) < rank(status)) status = s;
    start = end + 1;
  }
  e.status = status;
  if (status == Status::Full || status == Status::Partial) e.evidence = {EvidenceSource::Text};
  if (status == Status::NotApplicable) e.note = std::string(kNaNote);
  return e;
}

std::vector<MeasureAssessment> parse_survey_table(std::string_view text) {
  std::vector<MeasureAssessment> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;

    std::vector<std::string_view> cells;
    std::size_t p = 0;
    while (p <= line.size()) {
      auto q = line.find('\t', p);
      if (q == std::string_view::npos) q = line.size();
      cells.push_back(line.substr(p, q - p));
      p = q + 1;
    }
    if (cells.size() != kMeasureCount + 1) {
      throw ParseError("survey line " + std::to_string(line_no) + ": expected " + std::to_string(kMeasureCount + 1) +
                       " cells, got " + std::to_string(cells.size()));
    }
    MeasureAssessment a;
    a.subject = std::string(trim(cells[0]));
    if (a.subject.empty()) throw ParseError("survey line " + std::to_string(line_no) + ": empty subject");
    for (std::size_t i = 0; i < kMeasureCount; ++i) {
      try {
        a.measures[i] = parse_survey_cell(cells[i + 1]);
      } catch (const ParseError& err) {
        throw ParseError("survey line " + std::to_string(line_no) + ": " + err.what());
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<MeasureAssessment> builtin_survey() { return parse_survey_table(builtin_survey_text()); }

std::vector<MeasureAssessment> parse_assessments_jsonl(std::string_view text) {
  std::vector<MeasureAssessment> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;

    const auto where = "assessment line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw ParseError(where + ": malformed JSON");
    }
    if (!j.is_object() || !j.contains("subject") || !j["subject"].is_string()) {
      throw ParseError(where + ": missing subject");
    }
    MeasureAssessment a;
    a.subject = j["subject"].get<std::string>();
    if (j.contains("measures")) {
      if (!j["measures"].is_object()) throw ParseError(where + ": measures must be an object");
      for (const auto& [key, value] : j["measures"].items()) {
        const auto m = measure_from_string(key);
        if (!m) throw ParseError(where + ": unknown measure " + key);
        if (!value.is_object() || !value.contains("status") || !value["status"].is_string()) {
          throw ParseError(where + ": " + key + " needs a status");
        }
        auto& e = a.at(*m);
        const auto status = status_from_string(value["status"].get<std::string>());
        if (!status) throw ParseError(where + ": unknown status for " + key);
        e.status = *status;
        if (value.contains("evidence")) {
          if (!value["evidence"].is_array()) throw ParseError(where + ": evidence must be a list");
          for (const auto& src : value["evidence"]) {
            const auto ev = src.is_string() ? evidence_from_string(src.get<std::string>()) : std::nullopt;
            if (!ev) throw ParseError(where + ": unknown evidence source for " + key);
            e.evidence.insert(*ev);
          }
        }
        if (value.contains("note") && value["note"].is_string()) e.note = value["note"].get<std::string>();
        if (value.contains("annotation") && value["annotation"].is_string()) {
          e.annotation = value["annotation"].get<std::string>();
        }
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::string assessment_to_json(const MeasureAssessment& a) {
  nlohmann::ordered_json j;
  j["subject"] = a.subject;
  auto& measures = j["measures"] = nlohmann::ordered_json::object();
  for (auto m : all_measures()) {
    const auto& e = a.at(m);
    nlohmann::ordered_json v;
    v["status"] = std::string(to_string(e.status));
    auto ev = nlohmann::ordered_json::array();
    for (auto src : e.evidence) ev.push_back(std::string(to_string(src)));
    v["evidence"] = std::move(ev);
    v["note"] = e.note;
    if (!e.annotation.empty()) v["annotation"] = e.annotation;
    measures[std::string(to_string(m))] = std::move(v);
  }
  return j.dump();
}

}  // namespace fwcorpus::soundness

#include <set>

#include "fwcorpus/error.hpp"
#include "fwcorpus/soundness.hpp"
#include "fwcorpus/text_table.hpp"

namespace fwcorpus::soundness {

std::vector<RubricViolation> validate_assessment(const MeasureAssessment& a) {
  std::vector<RubricViolation> out;
  for (auto m : all_measures()) {
    const auto& e = a.at(m);
    switch (e.status) {
      case Status::Full: {
        const auto& allowed = allowed_evidence(m);
        bool ok = false;
        for (auto src : e.evidence) ok = ok || allowed.count(src);
        if (!ok) {
          out.push_back({m, e.evidence.empty() ? "full rating without evidence source"
                                               : "full rating without an evidence source allowed for " +
                                                     std::string(to_string(group_of(m)))});
        }
        break;
      }
      case Status::NotApplicable:
        if (!e.evidence.empty()) out.push_back({m, "not applicable rating with evidence sources"});
        if (e.note.empty()) out.push_back({m, "not applicable rating without a note"});
        break;
      case Status::Partial:
      case Status::None: break;
    }
  }
  return out;
}

std::size_t StatusCounts::count(Status s) const {
  switch (s) {
    case Status::Full: return full;
    case Status::Partial: return partial;
    case Status::None: return none;
    case Status::NotApplicable: break;
  }
  return not_applicable;
}

double StatusCounts::fraction(Status s) const {
  if (s == Status::NotApplicable || applicable() == 0) return 0.0;
  return static_cast<double>(count(s)) / static_cast<double>(applicable());
}

void StatusCounts::add(Status s) {
  switch (s) {
    case Status::Full: ++full; break;
    case Status::Partial: ++partial; break;
    case Status::None: ++none; break;
    case Status::NotApplicable: ++not_applicable; break;
  }
}

namespace {

void check_unique(const std::vector<MeasureAssessment>& assessments) {
  std::set<std::string> seen;
  for (const auto& a : assessments) {
    if (!seen.insert(a.subject).second) throw ValidationError("duplicate subject: " + a.subject);
  }
}

}  // namespace

MeasureAggregate aggregate_by_measure(const std::vector<MeasureAssessment>& assessments) {
  check_unique(assessments);
  MeasureAggregate agg{};
  for (const auto& a : assessments) {
    for (std::size_t i = 0; i < kMeasureCount; ++i) agg[i].add(a.measures[i].status);
  }
  return agg;
}

RequirementAggregate aggregate_by_requirement(const std::vector<MeasureAssessment>& assessments) {
  check_unique(assessments);
  RequirementAggregate agg{};
  for (const auto& a : assessments) {
    for (std::size_t r = 0; r < kRequirementCount; ++r) {
      for (auto m : measures_for(static_cast<Requirement>(r))) agg[r].add(a.at(m).status);
    }
  }
  return agg;
}

std::size_t SoundnessReport::not_applicable_points() const {
  std::size_t n = 0;
  for (const auto& c : per_measure) n += c.not_applicable;
  return n;
}

SoundnessReport soundness_report(const std::vector<MeasureAssessment>& assessments) {
  SoundnessReport r;
  r.subjects = assessments.size();
  r.per_measure = aggregate_by_measure(assessments);
  r.per_requirement = aggregate_by_requirement(assessments);
  return r;
}

namespace {

std::vector<std::string> count_cells(const StatusCounts& c) {
  return {std::to_string(c.full), std::to_string(c.partial), std::to_string(c.none),
          std::to_string(c.not_applicable), format_fixed(c.fraction(Status::Full), 4),
          format_fixed(c.fraction(Status::Partial), 4), format_fixed(c.fraction(Status::None), 4)};
}

}  // namespace

std::string report_csv(const SoundnessReport& r) {
  std::string out = csv_line({"scope", "name", "full", "partial", "none", "not_applicable", "full_fraction",
                              "partial_fraction", "none_fraction"});
  for (auto m : all_measures()) {
    std::vector<std::string> row{"measure", std::string(to_string(m))};
    auto cells = count_cells(r.per_measure[static_cast<std::size_t>(m)]);
    row.insert(row.end(), cells.begin(), cells.end());
    out += csv_line(row);
  }
  for (auto q : all_requirements()) {
    std::vector<std::string> row{"requirement", std::string(short_name(q))};
    auto cells = count_cells(r.per_requirement[static_cast<std::size_t>(q)]);
    row.insert(row.end(), cells.begin(), cells.end());
    out += csv_line(row);
  }
  return out;
}

std::string report_table(const SoundnessReport& r) {
  auto render = [](const std::string& title, const auto& names, const auto& counts) {
    TextTable t({title, "Full", "Partial", "None", "N/A", "Full %", "Partial %", "None %"});
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const auto& c = counts[i];
      t.add_row({names(i), std::to_string(c.full), std::to_string(c.partial), std::to_string(c.none),
                 std::to_string(c.not_applicable), format_percent(c.fraction(Status::Full)),
                 format_percent(c.fraction(Status::Partial)), format_percent(c.fraction(Status::None))});
    }
    return t.render();
  };
  std::string out = "subjects: " + std::to_string(r.subjects) + ", data points: " + std::to_string(r.data_points()) +
                    ", not applicable: " + std::to_string(r.not_applicable_points()) + "\n\n";
  out += render("Measure", [](std::size_t i) { return std::string(to_string(static_cast<Measure>(i))); },
                r.per_measure);
  out += "\n";
  out += render("Requirement", [](std::size_t i) { return std::string(to_string(static_cast<Requirement>(i))); },
                r.per_requirement);
  std::string borrowed;
  for (auto m : all_measures()) {
    if (!evidence_list_printed(group_of(m))) borrowed += (borrowed.empty() ? "" : ", ") + std::string(to_string(m));
  }
  if (!borrowed.empty()) out += "\nnote: " + borrowed + " have no printed evidence list; the quantities list applies\n";
  return out;
}

}  // namespace fwcorpus::soundness

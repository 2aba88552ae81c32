#include "fwcorpus/acquire.hpp"
#include "fwcorpus/text_table.hpp"

namespace fwcorpus::acquire {

namespace {

std::vector<std::string> row_cells(const std::string& name, const ReplicationRow& r) {
  std::vector<std::string> cells{name, std::to_string(r.samples)};
  for (auto n : {r.replicated, r.direct, r.archive, r.hash_lookup, r.manual, r.missing}) {
    cells.push_back(std::to_string(n));
    cells.push_back(format_fixed(r.ratio(n), 4));
  }
  return cells;
}

}  // namespace

std::string replication_csv(const ReplicationReport& r) {
  std::string out = csv_line({"manufacturer", "samples", "replicated", "replicated_ratio", "direct", "direct_ratio",
                              "archive", "archive_ratio", "hash_lookup", "hash_lookup_ratio", "manual",
                              "manual_ratio", "missing", "missing_ratio"});
  for (const auto& [name, row] : r.per_manufacturer) out += csv_line(row_cells(name, row));
  out += csv_line(row_cells("total", r.total));
  return out;
}

std::string replication_table(const ReplicationReport& r) {
  TextTable t({"Manufacturer", "Samples", "Replicated", "Ratio", "1:Link", "Ratio", "2:Archive", "Ratio",
               "3:HashLookup", "Ratio", "4:Manual", "Ratio", "Missing", "Ratio"});
  auto add = [&](const std::string& name, const ReplicationRow& row) {
    std::vector<std::string> cells{name, std::to_string(row.samples)};
    for (auto n : {row.replicated, row.direct, row.archive, row.hash_lookup, row.manual, row.missing}) {
      cells.push_back(std::to_string(n));
      cells.push_back(format_fixed(row.ratio(n) * 100.0, 2) + "%");
    }
    t.add_row(cells);
  };
  for (const auto& [name, row] : r.per_manufacturer) add(name, row);
  t.add_rule();
  add("Total", r.total);
  return t.render();
}

std::string worklist_csv(const std::vector<WorklistEntry>& w) {
  std::string out = csv_line({"manufacturer", "model", "file_name", "version", "sha256"});
  for (const auto& e : w) out += csv_line({e.manufacturer, e.model, e.file_name, e.version, e.sha256});
  return out;
}

}  // namespace fwcorpus::acquire

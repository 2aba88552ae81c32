#include <set>
#include <utility>

#include "fwcorpus/manifest.hpp"
#include "fwcorpus/text_table.hpp"

namespace fwcorpus::manifest {

namespace {

struct Accumulator {
  std::size_t samples = 0;
  std::set<std::string> models;
  std::uint64_t size_sum = 0;
  std::size_t file_samples = 0;
  std::uint64_t file_sum = 0;

  CompositionRow finish(std::size_t devices) const {
    CompositionRow row;
    row.samples = samples;
    row.devices = devices;
    if (devices > 0) row.samples_per_device_mean = static_cast<double>(samples) / devices;
    if (samples > 0) row.size_per_sample_mean = static_cast<double>(size_sum) / samples;
    if (file_samples > 0) row.files_per_sample_mean = static_cast<double>(file_sum) / file_samples;
    return row;
  }
};

// "2.6.32" -> "2.6"
std::string major_minor(const std::string& version) {
  const auto first = version.find('.');
  if (first == std::string::npos) return version;
  const auto second = version.find('.', first + 1);
  return version.substr(0, second);
}

constexpr double kMiB = 1024.0 * 1024.0;

}  // namespace

CompositionStats composition_report(const CorpusManifest& m,
                                    const std::map<std::string, SampleFindings>* findings) {
  CompositionStats stats;
  std::map<std::string, Accumulator> per;
  Accumulator total;
  std::set<std::pair<std::string, std::string>> devices;

  if (findings) {
    stats.kernel_histogram.emplace();
    stats.isa_histogram.emplace();
  }

  for (const auto& r : m.records) {
    for (Accumulator* acc : {&per[r.manufacturer], &total}) {
      ++acc->samples;
      acc->models.insert(r.model);
      acc->size_sum += r.size_bytes;
    }
    devices.emplace(r.manufacturer, r.model);
    ++stats.class_histogram[r.device_class];
    ++stats.year_histogram[r.release_date ? std::to_string(r.release_date->year) : std::string(kUnknownYear)];

    if (!findings) continue;
    auto it = findings->find(r.sha256);
    if (it == findings->end()) continue;
    const auto& f = it->second;
    if (f.file_count) {
      for (Accumulator* acc : {&per[r.manufacturer], &total}) {
        ++acc->file_samples;
        acc->file_sum += *f.file_count;
      }
    }
    for (const auto& v : f.kernel_versions) ++(*stats.kernel_histogram)[major_minor(v)];
    for (const auto& isa : std::set<std::string>(f.isas.begin(), f.isas.end())) ++(*stats.isa_histogram)[isa];
  }

  for (const auto& [name, acc] : per) stats.per_manufacturer[name] = acc.finish(acc.models.size());
  stats.totals = total.finish(devices.size());
  return stats;
}

std::string composition_csv(const CompositionStats& s) {
  std::string out = csv_line({"manufacturer", "samples", "devices", "samples_per_device",
                              "size_per_sample_bytes", "files_per_sample"});
  auto row = [&](const std::string& name, const CompositionRow& r) {
    out += csv_line({name, std::to_string(r.samples), std::to_string(r.devices),
                     format_fixed(r.samples_per_device_mean, 2), format_fixed(r.size_per_sample_mean, 0),
                     r.files_per_sample_mean ? format_fixed(*r.files_per_sample_mean, 0) : ""});
  };
  for (const auto& [name, r] : s.per_manufacturer) row(name, r);
  row("Total", s.totals);
  return out;
}

std::string histograms_csv(const CompositionStats& s) {
  std::string out = csv_line({"histogram", "key", "count"});
  auto emit = [&](const char* name, const std::map<std::string, std::size_t>& h) {
    for (const auto& [k, v] : h) out += csv_line({name, k, std::to_string(v)});
  };
  emit("device_class", s.class_histogram);
  emit("release_year", s.year_histogram);
  if (s.kernel_histogram) emit("kernel", *s.kernel_histogram);
  if (s.isa_histogram) emit("isa", *s.isa_histogram);
  return out;
}

std::string composition_table(const CompositionStats& s) {
  TextTable t({"Manufact.", "Samples", "Devices", "Samples/Device", "Size/Sample", "Files/Sample"});
  auto row = [&](const std::string& name, const CompositionRow& r) {
    t.add_row({name, std::to_string(r.samples), std::to_string(r.devices),
               format_fixed(r.samples_per_device_mean, 2),
               format_fixed(r.size_per_sample_mean / kMiB, 0) + " MiB",
               r.files_per_sample_mean ? format_fixed(*r.files_per_sample_mean, 0) : "-"});
  };
  for (const auto& [name, r] : s.per_manufacturer) row(name, r);
  t.add_rule();
  row("Total", s.totals);
  return t.render();
}

}  // namespace fwcorpus::manifest

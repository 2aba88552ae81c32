#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fwcorpus/acquire.hpp"
#include "fwcorpus/cli.hpp"
#include "fwcorpus/digest.hpp"
#include "fwcorpus/error.hpp"
#include "fwcorpus/groundtruth.hpp"
#include "fwcorpus/harden.hpp"
#include "fwcorpus/identify.hpp"
#include "fwcorpus/manifest.hpp"
#include "fwcorpus/mock_scenario.hpp"
#include "fwcorpus/soundness.hpp"
#include "fwcorpus/text_table.hpp"
#include "fwcorpus/unpack.hpp"

namespace fwcorpus::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string manifest;
  std::string out;
  std::string markers;
  std::string registry;
  std::string format = "csv";
  std::string fixture;
  std::string mock_scenario;
  double rate = 1.0;
  std::size_t parallel = 4;
  std::vector<std::string> inputs;

  // subcommand specific
  std::string assessments;
  std::string db;
  std::string mode = "method";
  std::string kind = "composition";
  std::string archive;
  std::string hash_lookup;
  std::string hash_store;
  std::string worklist;
  int timeout = 60;
  bool no_verify = false;
  bool obey_robots = false;
  bool run_dedup = false;
  bool elf_files = false;
  std::string docs_unpack = "none";
  std::string docs_reasoning = "none";
  std::string docs_acquisition = "none";
  std::string docs_vulnerabilities = "none";
  std::string subject = "corpus";
};

std::string read_text(const std::string& path) {
  const auto b = read_file(path);
  return std::string(as_chars(b));
}

// Writes to --out when given, otherwise to the output stream.
void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  write_file(o.out, as_bytes(text));
}

bool as_table(const Options& o) { return o.format == "table"; }

manifest::CorpusManifest load_valid_manifest(const Options& o, std::ostream& err) {
  if (o.manifest.empty()) throw ValidationError("--manifest is required");
  auto parsed = manifest::load_manifest(o.manifest);
  for (const auto& issue : parsed.issues) err << o.manifest << ": " << issue.message << "\n";
  if (!parsed.ok()) throw ValidationError("manifest has " + std::to_string(parsed.issues.size()) + " issue(s)");
  return std::move(parsed.manifest);
}

unpack::UnpackerRegistry load_registry(const Options& o) {
  auto registry = unpack::UnpackerRegistry::with_builtins();
  if (!o.registry.empty()) registry.load_external_config(o.registry);
  return registry;
}

std::vector<std::string> load_markers(const Options& o) {
  if (o.markers.empty()) return unpack::default_markers();
  std::vector<std::string> markers;
  std::istringstream in(read_text(o.markers));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() != '#') markers.push_back(line);
  }
  return markers;
}

struct Unpacked {
  unpack::UnpackReport report;
  std::vector<unpack::FileBlob> files;
};

std::vector<Unpacked> unpack_inputs(const Options& o, std::ostream& err) {
  if (o.inputs.empty()) throw ValidationError("no input images given");
  const auto registry = load_registry(o);
  std::vector<Unpacked> out;
  for (const auto& path : o.inputs) {
    const auto data = read_file(path);
    unpack::MemorySink sink;
    auto report = unpack::unpack_recursive(data, registry, {}, &sink);
    for (const auto& f : report.failed_nodes) {
      err << path << ": cannot unpack '" << f.path << "' (" << f.format_guess << "): " << f.reason << "\n";
    }
    out.push_back({std::move(report), std::move(sink.files())});
  }
  return out;
}

int cmd_ingest(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.manifest.empty()) throw ValidationError("--manifest is required");
  auto parsed = manifest::load_manifest(o.manifest);
  for (const auto& issue : parsed.issues) err << o.manifest << ": " << issue.message << "\n";
  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw IoError("cannot write " + o.out);
    manifest::write_manifest(f, parsed.manifest);
  }
  out << "records: " << parsed.manifest.records.size() << " valid, " << parsed.issues.size() << " issue(s)\n";
  return parsed.ok() ? kExitOk : kExitValidation;
}

int cmd_dedup(const Options& o, std::ostream& out, std::ostream& err) {
  const auto m = load_valid_manifest(o, err);
  const auto result = digest::dedup(m.records);
  if (!o.out.empty()) {
    manifest::CorpusManifest unique;
    unique.records = result.unique;
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw IoError("cannot write " + o.out);
    manifest::write_manifest(f, unique);
  }
  if (as_table(o)) {
    TextTable t({"sha256", "copies", "first"});
    for (const auto& g : result.duplicate_groups) {
      const auto& first = g.members.front();
      t.add_row({g.sha256, std::to_string(g.members.size()), first.manufacturer + " " + first.model + " " + first.firmware_version});
    }
    out << t.render();
  } else {
    out << csv_line({"sha256", "manufacturer", "model", "firmware_version", "representative"});
    for (const auto& g : result.duplicate_groups) {
      for (std::size_t i = 0; i < g.members.size(); ++i) {
        const auto& r = g.members[i];
        out << csv_line({g.sha256, r.manufacturer, r.model, r.firmware_version, i == 0 ? "yes" : "no"});
      }
    }
  }
  err << "records: " << m.records.size() << ", unique: " << result.unique.size()
      << ", duplicate groups: " << result.duplicate_groups.size() << "\n";
  return kExitOk;
}

int cmd_unpack(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.inputs.empty()) throw ValidationError("no input images given");
  const auto registry = load_registry(o);
  std::string text = csv_line({"firmware_sha256", "path", "size_bytes", "sha256", "depth", "container_chain"});
  for (const auto& path : o.inputs) {
    const auto data = read_file(path);
    std::unique_ptr<unpack::DirectorySink> sink;
    if (!o.out.empty()) sink = std::make_unique<unpack::DirectorySink>(o.out);
    const auto report = unpack::unpack_recursive(data, registry, {}, sink.get());
    for (const auto& f : report.files) {
      std::string chain;
      for (const auto& c : f.container_chain) chain += (chain.empty() ? "" : ">") + c;
      text += csv_line({report.firmware_sha256, f.path, std::to_string(f.size_bytes), f.sha256,
                        std::to_string(f.depth), chain});
    }
    for (const auto& f : report.failed_nodes) {
      err << path << ": cannot unpack '" << f.path << "' (" << f.format_guess << "): " << f.reason << "\n";
    }
    for (const auto& s : report.sanitized_paths) err << path << ": sanitized " << s << "\n";
    if (report.max_depth_reached) err << path << ": depth limit reached\n";
    if (sink && sink->rejected()) err << path << ": " << sink->rejected() << " entries rejected by the sink\n";
  }
  // With --out the file list goes to stdout; the directory holds the files.
  out << text;
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  const auto markers = load_markers(o);
  const auto images = unpack_inputs(o, err);
  std::size_t verified = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto v = unpack::verify_unpack(images[i].report, markers, o.markers.empty() ? "default" : o.markers);
    verified += v.verified;
    std::string matched;
    for (const auto& m : v.matched_markers) matched += (matched.empty() ? "" : " ") + m;
    out << o.inputs[i] << "\t" << (v.verified ? "verified" : "unverified") << "\t" << matched << "\n";
  }
  out << "verified: " << verified << "/" << images.size() << "\n";
  return kExitOk;
}

int cmd_identify(const Options& o, std::ostream& out, std::ostream& err) {
  const auto images = unpack_inputs(o, err);
  std::string text = csv_line({"firmware_sha256", "kind", "value", "evidence", "path"});
  for (const auto& img : images) {
    for (const auto& b : identify::scan_kernel_banners(img.files)) {
      text += csv_line({img.report.firmware_sha256, "kernel", b.version, "banner", b.source_path});
    }
    for (const auto& f : identify::detect_isas(img.files)) {
      text += csv_line({img.report.firmware_sha256, "isa", f.isa.name(), std::string(identify::to_string(f.evidence)),
                        f.source_path});
    }
  }
  emit(o, out, text);
  return kExitOk;
}

identify::ElfInventory build_inventory(const Options& o, std::ostream& err) {
  auto images = unpack_inputs(o, err);
  std::vector<identify::FirmwareContents> corpus;
  for (auto& img : images) corpus.push_back({img.report.firmware_sha256, std::move(img.files)});
  return identify::elf_inventory(corpus);
}

int cmd_inventory(const Options& o, std::ostream& out, std::ostream& err) {
  const auto m = o.manifest.empty() ? manifest::CorpusManifest{} : load_valid_manifest(o, err);
  const auto inv = build_inventory(o, err);
  emit(o, out, as_table(o) ? identify::inventory_table(inv) : identify::inventory_csv(inv, m));
  err << "excluded kernel objects: " << inv.excluded_kernel_objects
      << ", kernel images: " << inv.excluded_kernel_images << "\n";
  return kExitOk;
}

int cmd_harden(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.elf_files) {
    if (o.inputs.empty()) throw ValidationError("no ELF files given");
    std::string text = csv_line({"path", "canary", "nx", "relro", "pic", "fortify"});
    auto yn = [](bool b) { return std::string(b ? "yes" : "no"); };
    for (const auto& path : o.inputs) {
      const auto flags = harden::checksec(identify::parse_elf(read_file(path)));
      text += csv_line({path, yn(flags.canary), yn(flags.nx), std::string(harden::to_string(flags.relro)),
                        yn(flags.pic), yn(flags.fortify)});
    }
    emit(o, out, text);
    return kExitOk;
  }
  const auto m = load_valid_manifest(o, err);
  if (o.mode != "method" && o.mode != "nx") throw ValidationError("--mode must be method or nx");
  const auto inv = build_inventory(o, err);
  const auto t = harden::hardening_trend(inv, m, o.mode == "method" ? harden::TrendMode::ByMethod : harden::TrendMode::NxByIsa);
  emit(o, out, as_table(o) ? harden::trend_table(t) : harden::trend_csv(t));
  return kExitOk;
}

soundness::Status parse_status(const std::string& s, const char* flag) {
  const auto st = soundness::status_from_string(s);
  if (!st) throw ValidationError(std::string(flag) + ": unknown status '" + s + "'");
  return *st;
}

int cmd_score(const Options& o, std::ostream& out, std::ostream& err) {
  const auto m = load_valid_manifest(o, err);
  soundness::AuditArtifacts artifacts;
  std::optional<digest::DedupResult> dedup;
  if (o.run_dedup) {
    dedup = digest::dedup(m.records);
    artifacts.dedup = &*dedup;
  }
  artifacts.docs.unpack_process = parse_status(o.docs_unpack, "--unpack-doc");
  artifacts.docs.reasoning = parse_status(o.docs_reasoning, "--reasoning-doc");
  artifacts.docs.acquisition = parse_status(o.docs_acquisition, "--acquisition-doc");
  artifacts.docs.vulnerabilities = parse_status(o.docs_vulnerabilities, "--vulnerabilities-doc");
  const auto a = soundness::score_corpus_manifest(m, artifacts, o.subject);
  emit(o, out, as_table(o) ? soundness::assessment_table(a) : soundness::assessment_csv(a));
  const auto violations = soundness::validate_assessment(a);
  for (const auto& v : violations) err << soundness::to_string(v.measure) << ": " << v.rule << "\n";
  return violations.empty() ? kExitOk : kExitValidation;
}

std::vector<soundness::MeasureAssessment> load_assessments(const Options& o) {
  if (!o.assessments.empty()) {
    const auto text = read_text(o.assessments);
    if (o.assessments.size() > 4 && o.assessments.substr(o.assessments.size() - 4) == ".tsv") {
      return soundness::parse_survey_table(text);
    }
    return soundness::parse_assessments_jsonl(text);
  }
  if (o.fixture.empty() || o.fixture == "builtin") return soundness::builtin_survey();
  return soundness::parse_survey_table(read_text(o.fixture));
}

int cmd_survey(const Options& o, std::ostream& out, std::ostream& err) {
  const auto assessments = load_assessments(o);
  std::size_t bad = 0;
  for (const auto& a : assessments) {
    for (const auto& v : soundness::validate_assessment(a)) {
      err << a.subject << ": " << soundness::to_string(v.measure) << ": " << v.rule << "\n";
      ++bad;
    }
  }
  const auto report = soundness::soundness_report(assessments);
  emit(o, out, as_table(o) ? soundness::report_table(report) : soundness::report_csv(report));
  return bad == 0 ? kExitOk : kExitValidation;
}

int cmd_match(const Options& o, std::ostream& out, std::ostream& err) {
  const auto m = load_valid_manifest(o, err);
  if (o.db.empty()) throw ValidationError("--db is required");
  const auto db = groundtruth::parse_exploit_db(read_text(o.db));
  const auto result = groundtruth::match_exploits(m, db);
  for (const auto& u : result.unparseable_versions) err << "unparseable version: " << u << "\n";
  emit(o, out, groundtruth::match_csv(result.matches));
  err << "matches: " << result.matches.size() << " (automatic, unconfirmed)\n";
  return kExitOk;
}

acquire::AcquisitionPolicy policy_from(const Options& o) {
  acquire::AcquisitionPolicy p;
  p.per_host_rate = o.rate;
  p.max_parallel = o.parallel;
  p.timeout = std::chrono::seconds(o.timeout);
  p.verify_hash = !o.no_verify;
  p.obey_robots = o.obey_robots;
  if (!o.out.empty()) p.output_dir = fs::path(o.out);
  p.validate();
  return p;
}

void print_replication(const Options& o, std::ostream& out, std::ostream& err, const acquire::ReplicationReport& r) {
  out << (as_table(o) ? acquire::replication_table(r) : acquire::replication_csv(r));
  if (!o.worklist.empty()) write_file(o.worklist, as_bytes(acquire::worklist_csv(r.worklist)));
  err << "wall clock: " << format_fixed(r.wall_seconds, 1) << " s, worklist: " << r.worklist.size() << "\n";
}

int cmd_acquire(const Options& o, std::ostream& out, std::ostream& err) {
  auto policy = policy_from(o);
  if (!o.mock_scenario.empty()) {
    if (o.mock_scenario != "standard") throw ValidationError("unknown mock scenario '" + o.mock_scenario + "'");
    policy.output_dir.reset();
    const auto run = acquire::run_mock_replication(acquire::MockScenario::standard(), policy);
    print_replication(o, out, err, run.report);
    return kExitOk;
  }
  const auto m = load_valid_manifest(o, err);
  if (policy.output_dir) fs::create_directories(*policy.output_dir);
  acquire::NetworkStack::Endpoints endpoints;
  if (!o.archive.empty()) endpoints.archive_base = o.archive;
  if (!o.hash_lookup.empty()) endpoints.hash_lookup_template = o.hash_lookup;
  if (!o.hash_store.empty()) endpoints.hash_store = fs::path(o.hash_store);
  acquire::NetworkStack stack(policy, endpoints);
  print_replication(o, out, err, acquire::acquire_corpus(m, stack.clients(), policy));
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.kind == "survey") return cmd_survey(o, out, err);
  const auto m = load_valid_manifest(o, err);
  const auto stats = manifest::composition_report(m);
  if (o.kind == "composition") {
    emit(o, out, as_table(o) ? manifest::composition_table(stats) : manifest::composition_csv(stats));
  } else if (o.kind == "histograms") {
    emit(o, out, manifest::histograms_csv(stats));
  } else {
    throw ValidationError("unknown report kind '" + o.kind + "'");
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Firmware corpus curation, audit and replication toolkit", "fwcorpus"};
  app.require_subcommand(1);
  Options o;

  auto add_format = [&](CLI::App* c) {
    c->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "table"}));
  };
  auto add_manifest = [&](CLI::App* c, bool required) {
    auto* opt = c->add_option("--manifest", o.manifest, "Corpus manifest (JSON lines)");
    if (required) opt->required();
  };
  auto add_inputs = [&](CLI::App* c) { c->add_option("inputs", o.inputs, "Firmware images"); };
  auto add_registry = [&](CLI::App* c) {
    c->add_option("--registry", o.registry, "External unpacker configuration (JSON)");
  };

  auto* ingest = app.add_subcommand("ingest", "Parse and validate a manifest");
  add_manifest(ingest, true);
  ingest->add_option("--out", o.out, "Write the valid records here");

  auto* dedup = app.add_subcommand("dedup", "Find duplicate samples by SHA-256");
  add_manifest(dedup, true);
  dedup->add_option("--out", o.out, "Write the deduplicated manifest here");
  add_format(dedup);

  auto* unpack_cmd = app.add_subcommand("unpack", "Recursively unpack firmware images");
  add_inputs(unpack_cmd);
  add_registry(unpack_cmd);
  unpack_cmd->add_option("--out", o.out, "Extraction root directory");

  auto* verify = app.add_subcommand("verify", "Check unpacked images for root filesystem markers");
  add_inputs(verify);
  add_registry(verify);
  verify->add_option("--markers", o.markers, "Marker list, one path per line");

  auto* identify_cmd = app.add_subcommand("identify", "Find kernel banners and ISAs");
  add_inputs(identify_cmd);
  add_registry(identify_cmd);
  identify_cmd->add_option("--out", o.out, "Output file");

  auto* inventory = app.add_subcommand("inventory", "Corpus-wide ELF inventory");
  add_inputs(inventory);
  add_registry(inventory);
  add_manifest(inventory, false);
  add_format(inventory);
  inventory->add_option("--out", o.out, "Output file");

  auto* harden_cmd = app.add_subcommand("harden", "Binary hardening per release year");
  add_inputs(harden_cmd);
  add_registry(harden_cmd);
  add_manifest(harden_cmd, false);
  add_format(harden_cmd);
  harden_cmd->add_option("--mode", o.mode, "method or nx")->check(CLI::IsMember({"method", "nx"}));
  harden_cmd->add_flag("--elf", o.elf_files, "Inputs are ELF files; print their flags");
  harden_cmd->add_option("--out", o.out, "Output file");

  auto* score = app.add_subcommand("score", "Audit a corpus manifest against the 16 measures");
  add_manifest(score, true);
  add_format(score);
  score->add_flag("--dedup", o.run_dedup, "Deduplicate the manifest as part of the audit");
  score->add_option("--unpack-doc", o.docs_unpack, "Status of the unpacking documentation");
  score->add_option("--reasoning-doc", o.docs_reasoning, "Status of the selection reasoning");
  score->add_option("--acquisition-doc", o.docs_acquisition, "Status of the acquisition documentation");
  score->add_option("--vulnerabilities-doc", o.docs_vulnerabilities, "Status of the vulnerability ground truth");
  score->add_option("--subject", o.subject, "Subject name in the report");
  score->add_option("--out", o.out, "Output file");

  auto* survey = app.add_subcommand("survey", "Aggregate assessments per measure and requirement");
  survey->add_option("--fixture", o.fixture, "\"builtin\" or a survey table file");
  survey->add_option("--assessments", o.assessments, "Assessments (JSON lines or .tsv table)");
  add_format(survey);
  survey->add_option("--out", o.out, "Output file");

  auto* match = app.add_subcommand("match", "Match records against exploit metadata");
  add_manifest(match, true);
  match->add_option("--db", o.db, "Exploit database (JSON lines)")->required();
  match->add_option("--out", o.out, "Output file");

  auto* acquire_cmd = app.add_subcommand("acquire", "Replicate a corpus from its manifest");
  add_manifest(acquire_cmd, false);
  add_format(acquire_cmd);
  acquire_cmd->add_option("--rate", o.rate, "Requests per second per host");
  acquire_cmd->add_option("--parallel", o.parallel, "Worker threads");
  acquire_cmd->add_option("--timeout", o.timeout, "Request timeout in seconds");
  acquire_cmd->add_option("--out", o.out, "Directory for fetched samples");
  acquire_cmd->add_option("--archive", o.archive, "Web archive base URL");
  acquire_cmd->add_option("--hash-lookup", o.hash_lookup, "Hash lookup URL template with {sha256}");
  acquire_cmd->add_option("--hash-store", o.hash_store, "Local directory of samples named by SHA-256");
  acquire_cmd->add_option("--worklist", o.worklist, "Write the manual worklist here");
  acquire_cmd->add_flag("--no-verify", o.no_verify, "Accept payloads without hash verification");
  acquire_cmd->add_flag("--obey-robots", o.obey_robots, "Honor robots.txt for direct links");
  acquire_cmd->add_option("--mock-scenario", o.mock_scenario, "Run against local mock servers (\"standard\")");

  auto* report = app.add_subcommand("report", "Emit composition or survey reports");
  add_manifest(report, false);
  add_format(report);
  report->add_option("--kind", o.kind, "composition, histograms or survey")
      ->check(CLI::IsMember({"composition", "histograms", "survey"}));
  report->add_option("--fixture", o.fixture, "Survey fixture for --kind survey");
  report->add_option("--out", o.out, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(o, out, err);
    if (*dedup) return cmd_dedup(o, out, err);
    if (*unpack_cmd) return cmd_unpack(o, out, err);
    if (*verify) return cmd_verify(o, out, err);
    if (*identify_cmd) return cmd_identify(o, out, err);
    if (*inventory) return cmd_inventory(o, out, err);
    if (*harden_cmd) return cmd_harden(o, out, err);
    if (*score) return cmd_score(o, out, err);
    if (*survey) return cmd_survey(o, out, err);
    if (*match) return cmd_match(o, out, err);
    if (*acquire_cmd) return cmd_acquire(o, out, err);
    if (*report) return cmd_report(o, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace fwcorpus::cli

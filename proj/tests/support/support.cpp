#include "support/support.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace testsupport {

TempDir::TempDir() {
  std::string templ = (fs::temp_directory_path() / "fwctest-XXXXXX").string();
  if (!mkdtemp(templ.data())) throw std::runtime_error("mkdtemp failed");
  path_ = templ;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

CommandResult run_command(const std::string& command) {
  CommandResult r;
  const std::string full = command + " 2>&1";
  FILE* p = popen(full.c_str(), "r");
  if (!p) throw std::runtime_error("popen failed: " + command);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

fs::path elf_fixture(const std::string& name) { return fs::path(FWC_ELF_DIR) / name; }
fs::path source_dir() { return FWC_SOURCE_DIR; }
fs::path cli_path() { return FWC_CLI_PATH; }

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& b : out) b = static_cast<std::byte>(d(rng));
  return out;
}

std::string random_hex(std::mt19937_64& rng, std::size_t chars) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(chars, '0');
  std::uniform_int_distribution<int> d(0, 15);
  for (auto& c : s) c = kHex[d(rng)];
  return s;
}

fwcorpus::manifest::FirmwareRecord make_record(const std::string& manufacturer, const std::string& model,
                                               const std::string& sha256) {
  fwcorpus::manifest::FirmwareRecord r;
  r.manufacturer = manufacturer;
  r.model = model;
  r.device_class = "router";
  r.firmware_version = "1.0.0";
  r.sha256 = sha256;
  r.size_bytes = 1024;
  return r;
}

namespace {

std::string run_python(const std::string& script, const std::string& arg) {
  TempDir dir;
  const auto path = dir / "script.py";
  std::ofstream(path) << script;
  auto r = run_command("python3 " + shell_quote(path.string()) + " " + shell_quote(arg));
  if (r.exit_code != 0) throw std::runtime_error("python failed: " + r.output);
  return r.output;
}

}  // namespace

std::string python_sha256(const fs::path& file) {
  auto out = run_python(
      "import hashlib, sys\n"
      "print(hashlib.sha256(open(sys.argv[1], 'rb').read()).hexdigest())\n",
      file.string());
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out;
}

void python_archive(const std::string& kind, const std::map<std::string, std::string>& files,
                    const fs::path& out) {
  nlohmann::json spec;
  spec["kind"] = kind;
  spec["out"] = out.string();
  spec["files"] = nlohmann::json::object();
  for (const auto& [name, data] : files) {
    std::string hex;
    static constexpr char kHex[] = "0123456789abcdef";
    for (unsigned char c : data) {
      hex += kHex[c >> 4];
      hex += kHex[c & 15];
    }
    spec["files"][name] = hex;
  }
  TempDir dir;
  const auto spec_path = dir / "spec.json";
  std::ofstream(spec_path) << spec.dump();
  run_python(
      "import gzip, io, json, sys, tarfile, zipfile\n"
      "spec = json.load(open(sys.argv[1]))\n"
      "files = {k: bytes.fromhex(v) for k, v in spec['files'].items()}\n"
      "def tar_bytes():\n"
      "    buf = io.BytesIO()\n"
      "    with tarfile.open(fileobj=buf, mode='w', format=tarfile.USTAR_FORMAT) as t:\n"
      "        for name, data in sorted(files.items()):\n"
      "            info = tarfile.TarInfo(name)\n"
      "            info.size = len(data)\n"
      "            t.addfile(info, io.BytesIO(data))\n"
      "    return buf.getvalue()\n"
      "kind = spec['kind']\n"
      "if kind == 'tar':\n"
      "    data = tar_bytes()\n"
      "elif kind == 'tar.gz':\n"
      "    data = gzip.compress(tar_bytes())\n"
      "elif kind == 'gz':\n"
      "    data = gzip.compress(next(iter(files.values())))\n"
      "elif kind == 'zip':\n"
      "    buf = io.BytesIO()\n"
      "    with zipfile.ZipFile(buf, 'w', zipfile.ZIP_DEFLATED) as z:\n"
      "        for name, d in sorted(files.items()):\n"
      "            z.writestr(name, d)\n"
      "    data = buf.getvalue()\n"
      "else:\n"
      "    sys.exit('unknown kind')\n"
      "open(spec['out'], 'wb').write(data)\n",
      spec_path.string());
}

Bytes ustar(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string out;
  for (const auto& [name, data] : entries) {
    std::string h(512, '\0');
    const auto n = name.substr(0, 100);
    std::copy(n.begin(), n.end(), h.begin());
    auto octal = [&](std::size_t off, std::size_t width, unsigned long long v) {
      std::string s(width - 1, '0');
      for (std::size_t i = width - 1; i-- > 0;) {
        s[i] = static_cast<char>('0' + (v & 7));
        v >>= 3;
      }
      std::copy(s.begin(), s.end(), h.begin() + static_cast<long>(off));
    };
    octal(100, 8, 0644);
    octal(108, 8, 0);
    octal(116, 8, 0);
    octal(124, 12, data.size());
    octal(136, 12, 0);
    h[156] = '0';
    const std::string magic = "ustar";
    std::copy(magic.begin(), magic.end(), h.begin() + 257);
    h[263] = '0';
    h[264] = '0';
    std::fill(h.begin() + 148, h.begin() + 156, ' ');
    unsigned sum = 0;
    for (unsigned char c : h) sum += c;
    octal(148, 7, sum);
    h[155] = ' ';
    out += h;
    out += data;
    out.append((512 - data.size() % 512) % 512, '\0');
  }
  out.append(1024, '\0');
  return fwcorpus::to_bytes(out);
}

Bytes craft_elf_header(std::uint16_t machine, bool is64, bool big_endian, std::uint16_t e_type) {
  Bytes h(is64 ? 64 : 52, std::byte{0});
  h[0] = std::byte{0x7f};
  h[1] = std::byte{'E'};
  h[2] = std::byte{'L'};
  h[3] = std::byte{'F'};
  h[4] = std::byte{static_cast<unsigned char>(is64 ? 2 : 1)};
  h[5] = std::byte{static_cast<unsigned char>(big_endian ? 2 : 1)};
  h[6] = std::byte{1};
  auto put16 = [&](std::size_t off, std::uint16_t v) {
    const auto hi = std::byte{static_cast<unsigned char>(v >> 8)};
    const auto lo = std::byte{static_cast<unsigned char>(v & 0xff)};
    h[off] = big_endian ? hi : lo;
    h[off + 1] = big_endian ? lo : hi;
  };
  put16(16, e_type);
  put16(18, machine);
  h[big_endian ? 23 : 20] = std::byte{1};  // e_version
  put16(is64 ? 52 : 40, static_cast<std::uint16_t>(h.size()));  // e_ehsize
  return h;
}

ReadelfFacts readelf_checksec(const fs::path& file) {
  auto r = run_command("readelf -W -h -l -d --syms " + shell_quote(file.string()));
  if (r.exit_code != 0) throw std::runtime_error("readelf failed: " + r.output);
  ReadelfFacts f;
  bool gnu_relro = false;
  bool bind_now = false;
  bool in_dynsym = false;
  std::istringstream in(r.output);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty()) continue;
    if (w[0] == "Type:" && w.size() > 1) {
      f.type = w[1];
    } else if (w[0] == "INTERP") {
      f.has_interp = true;
    } else if (w[0] == "GNU_STACK") {
      // Flags sit between MemSiz and Align and may contain spaces ("R E").
      std::string flags;
      for (std::size_t i = 6; i + 1 < w.size(); ++i) flags += w[i];
      f.nx = flags.find('E') == std::string::npos;
    } else if (w[0] == "GNU_RELRO") {
      gnu_relro = true;
    } else if (line.find("(BIND_NOW)") != std::string::npos) {
      bind_now = true;
    } else if (line.find("(FLAGS)") != std::string::npos && line.find("BIND_NOW") != std::string::npos) {
      bind_now = true;
    } else if (line.find("(FLAGS_1)") != std::string::npos && line.find(" NOW") != std::string::npos) {
      bind_now = true;
    } else if (w[0] == "Symbol" && w.size() > 2 && w[1] == "table") {
      in_dynsym = w[2] == "'.dynsym'";
    } else if (w.size() >= 8 && w[0].back() == ':') {
      std::string sym = w[7];
      sym = sym.substr(0, sym.find('@'));
      if (sym == "__stack_chk_fail" || sym == "__stack_chk_guard") f.canary = true;
      if (in_dynsym && sym.size() > 6 && sym.rfind("__", 0) == 0 && sym.ends_with("_chk") &&
          sym != "__stack_chk_fail" && sym != "__stack_chk_guard") {
        f.fortify = true;
      }
    }
  }
  f.relro = gnu_relro ? (bind_now ? 2 : 1) : 0;
  f.pic = f.type == "DYN";
  return f;
}

}  // namespace testsupport

namespace testsupport {

std::vector<SummaryRow> load_corpus_summary() {
  std::ifstream in(fs::path(FWC_FIXTURE_DIR) / "corpus_summary.tsv");
  if (!in) throw std::runtime_error("corpus_summary.tsv missing");
  std::vector<SummaryRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    SummaryRow r;
    ls >> r.manufacturer >> r.samples >> r.devices >> r.size_mib >> r.files_per_sample;
    rows.push_back(r);
  }
  return rows;
}

fwcorpus::manifest::CorpusManifest expand_summary(
    const std::vector<SummaryRow>& rows,
    std::map<std::string, fwcorpus::manifest::SampleFindings>* findings) {
  fwcorpus::manifest::CorpusManifest m;
  std::size_t serial = 0;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.samples; ++i) {
      char sha[65];
      std::snprintf(sha, sizeof sha, "%064zx", ++serial);
      auto r = make_record(row.manufacturer, row.manufacturer + "-model-" + std::to_string(i % row.devices), sha);
      r.size_bytes = row.size_mib * 1024 * 1024;
      m.records.push_back(r);
      if (findings) (*findings)[sha].file_count = row.files_per_sample;
    }
  }
  return m;
}

}  // namespace testsupport

namespace testsupport {

std::vector<RubricCase> load_rubric_cases() {
  using namespace fwcorpus::soundness;
  std::ifstream in(fs::path(FWC_FIXTURE_DIR) / "rubric_cases.tsv");
  if (!in) throw std::runtime_error("rubric_cases.tsv missing");
  std::vector<RubricCase> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      cols.push_back(line.substr(start, tab - start));
    }
    cols.push_back(line.substr(start));
    if (cols.size() != 5) throw std::runtime_error("bad rubric case: " + line);

    RubricCase c;
    c.label = line;
    c.assessment.subject = "case" + std::to_string(out.size() + 1);
    const auto m = measure_from_string(cols[0]);
    const auto s = status_from_string(cols[1]);
    if (!m || !s) throw std::runtime_error("bad rubric case: " + line);
    auto& e = c.assessment.at(*m);
    e.status = *s;
    if (cols[2] != "-") {
      std::istringstream ev(cols[2]);
      for (std::string tok; std::getline(ev, tok, ',');) {
        auto src = evidence_from_string(tok);
        if (!src) throw std::runtime_error("bad evidence: " + tok);
        e.evidence.insert(*src);
      }
    }
    if (cols[3] != "-") e.note = cols[3];
    c.expect_accept = cols[4] == "accept";
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::string> oracle_survey_statuses() {
  std::ifstream in(source_dir() / "data" / "survey.tsv");
  if (!in) throw std::runtime_error("survey.tsv missing");
  auto letter = [](std::string part) {
    std::string low;
    for (char ch : part) {
      if (ch != ' ') low += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    if (low == "yes") return 'F';
    if (low == "no") return 'N';
    if (low.rfind("unclear", 0) == 0) return 'P';
    if (low == "na" || low == "notapplicable") return 'A';
    return 'F';
  };
  const std::string order = "NPFA";  // weakest first
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, '\t');  // subject
    std::string statuses;
    while (std::getline(cells, cell, '\t')) {
      char worst = 'A';
      std::istringstream parts(cell);
      for (std::string p; std::getline(parts, p, ';');) {
        const char l = letter(p);
        if (order.find(l) < order.find(worst)) worst = l;
      }
      statuses += worst;
    }
    if (statuses.size() != 16) throw std::runtime_error("survey row without 16 cells: " + line);
    rows.push_back(statuses);
  }
  return rows;
}

const std::vector<std::string>& requirement_matrix() {
  static const std::vector<std::string> m = {
      "0000001000000000",  // ground truth
      "0000000110011111",  // relevance
      "1110000000000000",  // clean data
      "0000000111111111",  // rich meta data
      "0011110000000000",  // documentation
      "0100000000011111",  // heterogeneity
  };
  return m;
}

}  // namespace testsupport

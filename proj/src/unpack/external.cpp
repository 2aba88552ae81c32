#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <random>

#include "fwcorpus/error.hpp"
#include "fwcorpus/unpack.hpp"

extern char** environ;

namespace fwcorpus::unpack {

namespace fs = std::filesystem;

namespace {

// Removes the sandbox directory on scope exit.
class ScratchDir {
 public:
  ScratchDir() {
    std::random_device rd;
    for (int attempt = 0; attempt < 16; ++attempt) {
      auto candidate = fs::temp_directory_path() / ("fwcorpus-unpack-" + std::to_string(rd()));
      std::error_code ec;
      if (fs::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw IoError("cannot create scratch directory");
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

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

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

int run_shell(const std::string& command, const fs::path& cwd) {
  // posix_spawn has no portable chdir; prefix the command instead.
  const std::string full = "cd " + shell_quote(cwd.string()) + " && " + command;
  const char* argv[] = {"/bin/sh", "-c", full.c_str(), nullptr};
  pid_t pid = 0;
  if (posix_spawn(&pid, "/bin/sh", nullptr, nullptr, const_cast<char**>(argv), environ) != 0) {
    throw IoError("cannot spawn external unpacker");
  }
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw IoError("waitpid failed");
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class ExternalUnpacker : public Unpacker {
 public:
  explicit ExternalUnpacker(ExternalToolSpec spec) : spec_(std::move(spec)) {}

  std::string id() const override { return spec_.id; }

  bool matches(ByteView head, std::uint64_t length) const override {
    if (spec_.magic.empty() || spec_.magic_offset + spec_.magic.size() > length) return false;
    if (spec_.magic_offset + spec_.magic.size() > head.size()) return false;
    return std::equal(spec_.magic.begin(), spec_.magic.end(), head.begin() + spec_.magic_offset);
  }

  std::vector<RawEntry> unpack(ByteView data, std::uint64_t budget) const override {
    ScratchDir scratch;
    const auto input = scratch.path() / "input.bin";
    const auto output = scratch.path() / "out";
    fs::create_directory(output);
    write_file(input, data);

    std::string command = spec_.command;
    replace_all(command, "{input_file}", shell_quote(input.string()));
    replace_all(command, "{output_dir}", shell_quote(output.string()));
    const int rc = run_shell(command, scratch.path());
    if (rc != 0) throw Error(spec_.id + " exited with status " + std::to_string(rc));

    std::vector<RawEntry> out;
    std::uint64_t used = 0;
    for (auto it = fs::recursive_directory_iterator(output); it != fs::recursive_directory_iterator(); ++it) {
      if (it->is_symlink() || !it->is_regular_file()) continue;
      used += it->file_size();
      if (used > budget) throw BudgetExceeded();
      out.push_back({fs::relative(it->path(), output).generic_string(), read_file(it->path())});
    }
    std::sort(out.begin(), out.end(), [](const RawEntry& a, const RawEntry& b) { return a.path < b.path; });
    return out;
  }

 private:
  ExternalToolSpec spec_;
};

}  // namespace

std::unique_ptr<Unpacker> make_external_unpacker(ExternalToolSpec spec) {
  if (spec.id.empty() || spec.command.empty() || spec.magic.empty()) {
    throw ValidationError("external unpacker needs id, magic and command");
  }
  return std::make_unique<ExternalUnpacker>(std::move(spec));
}

}  // namespace fwcorpus::unpack

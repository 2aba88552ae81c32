#include <fstream>

#include <json.hpp>

#include "fwcorpus/error.hpp"
#include "fwcorpus/unpack.hpp"

namespace fwcorpus::unpack {

namespace fs = std::filesystem;

namespace {

Bytes parse_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) throw ParseError("odd-length magic hex string");
  Bytes out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<std::byte>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

}  // namespace

UnpackerRegistry UnpackerRegistry::with_builtins() {
  UnpackerRegistry r;
  r.add(make_gzip_unpacker());
  r.add(make_zip_unpacker());
  r.add(make_tar_unpacker());
  r.add(make_cpio_unpacker());
  return r;
}

void UnpackerRegistry::add(std::shared_ptr<const Unpacker> unpacker) {
  unpackers_.push_back(std::move(unpacker));
}

void UnpackerRegistry::load_external_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open registry config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (!j.is_array()) throw ParseError("registry config must be a JSON array");
    for (const auto& item : j) {
      ExternalToolSpec spec;
      spec.id = item.at("id").get<std::string>();
      spec.magic = parse_hex(item.at("magic").get<std::string>());
      spec.magic_offset = item.value("offset", std::uint64_t{0});
      spec.command = item.at("command").get<std::string>();
      add(make_external_unpacker(std::move(spec)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("registry config " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("registry config " + path.string() + ": bad magic hex");
  }
}

const Unpacker* UnpackerRegistry::find(ByteView head, std::uint64_t length) const {
  for (const auto& u : unpackers_) {
    if (u->matches(head, length)) return u.get();
  }
  return nullptr;
}

}  // namespace fwcorpus::unpack

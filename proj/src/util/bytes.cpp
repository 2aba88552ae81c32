#include "fwcorpus/bytes.hpp"

#include <fstream>
#include <iterator>

#include "fwcorpus/error.hpp"

namespace fwcorpus {

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  Bytes out;
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  if (size > 0) {
    out.resize(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(out.data()), size);
  }
  if (in.bad()) {
    throw IoError("read failed: " + path.string());
  }
  return out;
}

void write_file(const std::filesystem::path& path, ByteView data) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot create " + path.string());
  }
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

}  // namespace fwcorpus

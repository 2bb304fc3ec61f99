// ibasr/model/checkpoint.cc

#include "ibasr/model/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ibasr/errors.h"

namespace ibasr {
namespace {

constexpr char kMagic[8] = {'I', 'B', 'A', 'S', 'R', 'C', 'K', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["version"] = 1;
  header["meta"] = ckpt.meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, t] : ckpt.tensors) {
    header["tensors"].push_back({{"name", name}, {"shape", t.shape()}});
  }
  const std::string text = header.dump();
  const std::uint64_t len = text.size();

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw DataError("cannot write " + tmp);
    os.write(kMagic, sizeof(kMagic));
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : ckpt.tensors) {
      os.write(reinterpret_cast<const char*>(t.data()),
               static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw DataError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError(path.string() + " is not a checkpoint");
  }
  if (!is.read(reinterpret_cast<char*>(&len), sizeof(len)) || len > (1u << 30)) {
    throw DataError("bad checkpoint header length in " + path.string());
  }
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) {
    throw DataError("truncated checkpoint header in " + path.string());
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint header: " + std::string(e.what()));
  }
  if (header.value("version", 0) != 1) {
    throw DataError("unsupported checkpoint version in " + path.string());
  }
  Checkpoint ckpt;
  ckpt.meta = header["meta"];
  for (const auto& entry : header.at("tensors")) {
    Tensor t(entry.at("shape").get<Shape>());
    if (!is.read(reinterpret_cast<char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)))) {
      throw DataError("truncated checkpoint payload in " + path.string());
    }
    ckpt.tensors.emplace(entry.at("name").get<std::string>(), std::move(t));
  }
  return ckpt;
}

}  // namespace ibasr

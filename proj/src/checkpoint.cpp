#include "lgrn/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "lgrn/error.hpp"
#include "lgrn/fileutil.hpp"

namespace lgrn {

namespace {

constexpr char kMagic[8] = {'L', 'G', 'R', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

template <typename U>
void put(std::ostream& os, U v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename U>
U get(std::istream& is, const std::string& path) {
  U v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError(path + ": truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const nn::ModelParams& params) {
  nlohmann::json header;
  header["epoch"] = params.epoch;
  header["loss"] = std::isfinite(params.loss) ? nlohmann::json(params.loss) : nlohmann::json(nullptr);
  header["meta"] = params.meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, arr] : params.arrays)
    header["tensors"].push_back({{"name", name}, {"shape", arr.shape}});
  const std::string text = header.dump();

  write_atomic(
      path,
      [&](std::ostream& os) {
        os.write(kMagic, sizeof kMagic);
        put<std::uint32_t>(os, kVersion);
        put<std::uint64_t>(os, text.size());
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const auto& [name, arr] : params.arrays)
          os.write(reinterpret_cast<const char*>(arr.values.data()),
                   static_cast<std::streamsize>(arr.values.size() * sizeof(double)));
      },
      true);
}

nn::ModelParams load_checkpoint(const std::filesystem::path& path) {
  const std::string p = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + p);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw DataError(p + ": not an lgrn checkpoint");
  const auto version = get<std::uint32_t>(in, p);
  if (version != kVersion) throw DataError(p + ": unsupported checkpoint version " + std::to_string(version));
  const auto len = get<std::uint64_t>(in, p);
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError(p + ": truncated header");

  nn::ModelParams out;
  try {
    const auto header = nlohmann::json::parse(text);
    out.epoch = header.at("epoch").get<int>();
    out.loss = header.at("loss").is_null() ? std::nan("") : header.at("loss").get<double>();
    out.meta = header.at("meta").get<std::map<std::string, std::string>>();
    for (const auto& t : header.at("tensors")) {
      nn::NamedArray arr;
      arr.shape = t.at("shape").get<std::vector<int>>();
      std::size_t count = 1;
      for (int d : arr.shape) {
        if (d < 0) throw DataError(p + ": negative dimension");
        count *= static_cast<std::size_t>(d);
      }
      arr.values.resize(count);
      if (!in.read(reinterpret_cast<char*>(arr.values.data()),
                   static_cast<std::streamsize>(count * sizeof(double))))
        throw DataError(p + ": truncated payload for '" + t.at("name").get<std::string>() + "'");
      out.arrays.emplace(t.at("name").get<std::string>(), std::move(arr));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(p + ": malformed checkpoint header: " + e.what());
  }
  if (!nn::all_finite(out)) throw DataError(p + ": checkpoint contains non-finite values");
  return out;
}

}  // namespace lgrn

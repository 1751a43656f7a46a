#include "dsel/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dsel {
namespace {

constexpr const char* kMagic = "dsel-checkpoint";
constexpr int kVersion = 1;

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& stem, const ParamVector& params) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  {
    std::ofstream manifest(with_suffix(stem, ".manifest"), std::ios::trunc);
    if (!manifest) throw std::runtime_error("cannot write " + with_suffix(stem, ".manifest").string());
    manifest << kMagic << ' ' << kVersion << '\n';
    manifest << "total " << params.size() << '\n';
    for (const Segment& s : params.layout().segments()) {
      manifest << "segment " << s.name << ' ' << s.rows << ' ' << s.cols << ' ' << s.offset << '\n';
    }
  }
  std::ofstream bin(with_suffix(stem, ".bin"), std::ios::binary | std::ios::trunc);
  if (!bin) throw std::runtime_error("cannot write " + with_suffix(stem, ".bin").string());
  for (double v : params.values()) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
    bin.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
  }
}

ParamVector load_checkpoint(const std::filesystem::path& stem) {
  const auto manifest_path = with_suffix(stem, ".manifest");
  std::ifstream manifest(manifest_path);
  if (!manifest) throw ConfigError("cannot open checkpoint manifest " + manifest_path.string());

  std::string line;
  int line_no = 0;
  auto layout = std::make_shared<Layout>();
  std::size_t total = 0;
  bool have_header = false;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream in(line);
    std::string tag;
    in >> tag;
    if (!have_header) {
      int version = 0;
      if (tag != kMagic || !(in >> version) || version != kVersion)
        throw ConfigError("bad checkpoint header", line_no, 1);
      have_header = true;
    } else if (tag == "total") {
      if (!(in >> total)) throw ConfigError("bad total line", line_no, 7);
    } else if (tag == "segment") {
      std::string name;
      std::size_t rows = 0, cols = 0, offset = 0;
      if (!(in >> name >> rows >> cols >> offset))
        throw ConfigError("bad segment line", line_no, 9);
      if (offset != layout->size()) throw ConfigError("non-contiguous segment " + name, line_no, 1);
      layout->add(name, rows, cols);
    } else {
      throw ConfigError("unknown manifest entry '" + tag + "'", line_no, 1);
    }
  }
  if (!have_header) throw ConfigError("empty checkpoint manifest " + manifest_path.string());
  if (total != layout->size()) throw ConfigError("segments do not cover the declared total");

  const auto bin_path = with_suffix(stem, ".bin");
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw ConfigError("cannot open checkpoint data " + bin_path.string());
  std::vector<double> values(total);
  for (double& v : values) {
    std::uint64_t bits = 0;
    if (!bin.read(reinterpret_cast<char*>(&bits), sizeof(bits)))
      throw ConfigError("checkpoint data shorter than manifest");
    v = std::bit_cast<double>(to_little_endian(bits));
  }
  if (bin.peek() != std::char_traits<char>::eof())
    throw ConfigError("checkpoint data longer than manifest");
  return ParamVector(std::move(layout), std::move(values));
}

ParamVector load_checkpoint(const std::filesystem::path& stem, const Layout& expected) {
  ParamVector loaded = load_checkpoint(stem);
  if (!(loaded.layout() == expected))
    throw ConfigError("checkpoint architecture does not match configured model");
  return loaded;
}

}  // namespace dsel

#include "bem/embedding_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>
#include <string>

#include "bem/error.hpp"

namespace bem {

namespace {

static_assert(sizeof(float) == 4, "BEMEMB stores IEEE-754 binary32");

std::uint32_t load_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_le32(std::uint32_t v, unsigned char* p) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

}  // namespace

std::vector<Embedding> read_embeddings(std::istream& in) {
  std::string header;
  require(static_cast<bool>(std::getline(in, header)), ErrorKind::data, "BEMEMB header missing");
  static const std::regex kHeader(R"(BEMEMB v1 dim=(\d+) count=(\d+)\r?)");
  std::smatch m;
  require(std::regex_match(header, m, kHeader), ErrorKind::data,
          "bad BEMEMB header '" + header + "'");
  const std::size_t dim = std::stoull(m[1].str());
  const std::size_t count = std::stoull(m[2].str());
  require(dim > 0, ErrorKind::data, "BEMEMB dim must be positive");

  std::vector<Embedding> rows;
  rows.reserve(count);
  std::vector<unsigned char> raw(dim * 4);
  std::vector<double> values(dim);
  for (std::size_t r = 0; r < count; ++r) {
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(static_cast<std::size_t>(in.gcount()) == raw.size(), ErrorKind::data,
            "BEMEMB payload truncated at row " + std::to_string(r));
    for (std::size_t d = 0; d < dim; ++d) {
      const float f = std::bit_cast<float>(load_le32(raw.data() + 4 * d));
      require(std::isfinite(f), ErrorKind::data,
              "BEMEMB row " + std::to_string(r) + " has a non-finite value");
      values[d] = static_cast<double>(f);
    }
    try {
      rows.push_back(Embedding::normalized(values));
    } catch (const Error& e) {
      fail(ErrorKind::data, "BEMEMB row " + std::to_string(r) + ": " + e.what());
    }
  }
  require(in.peek() == std::char_traits<char>::eof(), ErrorKind::data,
          "BEMEMB has trailing bytes after " + std::to_string(count) + " rows");
  return rows;
}

std::vector<Embedding> read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::data, "cannot open " + path.string());
  return read_embeddings(in);
}

void write_embeddings(std::ostream& out, const std::vector<Embedding>& rows) {
  const std::size_t dim = rows.empty() ? 1 : rows.front().dim();
  out << "BEMEMB v1 dim=" << dim << " count=" << rows.size() << '\n';
  std::vector<unsigned char> raw(dim * 4);
  for (const Embedding& e : rows) {
    require(e.dim() == dim, ErrorKind::invalid_argument, "BEMEMB rows must share one dim");
    for (std::size_t d = 0; d < dim; ++d)
      store_le32(std::bit_cast<std::uint32_t>(static_cast<float>(e[d])), raw.data() + 4 * d);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  }
}

void write_embeddings(const std::filesystem::path& path, const std::vector<Embedding>& rows) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::data, "cannot write " + path.string());
  write_embeddings(out, rows);
}

}  // namespace bem

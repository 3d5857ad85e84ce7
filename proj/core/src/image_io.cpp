#include "bem/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>

#include "bem/error.hpp"

namespace bem {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      if (!token.empty()) break;
    } else {
      token.push_back(static_cast<char>(ch));
    }
    ch = in.get();
  }
  return token;
}

int header_int(std::istream& in, const std::filesystem::path& path) {
  const std::string token = header_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used == token.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::data, "bad PNM header field '" + token + "' in " + path.string());
}

}  // namespace

float quantize_u8(float v) noexcept {
  const float clamped = std::clamp(v, 0.0f, 1.0f);
  return std::nearbyint(clamped * 255.0f) / 255.0f;
}

Frame read_pnm(const std::filesystem::path& path, std::int64_t frame_id) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::data, "cannot open " + path.string());
  const std::string magic = header_token(in);
  require(magic == "P5" || magic == "P6", ErrorKind::data,
          path.string() + " is not a binary PGM/PPM (magic '" + magic + "')");
  Frame f;
  f.frame_id = frame_id;
  f.channels = magic == "P6" ? 3 : 1;
  f.width = header_int(in, path);
  f.height = header_int(in, path);
  const int maxval = header_int(in, path);
  require(f.width > 0 && f.height > 0, ErrorKind::data, path.string() + " has empty dimensions");
  require(maxval == 255, ErrorKind::data, path.string() + " must use maxval 255");

  std::vector<unsigned char> raw(f.pixel_count() * static_cast<std::size_t>(f.channels));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  require(static_cast<std::size_t>(in.gcount()) == raw.size(), ErrorKind::data,
          path.string() + " is truncated");
  f.pixels.resize(raw.size());
  std::transform(raw.begin(), raw.end(), f.pixels.begin(),
                 [](unsigned char b) { return static_cast<float>(b) / 255.0f; });
  return f;
}

void write_pnm(const std::filesystem::path& path, const Frame& frame) {
  validate(frame);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::data, "cannot write " + path.string());
  out << (frame.channels == 3 ? "P6" : "P5") << '\n'
      << frame.width << ' ' << frame.height << '\n'
      << 255 << '\n';
  std::vector<unsigned char> raw(frame.pixels.size());
  std::transform(frame.pixels.begin(), frame.pixels.end(), raw.begin(), [](float v) {
    return static_cast<unsigned char>(std::nearbyint(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  });
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  require(static_cast<bool>(out), ErrorKind::data, "short write to " + path.string());
}

std::string frame_filename(std::int64_t frame_id, int channels) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "frame_%06lld.%s", static_cast<long long>(frame_id),
                channels == 3 ? "ppm" : "pgm");
  return buf;
}

std::vector<Frame> read_frame_directory(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorKind::data,
          "frame directory " + dir.string() + " does not exist");
  static const std::regex kPattern(R"(frame_(\d{6,})\.(ppm|pgm))");
  std::map<std::int64_t, std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, kPattern)) continue;
    const std::int64_t id = std::stoll(m[1].str());
    require(files.emplace(id, entry.path()).second, ErrorKind::data,
            "duplicate frame id " + std::to_string(id) + " in " + dir.string());
  }
  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& [id, path] : files) {
    if (!frames.empty()) {
      require(id == frames.back().frame_id + 1, ErrorKind::data,
              "frame id gap: missing frame " + std::to_string(frames.back().frame_id + 1));
    }
    frames.push_back(read_pnm(path, id));
    const Frame& f = frames.back();
    const Frame& first = frames.front();
    require(f.width == first.width && f.height == first.height && f.channels == first.channels,
            ErrorKind::data, "frame " + std::to_string(id) + " changes dimensions mid-stream");
  }
  return frames;
}

void write_frame_directory(const std::filesystem::path& dir, const std::vector<Frame>& frames) {
  std::filesystem::create_directories(dir);
  for (const Frame& f : frames) write_pnm(dir / frame_filename(f.frame_id, f.channels), f);
}

}  // namespace bem

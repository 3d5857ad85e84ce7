#include "bem/detection_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>

#include <nlohmann/json.hpp>

#include "bem/error.hpp"

namespace bem {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

json parse_object(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::data, std::string("malformed JSON: ") + e.what());
  }
  require(j.is_object(), ErrorKind::data, "record is not a JSON object");
  return j;
}

std::int64_t get_frame_id(const json& j) {
  const auto it = j.find("frame_id");
  require(it != j.end() && it->is_number_integer(), ErrorKind::data, "frame_id must be an integer");
  return it->get<std::int64_t>();
}

Box get_box(const json& j) {
  const auto it = j.find("box");
  require(it != j.end() && it->is_array() && it->size() == 4, ErrorKind::data,
          "box must be an array [x1,y1,x2,y2]");
  double v[4];
  for (std::size_t k = 0; k < 4; ++k) {
    require((*it)[k].is_number(), ErrorKind::data, "box coordinates must be numbers");
    v[k] = (*it)[k].get<double>();
    require(std::isfinite(v[k]), ErrorKind::data, "box coordinates must be finite");
  }
  const Box b{v[0], v[1], v[2], v[3]};
  require(b.valid(), ErrorKind::data, "box must satisfy x1 < x2 and y1 < y2");
  return b;
}

std::optional<int> get_label(const json& j) {
  const auto it = j.find("label");
  if (it == j.end() || it->is_null()) return std::nullopt;
  require(it->is_number_integer(), ErrorKind::data, "label must be an integer");
  return it->get<int>();
}

ordered_json detection_json(const Detection& det) {
  ordered_json j;
  j["frame_id"] = det.frame_id;
  j["box"] = {det.box.x1, det.box.y1, det.box.x2, det.box.y2};
  j["score"] = det.score;
  if (det.label) j["label"] = *det.label;
  return j;
}

template <typename T, typename Parse>
std::vector<T> read_lines(std::istream& in, Parse parse) {
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(line));
    } catch (const Error& e) {
      fail(ErrorKind::data, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::data, "cannot write " + path.string());
  for (const std::string& l : lines) out << l << '\n';
  require(static_cast<bool>(out), ErrorKind::data, "short write to " + path.string());
}

}  // namespace

Detection parse_detection(const std::string& line) {
  const json j = parse_object(line);
  Detection d;
  d.frame_id = get_frame_id(j);
  d.box = get_box(j);
  const auto it = j.find("score");
  require(it != j.end() && it->is_number(), ErrorKind::data, "score must be a number");
  d.score = it->get<double>();
  require(std::isfinite(d.score), ErrorKind::data, "score must be finite");
  d.label = get_label(j);
  return d;
}

GroundTruthBox parse_ground_truth(const std::string& line) {
  const json j = parse_object(line);
  GroundTruthBox g;
  g.frame_id = get_frame_id(j);
  g.box = get_box(j);
  g.label = get_label(j).value_or(0);
  return g;
}

std::vector<Detection> read_detections(std::istream& in) {
  return read_lines<Detection>(in, parse_detection);
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::data, "cannot open " + path.string());
  return read_detections(in);
}

std::vector<GroundTruthBox> read_ground_truth(std::istream& in) {
  return read_lines<GroundTruthBox>(in, parse_ground_truth);
}

std::vector<GroundTruthBox> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::data, "cannot open " + path.string());
  return read_ground_truth(in);
}

std::string to_json_line(const Detection& det) { return detection_json(det).dump(); }

std::string to_json_line(const GroundTruthBox& gt) {
  ordered_json j;
  j["frame_id"] = gt.frame_id;
  j["box"] = {gt.box.x1, gt.box.y1, gt.box.x2, gt.box.y2};
  j["label"] = gt.label;
  return j.dump();
}

std::string to_json_line(const RescoredDetection& det) {
  ordered_json j = detection_json(det.detection);
  j["score_raw"] = det.score_raw;
  j["score_calibrated"] = det.score_calibrated;
  j["similarity"] = det.similarity ? ordered_json(*det.similarity) : ordered_json();
  return j.dump();
}

void write_detections(const std::filesystem::path& path, const std::vector<Detection>& dets) {
  std::vector<std::string> lines;
  for (const Detection& d : dets) lines.push_back(to_json_line(d));
  write_lines(path, lines);
}

void write_ground_truth(const std::filesystem::path& path, const std::vector<GroundTruthBox>& gts) {
  std::vector<std::string> lines;
  for (const GroundTruthBox& g : gts) lines.push_back(to_json_line(g));
  write_lines(path, lines);
}

void write_rescored(const std::filesystem::path& path, const std::vector<RescoredDetection>& dets) {
  std::vector<std::string> lines;
  for (const RescoredDetection& d : dets) lines.push_back(to_json_line(d));
  write_lines(path, lines);
}

}  // namespace bem

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bem/detection.hpp"
#include "bem/rescore.hpp"

namespace bem {

// JSON Lines, one object per record:
//   {"frame_id":int,"box":[x1,y1,x2,y2],"score":float,"label":int?}
// Rescored output additionally carries "score_raw" and "similarity" (null
// during cold start). Blank lines are skipped; anything else malformed is a
// data error that names the line number.

Detection parse_detection(const std::string& line);
GroundTruthBox parse_ground_truth(const std::string& line);

std::vector<Detection> read_detections(std::istream& in);
std::vector<Detection> read_detections(const std::filesystem::path& path);
std::vector<GroundTruthBox> read_ground_truth(std::istream& in);
std::vector<GroundTruthBox> read_ground_truth(const std::filesystem::path& path);

std::string to_json_line(const Detection& det);
std::string to_json_line(const GroundTruthBox& gt);
std::string to_json_line(const RescoredDetection& det);

void write_detections(const std::filesystem::path& path, const std::vector<Detection>& dets);
void write_ground_truth(const std::filesystem::path& path, const std::vector<GroundTruthBox>& gts);
void write_rescored(const std::filesystem::path& path, const std::vector<RescoredDetection>& dets);

}  // namespace bem

#pragma once

#include <string>

#include "bem/pipeline.hpp"
#include "bem/simulator.hpp"

namespace bem {

// JSON (de)serialization of the run configurations. Missing keys keep their
// defaults; unknown keys and ill-typed values are config errors. The `to_json`
// side always writes every field so lock files echo the resolved defaults.

PipelineConfig pipeline_config_from_json(const std::string& text);
std::string to_json(const PipelineConfig& cfg, int indent = 2);

/// Simulation document: {"scene": {...}, "detector": {...}}.
struct SimulationConfig {
  SceneConfig scene;
  SynthDetectorConfig detector;
};

SimulationConfig simulation_config_from_json(const std::string& text);
std::string to_json(const SimulationConfig& cfg, int indent = 2);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace bem

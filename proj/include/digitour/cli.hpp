#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "digitour/detector.hpp"
#include "digitour/recognizer.hpp"

namespace digitour {

struct PipelineConfig {
  int face_size = 1024;
  double iou = 0.5;
  DetectorParams detector;
  RecognizerParams recognizer;
};

// Missing keys keep their defaults; unknown keys and out-of-range values
// throw InvalidConfig.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& c);
void validate_pipeline_config(const PipelineConfig& c);
std::string pipeline_config_hash(const PipelineConfig& c);

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

// args[0] is the program name.
int run_subcommand(const std::vector<std::string>& args);

}  // namespace digitour

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ssread/model.hpp"
#include "ssread/train.hpp"

namespace ssread {

nlohmann::json config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

ReadoutKind readout_from_name(const std::string& s);
AggregatorKind agg_from_name(const std::string& s);
TrainMode mode_from_name(const std::string& s);
FeaturePolicy policy_from_name(const std::string& s);

nlohmann::json model_to_json(const ModelState& state);
ModelState model_from_json(const nlohmann::json& j);

// Checkpoint = resolved config + dataset facts + one trained model.
struct Checkpoint {
  ModelConfig config;
  std::string dataset;
  int feature_dim = 0;
  int num_classes = 0;
  int fold = 0;
  std::uint64_t seed = 0;
  ModelState model;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Report artifacts. CSV files carry the resolved config as '#' header lines
// and are byte-stable for a fixed config and seed.
void write_report_csv(const RunReport& report, const std::filesystem::path& path);
void write_curves_csv(const RunReport& report, const std::filesystem::path& path);
void write_report_json(const RunReport& report, const std::filesystem::path& path);

std::string config_header_line(const ModelConfig& cfg, const std::string& dataset);

}  // namespace ssread

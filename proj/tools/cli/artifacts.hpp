#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "geofuse/trainer.hpp"
#include "pipeline.hpp"

namespace geofuse::cli {

std::string read_text(const std::filesystem::path& path);
/// Creates parent directories; writes bytes unchanged (LF endings).
void write_text(const std::filesystem::path& path, const std::string& text);

std::string hyperparams_text(const HyperParams& hp);
HyperParams parse_hyperparams(const std::string& text);

std::string cnn_text(const CnnClassifier& model);
CnnClassifier parse_cnn(const std::string& text);

std::string forecaster_text(const LstmForecaster& model);
LstmForecaster parse_forecaster(const std::string& text);

/// epoch,train_loss,validation_loss
std::string learning_curve_csv(const TrainReport& report);

/// Flat `key = value` record of numbers.
using Record = std::map<std::string, double>;
std::string record_text(const Record& record);
Record parse_record(const std::string& text);

Record training_record(const TrainReport& cnn, std::size_t parameter_count, const TrainReport& forecaster);
Record evaluation_record(const RunEvaluation& ev, std::size_t classes);

}  // namespace geofuse::cli

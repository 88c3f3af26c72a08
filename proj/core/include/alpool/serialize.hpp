#pragma once

#include <string>

#include "alpool/classifier.hpp"
#include "alpool/selection.hpp"

namespace alpool {

/// Model weights as a JSON document. Round-trips exactly (shortest-form
/// decimal floats).
std::string model_to_json(const Classifier& model);
Classifier model_from_json(const std::string& text);
void save_model(const Classifier& model, const std::string& path);
Classifier load_model(const std::string& path);

/// Per-run iteration log as JSON.
std::string run_record_to_json(const RunRecord& run);
RunRecord run_record_from_json(const std::string& text);
void save_run_record(const RunRecord& run, const std::string& path);
RunRecord load_run_record(const std::string& path);

/// Appends one entry to a JSON-array error log, creating the file on first
/// use. Each entry is {"where": ..., "what": ...}.
void append_error_log(const std::string& path, const std::string& where,
                      const std::string& what);

}  // namespace alpool

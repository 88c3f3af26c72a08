#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alpool/errors.hpp"

namespace alpool {

enum class Label { BonaFide, Spoof };

inline const char* to_string(Label l) {
  return l == Label::BonaFide ? "bonafide" : "spoof";
}

inline Label label_from_string(const std::string& s) {
  if (s == "bonafide") return Label::BonaFide;
  if (s == "spoof") return Label::Spoof;
  throw ParseError("unknown label '" + s + "' (expected bonafide|spoof)");
}

/// Class index used by the classifier: bona fide logit first.
inline std::size_t class_index(Label l) {
  return l == Label::BonaFide ? 0 : 1;
}

/// One labeled feature vector. The unit the pool trades in.
struct Example {
  std::uint64_t uid = 0;
  int source_id = 0;
  Label label = Label::BonaFide;
  std::vector<double> features;
};

/// A named collection of examples with unique uids.
struct Dataset {
  std::string name;
  std::string provenance;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }

  std::size_t count(Label l) const {
    std::size_t n = 0;
    for (const auto& e : examples)
      if (e.label == l) ++n;
    return n;
  }
};

/// Checks uid uniqueness, consistent dimension, and finite features.
/// Throws IntegrityError / std::invalid_argument on violation.
void validate_dataset(const Dataset& d);

}  // namespace alpool

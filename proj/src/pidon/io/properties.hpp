#pragma once

// Material and kinetics property file.
//
// JSON document, schema "pidon.properties" version 1. Every numeric field is
// an object {"value": <number>, "unit": "<unit>"} and the unit string must
// match the expected unit exactly. See configs/properties.default.json.

#include <string>

#include "pidon/process/model.hpp"

namespace pidon::io {

inline constexpr int kPropertiesVersion = 1;

struct PropertySet {
  std::string tool_name;
  std::string part_name;
  process::MaterialProps materials;
  process::CureKineticsParams kinetics;
  double T_init = 20.0;
  double alpha_init = 0.05;
  std::string hash;  ///< content hash of the source text
};

PropertySet parse_properties(const std::string& text);
PropertySet load_properties(const std::string& path);
std::string format_properties(const PropertySet& p);

/// Built-in defaults identical to configs/properties.default.json.
PropertySet default_properties();

std::string read_file(const std::string& path);
/// Writes via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace pidon::io

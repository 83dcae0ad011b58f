#include "pidon/io/properties.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pidon/error.hpp"
#include "pidon/io/hash.hpp"

namespace pidon::io {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + tmp);
    out << contents;
    out.flush();
    require(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  require(!ec, ErrorCode::kIo, "cannot rename " + tmp + " -> " + path + ": " + ec.message());
}

namespace {

double quantity(const json& obj, const char* key, const char* unit, const std::string& where) {
  require(obj.contains(key), ErrorCode::kInvalidInput, where + "." + key + " missing");
  const json& q = obj.at(key);
  require(q.is_object() && q.contains("value") && q.contains("unit"), ErrorCode::kInvalidInput,
          where + "." + key + " must be {value, unit}");
  require(q.at("value").is_number(), ErrorCode::kInvalidInput, where + "." + key + ".value must be a number");
  const std::string got = q.at("unit").get<std::string>();
  require(got == unit, ErrorCode::kInvalidInput,
          where + "." + key + " has unit '" + got + "', expected '" + unit + "'");
  return q.at("value").get<double>();
}

json q(double v, const char* unit) { return json{{"value", v}, {"unit", unit}}; }

process::Material material(const json& j, const std::string& where) {
  process::Material m;
  m.k = quantity(j, "k", "W/(m*K)", where);
  m.rho = quantity(j, "rho", "kg/m^3", where);
  m.cp = quantity(j, "cp", "J/(kg*K)", where);
  return m;
}

}  // namespace

PropertySet parse_properties(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidInput, std::string("property file: ") + e.what());
  }
  require(j.value("schema", "") == "pidon.properties", ErrorCode::kInvalidInput,
          "property file: schema must be 'pidon.properties'");
  const int version = j.value("version", -1);
  require(version == kPropertiesVersion, ErrorCode::kVersionMismatch,
          "property file: unsupported version " + std::to_string(version));

  PropertySet p;
  const json& tool = j.at("tool");
  const json& part = j.at("part");
  p.tool_name = tool.value("name", "tool");
  p.part_name = part.value("name", "part");
  p.materials.tool = material(tool, "tool");
  p.materials.part = material(part, "part");
  p.materials.v_r = quantity(part, "v_r", "1", "part");
  p.materials.rho_r = quantity(part, "rho_r", "kg/m^3", "part");
  p.materials.H_r = quantity(part, "H_r", "J/kg", "part");

  const json& k = j.at("kinetics");
  p.kinetics.delta_E = quantity(k, "delta_E", "J/mol", "kinetics");
  p.kinetics.R = quantity(k, "R", "J/(mol*K)", "kinetics");
  p.kinetics.A = quantity(k, "A", "1/s", "kinetics");
  p.kinetics.m = quantity(k, "m", "1", "kinetics");
  p.kinetics.n = quantity(k, "n", "1", "kinetics");
  p.kinetics.C = quantity(k, "C", "1", "kinetics");
  p.kinetics.C0 = quantity(k, "C0", "1", "kinetics");
  p.kinetics.CT = quantity(k, "CT", "1/K", "kinetics");

  const json& init = j.at("initial");
  p.T_init = quantity(init, "T_init", "degC", "initial");
  p.alpha_init = quantity(init, "alpha_init", "1", "initial");

  p.materials.validate();
  p.kinetics.validate();
  require(p.alpha_init >= 0 && p.alpha_init < 1, ErrorCode::kInvalidInput, "alpha_init must lie in [0, 1)");
  p.hash = content_hash(text);
  return p;
}

PropertySet load_properties(const std::string& path) { return parse_properties(read_file(path)); }

std::string format_properties(const PropertySet& p) {
  const auto& m = p.materials;
  json j;
  j["schema"] = "pidon.properties";
  j["version"] = kPropertiesVersion;
  j["tool"] = {{"name", p.tool_name},
               {"k", q(m.tool.k, "W/(m*K)")},
               {"rho", q(m.tool.rho, "kg/m^3")},
               {"cp", q(m.tool.cp, "J/(kg*K)")}};
  j["part"] = {{"name", p.part_name},
               {"k", q(m.part.k, "W/(m*K)")},
               {"rho", q(m.part.rho, "kg/m^3")},
               {"cp", q(m.part.cp, "J/(kg*K)")},
               {"v_r", q(m.v_r, "1")},
               {"rho_r", q(m.rho_r, "kg/m^3")},
               {"H_r", q(m.H_r, "J/kg")}};
  const auto& k = p.kinetics;
  j["kinetics"] = {{"delta_E", q(k.delta_E, "J/mol")}, {"R", q(k.R, "J/(mol*K)")}, {"A", q(k.A, "1/s")},
                   {"m", q(k.m, "1")},     {"n", q(k.n, "1")},     {"C", q(k.C, "1")},
                   {"C0", q(k.C0, "1")},   {"CT", q(k.CT, "1/K")}};
  j["initial"] = {{"T_init", q(p.T_init, "degC")}, {"alpha_init", q(p.alpha_init, "1")}};
  return j.dump(2) + "\n";
}

PropertySet default_properties() {
  PropertySet p;
  p.tool_name = "Invar 36";
  p.part_name = "AS4/8552";
  // Placeholder thermal properties from open literature; replace with
  // characterized values for production use.
  p.materials.tool = {10.15, 8050.0, 515.0};
  p.materials.part = {0.64, 1570.0, 1100.0};
  p.materials.v_r = 0.426;
  p.materials.rho_r = 1300.0;
  p.materials.H_r = 574.0e3;
  p.hash = content_hash(format_properties(p));
  return p;
}

}  // namespace pidon::io

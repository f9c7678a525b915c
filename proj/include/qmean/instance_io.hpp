#pragma once

// JSON instance files:
//   {"kind":"real","ell":<int>,"values":[<float>...]}
//   {"kind":"distance","n":<int>,"rows":[[<float>...]...]}
// "ell" may be omitted (or 0) for an arbitrary-precision real oracle.

#include <qmean/errors.hpp>
#include <qmean/oracle.hpp>

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace qmean {

using Instance = std::variant<RealOracle, DistanceOracle>;

namespace detail {

inline double json_unit_value(const nlohmann::json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError(field + ": expected a number");
  const double d = v.get<double>();
  if (!(d >= 0.0 && d <= 1.0)) {
    throw ValidationError(field + " = " + std::to_string(d) + " outside [0,1]");
  }
  return d;
}

}  // namespace detail

inline Instance parse_instance(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("instance: expected a JSON object");
  if (!doc.contains("kind") || !doc["kind"].is_string()) {
    throw ValidationError("kind: missing or not a string");
  }
  const auto kind = doc["kind"].get<std::string>();

  if (kind == "real") {
    unsigned ell = RealOracle::kArbitraryPrecision;
    if (doc.contains("ell")) {
      if (!doc["ell"].is_number_integer() || doc["ell"].get<long long>() < 0) {
        throw ValidationError("ell: expected a non-negative integer");
      }
      ell = doc["ell"].get<unsigned>();
    }
    if (!doc.contains("values") || !doc["values"].is_array()) {
      throw ValidationError("values: missing or not an array");
    }
    std::vector<double> values;
    const auto& arr = doc["values"];
    for (std::size_t x = 0; x < arr.size(); ++x) {
      values.push_back(detail::json_unit_value(arr[x], "values[" + std::to_string(x) + "]"));
    }
    return RealOracle(std::move(values), ell);
  }

  if (kind == "distance") {
    if (!doc.contains("n") || !doc["n"].is_number_integer() || doc["n"].get<long long>() <= 0) {
      throw ValidationError("n: missing or not a positive integer");
    }
    const auto n = doc["n"].get<std::size_t>();
    if (!doc.contains("rows") || !doc["rows"].is_array()) {
      throw ValidationError("rows: missing or not an array");
    }
    const auto& rows = doc["rows"];
    if (rows.size() != n) {
      throw ValidationError("rows: expected " + std::to_string(n) + " rows, got " +
                            std::to_string(rows.size()));
    }
    std::vector<double> table;
    table.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string row_field = "rows[" + std::to_string(i) + "]";
      if (!rows[i].is_array() || rows[i].size() != n) {
        throw ValidationError(row_field + ": expected an array of " + std::to_string(n) + " numbers");
      }
      for (std::size_t j = 0; j < n; ++j) {
        table.push_back(detail::json_unit_value(rows[i][j], row_field + "[" + std::to_string(j) + "]"));
      }
    }
    return DistanceOracle(n, std::move(table));
  }

  throw ValidationError("kind: unknown instance kind '" + kind + "'");
}

inline Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open instance file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return parse_instance(doc);
}

inline nlohmann::json instance_to_json(const Instance& instance) {
  if (const auto* real = std::get_if<RealOracle>(&instance)) {
    nlohmann::json doc;
    doc["kind"] = "real";
    doc["ell"] = real->ell();
    doc["values"] = std::vector<double>(real->values().begin(), real->values().end());
    return doc;
  }
  const auto& dist = std::get<DistanceOracle>(instance);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const auto row = dist.row(i);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  nlohmann::json doc;
  doc["kind"] = "distance";
  doc["n"] = dist.size();
  doc["rows"] = std::move(rows);
  return doc;
}

inline void save_instance(const std::filesystem::path& path, const Instance& instance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << instance_to_json(instance).dump() << '\n';
}

}  // namespace qmean

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"  // nlohmann/json, vendored

#include "satspline/dataset.hpp"
#include "satspline/error.hpp"
#include "satspline/loss.hpp"
#include "satspline/model.hpp"
#include "satspline/path.hpp"
#include "satspline/solver.hpp"

namespace satspline::io {

inline constexpr int kFormatVersion = 1;

// %.17g: enough digits to round-trip every double.
inline std::string format_double(double v) {
  if (!std::isfinite(v)) throw InvalidInput("cannot serialize a non-finite number");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

inline std::string model_json(const GamModel& m, const char* kind) {
  std::ostringstream os;
  os << "{\"format_version\":" << kFormatVersion << ",\"kind\":\"" << kind << "\",\"degree\":" << m.degree
     << ",\"tau\":" << format_double(m.tau) << ",\"loss\":{\"kind\":\"" << loss_name(m.loss.kind) << "\",\"delta\":"
     << (m.loss.kind == LossKind::PseudoHuber ? format_double(m.loss.delta) : std::string("null")) << "}"
     << ",\"offset\":" << format_double(m.offset) << ",\"features\":[";
  for (std::size_t d = 0; d < m.dim(); ++d) {
    if (d) os << ",";
    const AffineScaling s = d < m.scaling.size() ? m.scaling[d] : AffineScaling{};
    os << "{\"index\":" << d << ",\"name\":" << (m.names.empty() ? std::string("null") : quote(m.names[d]))
       << ",\"scale\":{\"min\":" << format_double(s.min) << ",\"max\":" << format_double(s.max) << "},\"atoms\":[";
    bool first = true;
    for (const Atom& a : m.per_feature[d].atoms()) {
      if (!first) os << ",";
      first = false;
      os << "{\"t\":" << format_double(a.t) << ",\"w\":" << format_double(a.w) << "}";
    }
    os << "]}";
  }
  os << "]}\n";
  return os.str();
}

inline double number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw InvalidInput(std::string("model field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace detail

inline std::string serialize_model(const GamModel& model) { return detail::model_json(model, "gam"); }

inline std::string serialize_model(const SplineModel& model) { return detail::model_json(to_gam(model), "spline"); }

// Parses and validates a model file; spline files become one-feature models.
inline GamModel deserialize_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed model JSON: ") + e.what());
  }
  require(j.is_object(), "model JSON must be an object");
  require(j.contains("format_version") && j["format_version"].is_number_integer(), "missing format_version");
  if (j["format_version"].get<int>() != kFormatVersion)
    throw InvalidInput("unsupported model format_version " + j["format_version"].dump());
  require(j.contains("kind") && j["kind"].is_string(), "missing model kind");
  const std::string kind = j["kind"].get<std::string>();
  require(kind == "gam" || kind == "spline", "model kind must be 'gam' or 'spline'");

  GamModel m;
  require(j.contains("degree") && j["degree"].is_number_integer(), "missing degree");
  m.degree = j["degree"].get<int>();
  require(m.degree == 1 || m.degree == 2, "degree must be 1 or 2");
  m.tau = detail::number(j, "tau");
  require(std::isfinite(m.tau) && m.tau >= 0.0, "tau must be non-negative");
  m.offset = detail::number(j, "offset");
  require(std::isfinite(m.offset), "offset must be finite");

  require(j.contains("loss") && j["loss"].is_object(), "missing loss");
  const auto& lj = j["loss"];
  require(lj.contains("kind") && lj["kind"].is_string(), "missing loss kind");
  m.loss.kind = parse_loss_kind(lj["kind"].get<std::string>());
  if (m.loss.kind == LossKind::PseudoHuber) {
    m.loss.delta = detail::number(lj, "delta");
    require(m.loss.delta > 0.0 && std::isfinite(m.loss.delta), "pseudo-Huber delta must be positive");
  }

  require(j.contains("features") && j["features"].is_array(), "missing features");
  const auto& fj = j["features"];
  require(!fj.empty(), "model needs at least one feature");
  require(kind == "gam" || fj.size() == 1, "spline model must have exactly one feature");
  bool any_name = false;
  std::vector<std::string> names;
  for (std::size_t d = 0; d < fj.size(); ++d) {
    const auto& f = fj[d];
    require(f.is_object(), "feature entries must be objects");
    require(f.contains("index") && f["index"].is_number_integer() && f["index"].get<long long>() == static_cast<long long>(d),
            "feature indices must be 0..D-1 in order");
    if (f.contains("name") && f["name"].is_string()) {
      any_name = true;
      names.push_back(f["name"].get<std::string>());
    } else {
      names.emplace_back();
    }
    require(f.contains("scale") && f["scale"].is_object(), "feature scale missing");
    AffineScaling s{detail::number(f["scale"], "min"), detail::number(f["scale"], "max")};
    require(std::isfinite(s.min) && std::isfinite(s.max) && s.max >= s.min, "feature scale needs min <= max");
    m.scaling.push_back(s);
    require(f.contains("atoms") && f["atoms"].is_array(), "feature atoms missing");
    std::vector<Atom> atoms;
    double prev = -1.0;
    for (const auto& a : f["atoms"]) {
      require(a.is_object(), "atoms must be objects");
      Atom at{detail::number(a, "t"), detail::number(a, "w")};
      require(std::isfinite(at.t) && at.t >= 0.0 && at.t <= 1.0, "atom location " + format_double(at.t) + " outside [0,1]");
      require(std::isfinite(at.w), "atom weight must be finite");
      require(at.t > prev, "atoms must be sorted by strictly increasing t");
      prev = at.t;
      atoms.push_back(at);
    }
    m.per_feature.emplace_back(std::move(atoms));
    require(std::abs(m.per_feature.back().total_mass()) <= kMassTolerance,
            "feature " + std::to_string(d) + " measure does not have zero total mass");
  }
  if (any_name) m.names = std::move(names);
  require(m.l1_norm() <= m.tau + kMassTolerance, "sum of absolute weights exceeds tau");
  return m;
}

inline SplineModel deserialize_spline(const std::string& text) { return to_spline(deserialize_model(text)); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << content;
  if (!out) throw InvalidInput("failed writing '" + path + "'");
}

// ---- CSV -------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cell);
      cell.clear();
    } else {
      cell += ch;
    }
  }
  out.push_back(cell);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    for (auto& c : cells) c = trim(c);
    if (header) {
      t.header = std::move(cells);
      header = false;
    } else {
      require(cells.size() == t.header.size(), "row " + std::to_string(t.rows.size() + 1) + " has " +
                                                    std::to_string(cells.size()) + " cells, header has " +
                                                    std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  require(!t.header.empty(), "empty CSV file");
  return t;
}

inline double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (cell.empty() || end != begin + cell.size() || !std::isfinite(v))
    throw InvalidInput("non-numeric value '" + cell + "' at row " + std::to_string(row) + ", column '" + column + "'");
  return v;
}

// Numeric CSV with a header row. Rows are numbered from 1 (first data row).
// With an empty target every column is a feature and y is left empty.
inline Dataset ingest_csv_text(const std::string& text, const std::string& target) {
  const CsvTable t = parse_csv(text);
  require(!t.rows.empty(), "CSV file has no data rows");
  std::size_t target_col = t.header.size();
  if (!target.empty()) {
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (t.header[c] == target) target_col = c;
    require(target_col < t.header.size(), "target column '" + target + "' not found");
  }
  std::vector<std::size_t> feature_cols;
  Dataset ds;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (c != target_col) {
      feature_cols.push_back(c);
      ds.names.push_back(t.header[c]);
    }
  require(!feature_cols.empty(), "CSV has no feature columns");
  ds.X = Matrix(t.rows.size(), feature_cols.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t f = 0; f < feature_cols.size(); ++f)
      ds.X(r, f) = parse_number(t.rows[r][feature_cols[f]], r + 1, t.header[feature_cols[f]]);
    if (target_col < t.header.size()) ds.y.push_back(parse_number(t.rows[r][target_col], r + 1, target));
  }
  return ds;
}

inline Dataset ingest_csv(const std::string& path, const std::string& target) {
  return ingest_csv_text(read_file(path), target);
}

inline std::string predictions_csv(std::span<const double> predictions) {
  std::ostringstream os;
  os << "row_index,prediction\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) os << i << "," << format_double(predictions[i]) << "\n";
  return os.str();
}

inline std::string path_csv(const PathResult& path) {
  std::ostringstream os;
  os << "tau,train_objective,val_metric,n_atoms,n_features_selected\n";
  for (const PathPoint& p : path.points)
    os << format_double(p.tau) << "," << format_double(p.train_objective) << ","
       << (std::isnan(p.val_metric) ? std::string("") : format_double(p.val_metric)) << "," << p.n_atoms << ","
       << p.n_features_selected << "\n";
  return os.str();
}

inline std::string report_json(const FitReport& r) {
  nlohmann::ordered_json j;
  j["converged"] = r.converged();
  j["termination"] = termination_name(r.termination);
  j["final_objective"] = r.final_objective;
  j["final_gap"] = r.final_gap;
  j["gap_threshold"] = r.gap_threshold;
  j["inner_failures"] = r.inner_failures;
  j["knot_moves"] = r.knot_moves;
  nlohmann::ordered_json trace = nlohmann::ordered_json::array();
  for (const auto& it : r.trace)
    trace.push_back({{"objective", it.objective}, {"gap", it.gap}, {"atom_count", it.atom_count}});
  j["trace"] = std::move(trace);
  return j.dump(2) + "\n";
}

}  // namespace satspline::io

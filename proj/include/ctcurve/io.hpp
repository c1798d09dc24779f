#pragma once

// CSV and JSON serialization of sampled curves and validation reports.
// Floats are written as the shortest decimal that round-trips.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "ctcurve/error.hpp"
#include "ctcurve/frenet.hpp"
#include "ctcurve/validate.hpp"

namespace ctcurve {

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// `t,s,x,y,z`
inline std::string curve_csv(const SampledCurve& curve) {
  std::ostringstream os;
  os << "t,s,x,y,z\n";
  for (const auto& smp : curve.samples)
    os << format_double(smp.t) << ',' << format_double(smp.s) << ',' << format_double(smp.point.x) << ','
       << format_double(smp.point.y) << ',' << format_double(smp.point.z) << '\n';
  return os.str();
}

/// Closed-form and oracle samples on the same t-grid, side by side.
struct PairedCurve {
  SampledCurve closed_form;
  SampledCurve oracle;  // may hold fewer samples when truncated

  struct Row {
    double t, s;
    Vec3 cf, ode;
    double dist;
  };

  std::vector<Row> rows() const {
    std::vector<Row> out;
    std::size_t j = 0;
    for (const auto& a : closed_form.samples) {
      while (j < oracle.samples.size() && oracle.samples[j].t < a.t) ++j;
      if (j == oracle.samples.size() || oracle.samples[j].t != a.t) continue;
      const auto& b = oracle.samples[j];
      out.push_back({a.t, a.s, a.point, b.point, distance(a.point, b.point)});
    }
    return out;
  }

  double max_distance() const {
    double d = 0.0;
    for (const auto& r : rows()) d = std::fmax(d, r.dist);
    return d;
  }
};

/// `t,s,x_cf,y_cf,z_cf,x_ode,y_ode,z_ode,dist`
inline std::string paired_csv(const PairedCurve& pc) {
  std::ostringstream os;
  os << "t,s,x_cf,y_cf,z_cf,x_ode,y_ode,z_ode,dist\n";
  for (const auto& r : pc.rows()) {
    os << format_double(r.t) << ',' << format_double(r.s);
    for (const Vec3* v : {&r.cf, &r.ode})
      os << ',' << format_double(v->x) << ',' << format_double(v->y) << ',' << format_double(v->z);
    os << ',' << format_double(r.dist) << '\n';
  }
  return os.str();
}

using json = nlohmann::ordered_json;

inline json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline json to_json(const CurveParams& p) { return {{"tau", p.tau}, {"phase_C", p.phase_C}, {"t0", p.t0}}; }

inline json to_json(const std::optional<Truncation>& tr) {
  if (!tr) return nullptr;
  return {{"requested", {tr->requested_lo, tr->requested_hi}},
          {"achieved", {tr->achieved_lo, tr->achieved_hi}},
          {"reason", tr->reason}};
}

inline json to_json(const ValidationReport& r) {
  json metrics = json::object();
  for (const auto& [name, m] : r.metrics)
    metrics[name] = {{"value", m.value}, {"tolerance", m.tolerance}, {"pass", m.pass}};
  return {{"case_id", r.case_id},
          {"tau", r.tau},
          {"t_window", {r.t_window.first, r.t_window.second}},
          {"metrics", metrics},
          {"worst_t", r.worst_t},
          {"truncation", to_json(r.truncation)},
          {"pass", r.pass()}};
}

inline json samples_json(const SampledCurve& curve) {
  json arr = json::array();
  for (const auto& smp : curve.samples) arr.push_back({{"t", smp.t}, {"s", smp.s}, {"point", to_json(smp.point)}});
  return arr;
}

inline json samples_json(const PairedCurve& pc) {
  json arr = json::array();
  for (const auto& r : pc.rows())
    arr.push_back({{"t", r.t},
                   {"s", r.s},
                   {"point_closed_form", to_json(r.cf)},
                   {"point_ode_oracle", to_json(r.ode)},
                   {"distance", r.dist}});
  return arr;
}

/// {params, source, truncation, samples, report}
inline json curve_document(const SampledCurve& curve, const std::optional<ValidationReport>& report = std::nullopt) {
  return {{"params", to_json(curve.params)},
          {"source", to_string(curve.source)},
          {"truncation", to_json(curve.truncation)},
          {"samples", samples_json(curve)},
          {"report", report ? to_json(*report) : json(nullptr)}};
}

inline json paired_document(const PairedCurve& pc, const std::optional<ValidationReport>& report = std::nullopt) {
  return {{"params", to_json(pc.closed_form.params)},
          {"source", "both"},
          {"truncation", to_json(pc.oracle.truncation)},
          {"samples", samples_json(pc)},
          {"report", report ? to_json(*report) : json(nullptr)}};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Writes through a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::config, "cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorCode::config, "write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::config, "cannot move output into " + path.string());
  }
}

}  // namespace ctcurve

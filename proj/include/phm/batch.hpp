#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "phm/csv.hpp"
#include "phm/error.hpp"
#include "phm/metric.hpp"
#include "phm/parallel.hpp"
#include "phm/ply.hpp"

namespace phm {

struct BatchRow {
  std::string pair_id;
  std::filesystem::path ref_path;
  std::filesystem::path dist_path;
  nlohmann::json overrides = nlohmann::json::object();  // MetricConfig keys set on this row
};

struct BatchManifest {
  std::vector<BatchRow> rows;
};

namespace batch_detail {

/// Interprets a manifest cell as the JSON type the config key expects.
inline nlohmann::json override_value(const std::string& key, const std::string& text) {
  if (key == "inner_fusion" || key == "outer_fusion") return text;
  if (key == "continuous_tail") {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw Error(ErrorKind::ConfigError, "'continuous_tail' must be true or false");
  }
  if (key == "k1" || key == "k2" || key == "patch_divisor" || key == "num_bandpass" || key == "nb_bins") {
    const double v = parse_double(text, key);
    if (v != static_cast<double>(static_cast<long long>(v)))
      throw Error(ErrorKind::ConfigError, "'" + key + "' must be an integer");
    return static_cast<long long>(v);
  }
  return parse_double(text, key);
}

}  // namespace batch_detail

/// Manifest CSV: pair_id, ref_path, dist_path, then optional columns named
/// after MetricConfig fields whose nonempty cells override the base config
/// for that row. Relative paths resolve against the manifest's directory.
inline BatchManifest read_manifest(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t id_col = table.column("pair_id");
  const std::size_t ref_col = table.column("ref_path");
  const std::size_t dist_col = table.column("dist_path");
  const auto base_dir = path.parent_path();
  const auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_relative() && !base_dir.empty() ? base_dir / fp : fp;
  };

  const MetricConfig known;
  const auto known_keys = to_json(known);
  BatchManifest manifest;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    BatchRow r;
    r.pair_id = row[id_col];
    if (r.pair_id.empty() || row[ref_col].empty() || row[dist_col].empty())
      throw Error(ErrorKind::ParseError, "manifest rows need a pair_id, ref_path and dist_path");
    if (!seen.insert(r.pair_id).second) throw Error(ErrorKind::ParseError, "duplicate pair_id '" + r.pair_id + "'");
    r.ref_path = resolve(row[ref_col]);
    r.dist_path = resolve(row[dist_col]);
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c == id_col || c == ref_col || c == dist_col) continue;
      const std::string& key = table.header[c];
      if (!known_keys.contains(key)) throw Error(ErrorKind::ConfigError, "unknown manifest column '" + key + "'");
      if (!row[c].empty()) r.overrides[key] = batch_detail::override_value(key, row[c]);
    }
    manifest.rows.push_back(std::move(r));
  }
  return manifest;
}

struct BatchResult {
  std::string pair_id;
  std::optional<QualityReport> report;
  std::string error;  // empty on success
};

inline BatchResult score_row(const BatchRow& row, const MetricConfig& base) {
  BatchResult out{row.pair_id, std::nullopt, {}};
  try {
    const MetricConfig config = apply_config(base, row.overrides);
    const PointCloud ref = load_ply(row.ref_path);
    const PointCloud dist = load_ply(row.dist_path);
    out.report = phm_score(ref, dist, config);
    if (out.report->status != ReportStatus::Ok) out.error = "NoValidPatches: " + out.report->message;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

/// Scores every manifest row on up to `jobs` workers. Failures are recorded
/// per row; results keep manifest order.
inline std::vector<BatchResult> run_batch(const BatchManifest& manifest, const MetricConfig& base, unsigned jobs) {
  std::vector<BatchResult> results(manifest.rows.size());
  parallel_for(manifest.rows.size(), jobs, [&](std::size_t i) { results[i] = score_row(manifest.rows[i], base); });
  return results;
}

inline std::string batch_csv(const std::vector<BatchResult>& results) {
  std::string out = "pair_id,d_h,d_l_o,d_l_i,d_l,omega,score,error\n";
  const auto cell = [](std::optional<double> v) { return v ? format_double(*v) : std::string{}; };
  for (const auto& r : results) {
    out += csv_escape(r.pair_id);
    if (r.report) {
      const QualityReport& q = *r.report;
      out += ',' + format_double(q.d_h) + ',' + cell(q.d_l_o) + ',' + cell(q.d_l_i) + ',' + cell(q.d_l) + ',' +
             format_double(q.omega) + ',' + cell(q.score);
    } else {
      out += ",,,,,,";
    }
    out += ',' + csv_escape(r.error) + '\n';
  }
  return out;
}

}  // namespace phm

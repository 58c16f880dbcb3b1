#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "phm/appearance.hpp"
#include "phm/cloud.hpp"
#include "phm/error.hpp"
#include "phm/patch_graph.hpp"
#include "phm/visible_diff.hpp"

namespace phm {

inline constexpr double kDefaultMu = 5.0;

struct MetricConfig {
  double alpha = kDefaultAlpha;
  double mu = kDefaultMu;
  std::size_t k1 = kDefaultArOrder;
  std::size_t k2 = kDefaultGraphNeighbors;
  std::size_t patch_divisor = kDefaultPatchDivisor;
  std::size_t num_bandpass = kDefaultBandpassCount;
  std::size_t nb_bins = kDefaultWcmBins;
  double stabilizer = kDefaultStabilizer;
  FusionMode inner_fusion = FusionMode::Multiply;
  FusionMode outer_fusion = FusionMode::Multiply;
  bool continuous_tail = true;

  void validate() const {
    const auto fail = [](const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); };
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha must be a finite nonnegative number");
    if (!(mu > 0.0) || !std::isfinite(mu)) fail("mu must be a finite positive number");
    if (k1 == 0) fail("k1 must be positive");
    if (k2 == 0) fail("k2 must be positive");
    if (patch_divisor == 0) fail("patch_divisor must be positive");
    if (num_bandpass == 0) fail("num_bandpass must be at least 1");
    if (nb_bins < 2) fail("nb_bins must be at least 2");
    if (!(stabilizer > 0.0) || !std::isfinite(stabilizer)) fail("stabilizer must be a finite positive number");
  }
};

inline std::string to_string(FusionMode mode) { return mode == FusionMode::Multiply ? "multiply" : "average"; }

inline FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "multiply") return FusionMode::Multiply;
  if (s == "average") return FusionMode::Average;
  throw Error(ErrorKind::ConfigError, "fusion mode must be 'multiply' or 'average', got '" + s + "'");
}

inline nlohmann::json to_json(const MetricConfig& c) {
  return {{"alpha", c.alpha},
          {"mu", c.mu},
          {"k1", c.k1},
          {"k2", c.k2},
          {"patch_divisor", c.patch_divisor},
          {"num_bandpass", c.num_bandpass},
          {"nb_bins", c.nb_bins},
          {"stabilizer", c.stabilizer},
          {"inner_fusion", to_string(c.inner_fusion)},
          {"outer_fusion", to_string(c.outer_fusion)},
          {"continuous_tail", c.continuous_tail}};
}

/// Overlays the keys of a flat JSON object onto `base`. Unknown keys and
/// mistyped values are rejected.
inline MetricConfig apply_config(MetricConfig base, const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
  const auto number = [](const std::string& key, const nlohmann::json& v) {
    if (!v.is_number()) throw Error(ErrorKind::ConfigError, "'" + key + "' must be a number");
    return v.get<double>();
  };
  const auto count = [](const std::string& key, const nlohmann::json& v) -> std::size_t {
    if (!v.is_number_integer() || v.get<long long>() <= 0)
      throw Error(ErrorKind::ConfigError, "'" + key + "' must be a positive integer");
    return v.get<std::size_t>();
  };
  for (const auto& [key, v] : doc.items()) {
    if (key == "alpha") base.alpha = number(key, v);
    else if (key == "mu") base.mu = number(key, v);
    else if (key == "k1") base.k1 = count(key, v);
    else if (key == "k2") base.k2 = count(key, v);
    else if (key == "patch_divisor") base.patch_divisor = count(key, v);
    else if (key == "num_bandpass") base.num_bandpass = count(key, v);
    else if (key == "nb_bins") base.nb_bins = count(key, v);
    else if (key == "stabilizer") base.stabilizer = number(key, v);
    else if (key == "inner_fusion" || key == "outer_fusion") {
      if (!v.is_string()) throw Error(ErrorKind::ConfigError, "'" + key + "' must be a string");
      (key == "inner_fusion" ? base.inner_fusion : base.outer_fusion) = parse_fusion_mode(v.get<std::string>());
    } else if (key == "continuous_tail") {
      if (!v.is_boolean()) throw Error(ErrorKind::ConfigError, "'continuous_tail' must be a boolean");
      base.continuous_tail = v.get<bool>();
    } else {
      throw Error(ErrorKind::ConfigError, "unknown config key '" + key + "'");
    }
  }
  base.validate();
  return base;
}

inline MetricConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  return apply_config(MetricConfig{}, doc);
}

// ---------------------------------------------------------------------------

struct AdaptiveScore {
  double omega = 0.0;
  double score = 0.0;
};

/// omega = 1 / (1 + mu * d_h). Multiply: d_h^(1-omega) * d_l^omega;
/// average: the mean of those two powers.
inline AdaptiveScore combine_adaptive(double d_h, double d_l, double mu = kDefaultMu,
                                      FusionMode outer = FusionMode::Multiply) {
  if (!(d_h > 0.0)) throw Error(ErrorKind::DomainError, "d_h must be positive");
  if (!(d_l >= 0.0)) throw Error(ErrorKind::DomainError, "d_l must be nonnegative");
  if (!(mu > 0.0)) throw Error(ErrorKind::DomainError, "mu must be positive");
  AdaptiveScore out;
  out.omega = 1.0 / (1.0 + mu * d_h);
  const double high = std::pow(d_h, 1.0 - out.omega);
  const double low = std::pow(d_l, out.omega);
  out.score = outer == FusionMode::Multiply ? high * low : 0.5 * (high + low);
  return out;
}

enum class ReportStatus { Ok, NoValidPatches };

struct PatchDiagnostics {
  std::size_t cell_id = 0;
  std::size_t ref_points = 0;
  std::size_t dist_points = 0;
  bool subsampled = false;
  std::optional<std::array<double, 3>> geometry_similarity;
  std::vector<std::optional<double>> texture_correlation;
};

struct Diagnostics {
  std::size_t ref_points = 0;
  std::size_t dist_points = 0;
  double psnr_y = 0.0;
  bool psnr_perfect = false;
  double luminance_mse = 0.0;
  double texture_complexity = 0.0;
  std::size_t patch_count = 0;
  std::size_t valid_geometry_patches = 0;
  std::size_t degenerate_patches = 0;
  std::size_t subsampled_patches = 0;
  std::size_t valid_texture_cells = 0;
  std::size_t invalid_texture_cells = 0;
  std::vector<PatchDiagnostics> patches;
  double elapsed_ms = 0.0;
};

struct QualityReport {
  ReportStatus status = ReportStatus::Ok;
  std::string message;
  double d_h = 0.0;
  double omega = 0.0;
  std::optional<double> d_l_o;
  std::optional<double> d_l_i;
  std::optional<double> d_l;
  std::optional<double> score;
  Diagnostics diagnostics;
};

namespace detail {
inline nlohmann::json number_or_null(std::optional<double> v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}
}  // namespace detail

inline nlohmann::json to_json(const QualityReport& r, bool include_timing = true) {
  using detail::number_or_null;
  const Diagnostics& d = r.diagnostics;
  nlohmann::json patches = nlohmann::json::array();
  for (const auto& p : d.patches) {
    nlohmann::json fw = nlohmann::json::array();
    for (const auto& v : p.texture_correlation) fw.push_back(number_or_null(v));
    nlohmann::json fs = nullptr;
    if (p.geometry_similarity) fs = *p.geometry_similarity;
    patches.push_back({{"cell_id", p.cell_id},
                       {"ref_points", p.ref_points},
                       {"dist_points", p.dist_points},
                       {"subsampled", p.subsampled},
                       {"f_s", fs},
                       {"f_w", fw}});
  }
  nlohmann::json diag = {{"ref_points", d.ref_points},
                         {"dist_points", d.dist_points},
                         {"psnr_y", number_or_null(d.psnr_y)},
                         {"psnr_perfect", d.psnr_perfect},
                         {"luminance_mse", d.luminance_mse},
                         {"texture_complexity", d.texture_complexity},
                         {"patch_count", d.patch_count},
                         {"valid_geometry_patches", d.valid_geometry_patches},
                         {"degenerate_patches", d.degenerate_patches},
                         {"subsampled_patches", d.subsampled_patches},
                         {"valid_texture_cells", d.valid_texture_cells},
                         {"invalid_texture_cells", d.invalid_texture_cells},
                         {"patches", patches}};
  if (include_timing) diag["elapsed_ms"] = d.elapsed_ms;
  nlohmann::json out = {{"status", r.status == ReportStatus::Ok ? "ok" : "no_valid_patches"},
                        {"d_h", r.d_h},
                        {"d_l_o", number_or_null(r.d_l_o)},
                        {"d_l_i", number_or_null(r.d_l_i)},
                        {"d_l", number_or_null(r.d_l)},
                        {"omega", r.omega},
                        {"score", number_or_null(r.score)},
                        {"diagnostics", diag}};
  if (!r.message.empty()) out["message"] = r.message;
  return out;
}

/// Full-reference quality of `dist` against `ref`: visible difference with
/// texture masking, patch-wise appearance degradation, and their adaptive
/// blend. `threads` only parallelizes the per-patch work; results do not
/// depend on it.
inline QualityReport phm_score(const PointCloud& ref, const PointCloud& dist, const MetricConfig& config = {},
                               unsigned threads = 1) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  QualityReport report;
  Diagnostics& diag = report.diagnostics;
  diag.ref_points = ref.size();
  diag.dist_points = dist.size();

  const VisibleDifference vd = visible_difference(ref, dist, config.alpha, config.k1);
  report.d_h = vd.d_h;
  report.omega = 1.0 / (1.0 + config.mu * vd.d_h);
  diag.psnr_y = vd.psnr_y;
  diag.psnr_perfect = vd.perfect;
  diag.luminance_mse = vd.mse;
  diag.texture_complexity = vd.complexity;

  const auto pairs = partition_into_patch_pairs(ref, dist, default_patch_count(ref.size(), config.patch_divisor));
  const auto models = build_patch_models(pairs, config.k2, kMaxPatchPoints, threads);
  diag.patch_count = models.size();
  diag.patches.resize(models.size());
  for (std::size_t p = 0; p < models.size(); ++p) {
    diag.patches[p].cell_id = models[p].cell_id;
    diag.patches[p].ref_points = pairs[p].ref.size();
    diag.patches[p].dist_points = pairs[p].dist.size();
    diag.patches[p].subsampled = models[p].subsampled;
    if (models[p].subsampled) ++diag.subsampled_patches;
  }

  const auto finish = [&] {
    diag.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return report;
  };

  try {
    const auto geometry = geometry_degradation(models, config.stabilizer);
    diag.valid_geometry_patches = geometry.valid_patches;
    diag.degenerate_patches = geometry.degenerate_patches;
    for (std::size_t p = 0; p < models.size(); ++p)
      if (geometry.patches[p].valid) diag.patches[p].geometry_similarity = geometry.patches[p].similarity;
    report.d_l_o = geometry.d_l_o;

    const TextureOptions texture_opt{config.num_bandpass, config.nb_bins, config.continuous_tail, threads};
    const auto texture = texture_degradation(models, texture_opt);
    diag.valid_texture_cells = texture.valid_cells;
    diag.invalid_texture_cells = texture.invalid_cells;
    for (std::size_t p = 0; p < models.size(); ++p) diag.patches[p].texture_correlation = texture.patches[p].correlation;
    report.d_l_i = texture.d_l_i;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoValidPatches) throw;
    report.status = ReportStatus::NoValidPatches;
    report.message = e.detail();
    return finish();
  }

  report.d_l = fuse_appearance(*report.d_l_o, *report.d_l_i, config.inner_fusion);
  const auto combined = combine_adaptive(report.d_h, *report.d_l, config.mu, config.outer_fusion);
  report.omega = combined.omega;
  report.score = combined.score;
  return finish();
}

}  // namespace phm

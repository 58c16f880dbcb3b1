#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "phm/error.hpp"
#include "phm/parallel.hpp"
#include "phm/patch_graph.hpp"

namespace phm {

inline constexpr std::size_t kDefaultBandpassCount = 3;
inline constexpr std::size_t kDefaultWcmBins = 50;
inline constexpr double kDefaultStabilizer = 1e-6;

// ---------------------------------------------------------------------------
// Geometry: graph smoothness of coordinate signals

/// f^T L f, evaluated as the edge sum of w_ij (f_i - f_j)^2.
inline double graph_smoothness(const PatchGraph& graph, std::span<const double> signal) {
  if (signal.size() != graph.n) throw Error(ErrorKind::ShapeError, "signal length does not match the graph");
  double sum = 0.0;
  for (const auto& e : graph.edges) {
    const double d = signal[e.i] - signal[e.j];
    sum += e.weight * d * d;
  }
  return sum;
}

/// SSIM-style similarity of two normalized smoothness values.
inline double smoothness_similarity(double ref, double dist, double stabilizer = kDefaultStabilizer) {
  return (2.0 * ref * dist + stabilizer) / (ref * ref + dist * dist + stabilizer);
}

/// Both sides of one Voronoi cell, capped in size, with their graphs. A graph
/// is absent when that side is degenerate (fewer than two points, or all
/// points coincident).
struct PatchModel {
  std::size_t cell_id = 0;
  SubCloud ref;
  SubCloud dist;
  std::optional<PatchGraph> ref_graph;
  std::optional<PatchGraph> dist_graph;
  bool subsampled = false;
  bool shared_geometry = false;  // both sides have identical point positions

  bool valid() const noexcept { return ref_graph.has_value() && dist_graph.has_value(); }
};

inline std::optional<PatchGraph> try_build_patch_graph(std::span<const Point3> positions, std::size_t k) {
  try {
    return build_patch_graph(positions, k);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DegeneratePatch) return std::nullopt;
    throw;
  }
}

inline std::vector<PatchModel> build_patch_models(const std::vector<PatchPair>& pairs,
                                                  std::size_t k = kDefaultGraphNeighbors,
                                                  std::size_t max_points = kMaxPatchPoints, unsigned threads = 1) {
  std::vector<PatchModel> models(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    const PatchPair& pair = pairs[p];
    PatchModel& m = models[p];
    m.cell_id = pair.cell_id;
    m.subsampled = pair.ref.size() > max_points || pair.dist.size() > max_points;
    m.ref = subsample_uniform(pair.ref, max_points);
    m.dist = subsample_uniform(pair.dist, max_points);
    m.shared_geometry = m.ref.positions == m.dist.positions;
    m.ref_graph = try_build_patch_graph(m.ref.positions, k);
    // Graph construction depends only on positions, so an identical side reuses it.
    m.dist_graph = m.shared_geometry ? m.ref_graph : try_build_patch_graph(m.dist.positions, k);
  });
  return models;
}

struct GeometryPatchResult {
  std::size_t cell_id = 0;
  bool valid = false;
  std::array<double, 3> similarity{};  // F^S per axis
};

struct GeometryDegradation {
  std::vector<GeometryPatchResult> patches;
  double d_l_o = 0.0;
  std::size_t valid_patches = 0;
  std::size_t degenerate_patches = 0;
};

/// Per-axis smoothness of one side's coordinates, divided by its point count.
inline std::array<double, 3> normalized_coordinate_smoothness(const PatchGraph& graph,
                                                              std::span<const Point3> positions) {
  std::array<double, 3> out{};
  std::vector<double> signal(positions.size());
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < positions.size(); ++i) signal[i] = positions[i][axis];
    out[static_cast<std::size_t>(axis)] = graph_smoothness(graph, signal) / static_cast<double>(positions.size());
  }
  return out;
}

inline GeometryDegradation geometry_degradation(const std::vector<PatchModel>& models,
                                                double stabilizer = kDefaultStabilizer) {
  GeometryDegradation out;
  out.patches.resize(models.size());
  double sum = 0.0;
  for (std::size_t p = 0; p < models.size(); ++p) {
    const PatchModel& m = models[p];
    GeometryPatchResult& r = out.patches[p];
    r.cell_id = m.cell_id;
    if (!m.valid()) {
      ++out.degenerate_patches;
      continue;
    }
    const auto s_ref = normalized_coordinate_smoothness(*m.ref_graph, m.ref.positions);
    const auto s_dist = normalized_coordinate_smoothness(*m.dist_graph, m.dist.positions);
    for (std::size_t a = 0; a < 3; ++a) {
      r.similarity[a] = smoothness_similarity(s_ref[a], s_dist[a], stabilizer);
      sum += r.similarity[a];
    }
    r.valid = true;
    ++out.valid_patches;
  }
  if (out.valid_patches == 0) throw Error(ErrorKind::NoValidPatches, "no patch pair yields two valid graphs");
  out.d_l_o = sum / (3.0 * static_cast<double>(out.valid_patches));
  return out;
}

inline GeometryDegradation geometry_degradation(const std::vector<PatchPair>& pairs,
                                                std::size_t k = kDefaultGraphNeighbors,
                                                double stabilizer = kDefaultStabilizer) {
  return geometry_degradation(build_patch_models(pairs, k), stabilizer);
}

// ---------------------------------------------------------------------------
// Texture: spectral graph wavelets and weighted co-occurrence matrices

/// Band-pass wavelet kernel: x^2 below 1, a cubic spline on [1, 2], and a
/// decaying tail above 2. The continuous tail is 4/x^2; the alternative 1/x^2
/// jumps from 1 to 0.25 at x = 2.
inline double wavelet_kernel(double x, bool continuous_tail = true) {
  if (x < 1.0) return x * x;
  if (x <= 2.0) return ((x - 6.0) * x + 11.0) * x - 5.0;
  return (continuous_tail ? 4.0 : 1.0) / (x * x);
}

/// Peak of the wavelet kernel, reached inside the spline at x = 2 - 1/sqrt(3).
inline double wavelet_kernel_peak() { return wavelet_kernel(2.0 - 1.0 / std::sqrt(3.0)); }

struct FilterBank {
  std::vector<double> scales;  // t_1 < ... < t_C
  double gamma = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool continuous_tail = true;

  std::size_t bandpass_count() const noexcept { return scales.size(); }

  /// Scaling (low-pass) response h(lambda).
  double scaling(double lambda) const {
    const double r = lambda / (0.6 * lambda_min);
    return gamma * std::exp(-(r * r) * (r * r));
  }
  /// Response of band-pass filter c (0-based) at lambda: g(t_c * lambda).
  double wavelet(std::size_t c, double lambda) const { return wavelet_kernel(scales[c] * lambda, continuous_tail); }
};

/// Scales are log-spaced from 2/lambda_max to 2/lambda_min with
/// lambda_min = lambda_max / 20. A single band uses 2/lambda_max.
inline FilterBank make_filter_bank(double lambda_max, std::size_t bandpass = kDefaultBandpassCount,
                                   bool continuous_tail = true) {
  if (!(lambda_max > 0.0)) throw Error(ErrorKind::DomainError, "lambda_max must be positive");
  if (bandpass == 0) throw Error(ErrorKind::DomainError, "need at least one band-pass filter");
  FilterBank bank;
  bank.lambda_max = lambda_max;
  bank.lambda_min = lambda_max / 20.0;
  bank.gamma = wavelet_kernel_peak();
  bank.continuous_tail = continuous_tail;
  const double log_lo = std::log(2.0 / lambda_max);
  const double log_hi = std::log(2.0 / bank.lambda_min);
  bank.scales.resize(bandpass);
  for (std::size_t c = 0; c < bandpass; ++c) {
    const double frac = bandpass == 1 ? 0.0 : static_cast<double>(c) / static_cast<double>(bandpass - 1);
    bank.scales[c] = std::exp(log_lo + frac * (log_hi - log_lo));
  }
  // Pin the end points exactly rather than through exp(log(.)).
  bank.scales.front() = 2.0 / lambda_max;
  if (bandpass > 1) bank.scales.back() = 2.0 / bank.lambda_min;
  return bank;
}

/// Band 0 is the scaling (low-pass) band; bands 1..C are band-pass.
struct WaveletSubbands {
  std::vector<Eigen::VectorXd> bands;
};

inline WaveletSubbands sgwt_decompose(const Spectrum& spectrum, const Eigen::VectorXd& signal,
                                      const FilterBank& bank) {
  const Eigen::VectorXd coeffs = graph_fourier(spectrum, signal, FourierDirection::Forward);
  const Eigen::VectorXd& lambdas = spectrum.eigenvalues;
  WaveletSubbands out;
  out.bands.reserve(bank.bandpass_count() + 1);
  Eigen::VectorXd filtered(coeffs.size());
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) filtered[k] = bank.scaling(lambdas[k]) * coeffs[k];
  out.bands.push_back(graph_fourier(spectrum, filtered, FourierDirection::Inverse));
  for (std::size_t c = 0; c < bank.bandpass_count(); ++c) {
    for (Eigen::Index k = 0; k < coeffs.size(); ++k) filtered[k] = bank.wavelet(c, lambdas[k]) * coeffs[k];
    out.bands.push_back(graph_fourier(spectrum, filtered, FourierDirection::Inverse));
  }
  return out;
}

/// Normalized weighted co-occurrence matrix of quantized band values.
struct WCM {
  Eigen::MatrixXd matrix;
  std::vector<double> bin_edges;  // bins + 1 edges spanning [b_min, b_max]
};

/// Uniform bin of `v` in [lo, hi] with `bins` bins; the top edge is clamped
/// into the last bin and a collapsed range maps everything to bin 0.
inline std::size_t quantize(double v, double lo, double hi, std::size_t bins) {
  if (!(hi > lo)) return 0;
  const double pos = std::floor((v - lo) / (hi - lo) * static_cast<double>(bins));
  if (pos <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(pos), bins - 1);
}

/// Accumulates each edge's weight at (bin_i, bin_j) and its mirror, then
/// normalizes to unit mass. The value range is shared with `partner_band`
/// so the two sides of a patch quantize on the same grid.
inline WCM build_wcm(const PatchGraph& graph, const Eigen::VectorXd& band, const Eigen::VectorXd& partner_band,
                     std::size_t bins = kDefaultWcmBins) {
  if (bins < 2) throw Error(ErrorKind::DomainError, "WCM needs at least two bins");
  if (static_cast<std::size_t>(band.size()) != graph.n)
    throw Error(ErrorKind::ShapeError, "band length does not match the graph");
  if (band.size() == 0 && partner_band.size() == 0) throw Error(ErrorKind::EmptyWCM, "no band values");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* b : {&band, &partner_band}) {
    if (b->size() == 0) continue;
    lo = std::min(lo, b->minCoeff());
    hi = std::max(hi, b->maxCoeff());
  }

  WCM out;
  out.bin_edges.resize(bins + 1);
  for (std::size_t m = 0; m <= bins; ++m)
    out.bin_edges[m] = lo + (hi - lo) * static_cast<double>(m) / static_cast<double>(bins);

  const auto nb = static_cast<Eigen::Index>(bins);
  out.matrix = Eigen::MatrixXd::Zero(nb, nb);
  for (const auto& e : graph.edges) {
    const auto m = static_cast<Eigen::Index>(quantize(band[static_cast<Eigen::Index>(e.i)], lo, hi, bins));
    const auto n = static_cast<Eigen::Index>(quantize(band[static_cast<Eigen::Index>(e.j)], lo, hi, bins));
    out.matrix(m, n) += e.weight;
    if (m != n) out.matrix(n, m) += e.weight;
  }
  const double mass = out.matrix.sum();
  if (!(mass > 0.0)) throw Error(ErrorKind::EmptyWCM, "graph carries no edge weight");
  out.matrix /= mass;
  return out;
}

/// Pearson correlation of two flattened matrices, with fixed values for the
/// zero-variance cases: both constant and equal gives 1, otherwise 0.
inline double matrix_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeError, "matrices differ in size");
  if (a == b && a.size() > 0) return 1.0;
  const Eigen::ArrayXd x = a.reshaped().array() - a.mean();
  const Eigen::ArrayXd y = b.reshaped().array() - b.mean();
  const double sxx = (x * x).sum();
  const double syy = (y * y).sum();
  if (sxx == 0.0 || syy == 0.0) return 0.0;  // equal constants were handled above
  return (x * y).sum() / std::sqrt(sxx * syy);
}

struct TexturePatchResult {
  std::size_t cell_id = 0;
  std::vector<std::optional<double>> correlation;  // F^W per band; empty when invalid
};

struct TextureDegradation {
  std::vector<TexturePatchResult> patches;
  double d_l_i = 0.0;
  std::size_t valid_cells = 0;
  std::size_t invalid_cells = 0;
};

struct TextureOptions {
  std::size_t bandpass = kDefaultBandpassCount;
  std::size_t bins = kDefaultWcmBins;
  bool continuous_tail = true;
  unsigned threads = 1;
};

/// F^W for every band of one patch; nullopt marks a band that cannot be scored.
inline std::vector<std::optional<double>> patch_texture_correlation(const PatchModel& m, const TextureOptions& opt) {
  std::vector<std::optional<double>> out(opt.bandpass + 1);
  if (!m.valid()) return out;
  const Spectrum ref_spec = eigendecompose(*m.ref_graph);
  const Spectrum dist_spec_owned = m.shared_geometry ? Spectrum{} : eigendecompose(*m.dist_graph);
  const Spectrum& dist_spec = m.shared_geometry ? ref_spec : dist_spec_owned;
  if (!(ref_spec.lambda_max() > 0.0) || !(dist_spec.lambda_max() > 0.0)) return out;

  const auto to_vector = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  const auto ref_bands = sgwt_decompose(ref_spec, to_vector(m.ref.luminance),
                                        make_filter_bank(ref_spec.lambda_max(), opt.bandpass, opt.continuous_tail));
  const auto dist_bands = sgwt_decompose(dist_spec, to_vector(m.dist.luminance),
                                         make_filter_bank(dist_spec.lambda_max(), opt.bandpass, opt.continuous_tail));
  for (std::size_t c = 0; c <= opt.bandpass; ++c) {
    try {
      const WCM ref_wcm = build_wcm(*m.ref_graph, ref_bands.bands[c], dist_bands.bands[c], opt.bins);
      const WCM dist_wcm = build_wcm(*m.dist_graph, dist_bands.bands[c], ref_bands.bands[c], opt.bins);
      out[c] = matrix_correlation(ref_wcm.matrix, dist_wcm.matrix);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyWCM) throw;
    }
  }
  return out;
}

inline TextureDegradation texture_degradation(const std::vector<PatchModel>& models, const TextureOptions& opt = {}) {
  TextureDegradation out;
  out.patches.resize(models.size());
  parallel_for(models.size(), opt.threads, [&](std::size_t p) {
    out.patches[p].cell_id = models[p].cell_id;
    out.patches[p].correlation = patch_texture_correlation(models[p], opt);
  });
  double sum = 0.0;
  for (const auto& patch : out.patches) {
    for (const auto& fw : patch.correlation) {
      if (fw) {
        sum += *fw;
        ++out.valid_cells;
      } else {
        ++out.invalid_cells;
      }
    }
  }
  if (out.valid_cells == 0) throw Error(ErrorKind::NoValidPatches, "no (patch, band) cell could be scored");
  out.d_l_i = sum / static_cast<double>(out.valid_cells);
  return out;
}

// ---------------------------------------------------------------------------

enum class FusionMode { Multiply, Average };

/// Multiply: sqrt(d_l_o * max(d_l_i, 0)). Average: arithmetic mean.
inline double fuse_appearance(double d_l_o, double d_l_i, FusionMode mode = FusionMode::Multiply) {
  if (mode == FusionMode::Average) return 0.5 * (d_l_o + d_l_i);
  return std::sqrt(d_l_o * std::max(d_l_i, 0.0));
}

}  // namespace phm

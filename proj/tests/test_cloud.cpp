#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "phm/cloud.hpp"
#include "phm/ply.hpp"
#include "phm/sampling.hpp"
#include "phm/spatial_index.hpp"
#include "support.hpp"

namespace phm {
namespace {

using testing::brute_knn;
using testing::random_cloud;
using testing::TempDir;

TEST(Luminance, Bt709Weights) {
  EXPECT_EQ(rgb_to_luminance({0, 0, 0}), 0.0);
  EXPECT_NEAR(rgb_to_luminance({255, 255, 255}), 255.0, 1e-12);
  EXPECT_NEAR(rgb_to_luminance({255, 0, 0}), 54.213, 1e-12);
}

TEST(PointCloud, RejectsEmptyAndMismatched) {
  try {
    PointCloud({}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyCloud);
  }
  EXPECT_THROW(PointCloud({Point3::Zero()}, {}), Error);
}

PointCloud line_cloud(std::size_t n) {
  std::vector<Point3> p;
  std::vector<Rgb> c;
  for (std::size_t i = 0; i < n; ++i) {
    p.emplace_back(static_cast<double>(i), 0.0, 0.0);
    c.push_back({10, 20, 30});
  }
  return PointCloud(p, c);
}

TEST(Knn, CollinearOrderingExcludesSelf) {
  const auto cloud = line_cloud(4);
  const SpatialIndex index(cloud.positions());
  EXPECT_EQ(knn_indices(index, Point3(0, 0, 0), 2, true), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(knn_indices(index, Point3(0, 0, 0), 2, false), (std::vector<std::size_t>{0, 1}));
}

TEST(Knn, EquidistantPrefersLowerIndex) {
  const std::vector<Point3> pts{Point3(2, 0, 0), Point3(-1, 0, 0), Point3(1, 0, 0)};
  const SpatialIndex index(pts);
  EXPECT_EQ(knn_indices(index, Point3::Zero(), 3, false), (std::vector<std::size_t>{1, 2, 0}));
}

TEST(Knn, TruncatesToAvailablePoints) {
  const auto cloud = line_cloud(3);
  const SpatialIndex index(cloud.positions());
  EXPECT_EQ(knn_indices(index, Point3(0, 0, 0), 10, true).size(), 2u);
  EXPECT_THROW(knn_indices(index, Point3::Zero(), 0, false), Error);
}

TEST(Knn, EmptyIndexThrows) {
  std::vector<Point3> none;
  try {
    SpatialIndex index(none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyCloud);
  }
}

// Property: exact agreement with an exhaustive scan, including tie order. A
// coarse integer grid makes ties frequent.
TEST(Knn, MatchesExhaustiveScan) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 500;
    std::uniform_int_distribution<int> coord(0, trial % 2 == 0 ? 6 : 1000);
    std::vector<Point3> pts(n);
    for (auto& p : pts) p = Point3(coord(rng), coord(rng), coord(rng));
    const SpatialIndex index(pts);
    for (int q = 0; q < 20; ++q) {
      const std::size_t k = 1 + rng() % 25;
      const std::size_t self = rng() % n;
      const auto got = index.knn(pts[self], k, self);
      const auto want = brute_knn(pts, pts[self], k, self);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) ASSERT_EQ(got[i].index, want[i]) << "trial " << trial;
      const Point3 off(coord(rng) + 0.5, coord(rng) + 0.25, coord(rng));
      const auto got2 = index.knn(off, k);
      const auto want2 = brute_knn(pts, off, k);
      for (std::size_t i = 0; i < got2.size(); ++i) ASSERT_EQ(got2[i].index, want2[i]);
    }
  }
}

TEST(Knn, HundredRandomPointsKTen) {
  const auto cloud = random_cloud(100, 3);
  const SpatialIndex index(cloud.positions());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    EXPECT_EQ(knn_indices(index, cloud.position(i), 10, true), brute_knn(cloud.positions(), cloud.position(i), 10, i));
}

// Independent greedy FPS: recompute every min distance from scratch each step.
std::vector<std::size_t> brute_fps(std::span<const Point3> pts, std::size_t count) {
  std::vector<std::size_t> seeds{0};
  while (seeds.size() < count) {
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (std::find(seeds.begin(), seeds.end(), i) != seeds.end()) continue;
      double m = std::numeric_limits<double>::infinity();
      for (auto s : seeds) m = std::min(m, (pts[i] - pts[s]).squaredNorm());
      if (m > best) {
        best = m;
        arg = i;
      }
    }
    seeds.push_back(arg);
  }
  return seeds;
}

TEST(FarthestPointSample, ExhaustionIsPermutation) {
  const auto cloud = random_cloud(40, 11);
  auto seeds = farthest_point_sample(cloud, 40);
  std::sort(seeds.begin(), seeds.end());
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(seeds[i], i);
}

TEST(FarthestPointSample, DuplicatesStillExhaust) {
  std::vector<Point3> pts(5, Point3(1, 1, 1));
  const auto seeds = farthest_point_sample(std::span<const Point3>(pts), 5);
  EXPECT_EQ(std::set<std::size_t>(seeds.begin(), seeds.end()).size(), 5u);
}

TEST(FarthestPointSample, SquareDiagonal) {
  const std::vector<Point3> square{Point3(0, 0, 0), Point3(1, 0, 0), Point3(1, 1, 0), Point3(0, 1, 0)};
  const auto seeds = farthest_point_sample(std::span<const Point3>(square), 2, 0);
  EXPECT_EQ(seeds, (std::vector<std::size_t>{0, 2}));
}

TEST(FarthestPointSample, MatchesGreedyOracle) {
  for (std::uint32_t seed = 0; seed < 5; ++seed) {
    const auto cloud = random_cloud(50, 100 + seed);
    EXPECT_EQ(farthest_point_sample(cloud, 5), brute_fps(cloud.positions(), 5));
  }
}

TEST(FarthestPointSample, CoverageRadiusNonincreasing) {
  const auto cloud = random_cloud(300, 5);
  const auto seeds = farthest_point_sample(cloud, 30);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m <= seeds.size(); ++m) {
    double radius = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < m; ++s) nearest = std::min(nearest, (cloud.position(i) - cloud.position(seeds[s])).norm());
      radius = std::max(radius, nearest);
    }
    EXPECT_LE(radius, previous);
    previous = radius;
  }
}

TEST(FarthestPointSample, TooManySeeds) {
  const auto cloud = random_cloud(10, 1);
  try {
    farthest_point_sample(cloud, 11);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooManySeeds);
  }
}

// ---------------------------------------------------------------------------
// PLY

void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

ErrorKind load_error(const std::filesystem::path& p) {
  try {
    load_ply(p);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::Io;
}

TEST(Ply, AsciiThreeVertices) {
  TempDir dir;
  write_text(dir / "a.ply",
             "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\nproperty float x\nproperty float y\n"
             "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
             "0 0 0 255 0 0\n1.5 2 3 0 255 0\n-1 -2 -3.25 1 2 3\n");
  const auto cloud = load_ply(dir / "a.ply");
  ASSERT_EQ(cloud.size(), 3u);
  EXPECT_EQ(cloud.position(1), Point3(1.5, 2, 3));
  EXPECT_EQ(cloud.position(2), Point3(-1, -2, -3.25));
  EXPECT_EQ(cloud.colors()[2], (Rgb{1, 2, 3}));
  EXPECT_NEAR(cloud.luminance(0), 54.213, 1e-12);
}

TEST(Ply, BinaryMatchesAscii) {
  TempDir dir;
  const auto cloud = random_cloud(257, 9);
  save_ply(dir / "a.ply", cloud, PlyFormat::Ascii);
  save_ply(dir / "b.ply", cloud, PlyFormat::BinaryLittleEndian);
  const auto a = load_ply(dir / "a.ply");
  const auto b = load_ply(dir / "b.ply");
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == cloud);
}

TEST(Ply, BinaryFloatWithExtraPropertiesAndFaces) {
  TempDir dir;
  std::string s =
      "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
      "property float nx\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nproperty uchar alpha\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n";
  auto put = [&](auto v) { s.append(reinterpret_cast<const char*>(&v), sizeof v); };
  for (int i = 0; i < 2; ++i) {
    put(1.0f * i);
    put(2.0f);
    put(-0.5f);
    put(9.0f);
    put(std::uint8_t(10 + i));
    put(std::uint8_t(20));
    put(std::uint8_t(30));
    put(std::uint8_t(255));
  }
  put(std::uint8_t(3));
  put(std::int32_t(0));
  put(std::int32_t(1));
  put(std::int32_t(0));
  write_text(dir / "f.ply", s);
  std::vector<std::string> warnings;
  const auto cloud = load_ply(dir / "f.ply", &warnings);
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_EQ(cloud.position(1), Point3(1, 2, -0.5));
  EXPECT_EQ(cloud.colors()[1], (Rgb{11, 20, 30}));
  EXPECT_EQ(warnings.size(), 3u);  // nx, alpha, face
}

TEST(Ply, MissingColorsAndMalformedInput) {
  TempDir dir;
  write_text(dir / "nocolor.ply",
             "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
             "end_header\n0 0 0\n");
  EXPECT_EQ(load_error(dir / "nocolor.ply"), ErrorKind::ColorMissing);

  const std::string header =
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  write_text(dir / "trunc.ply", header + "0 0 0 1 2 3\n1 1\n");
  EXPECT_EQ(load_error(dir / "trunc.ply"), ErrorKind::ParseError);

  write_text(dir / "magic.ply", "plx\nformat ascii 1.0\nend_header\n");
  EXPECT_EQ(load_error(dir / "magic.ply"), ErrorKind::ParseError);

  write_text(dir / "big.ply", "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n");
  EXPECT_EQ(load_error(dir / "big.ply"), ErrorKind::ParseError);

  write_text(dir / "empty.ply",
             "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\n"
             "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n");
  EXPECT_EQ(load_error(dir / "empty.ply"), ErrorKind::EmptyCloud);

  EXPECT_EQ(load_error(dir / "does_not_exist.ply"), ErrorKind::Io);

  const auto cloud = random_cloud(20, 2);
  save_ply(dir / "full.ply", cloud, PlyFormat::BinaryLittleEndian);
  const auto size = std::filesystem::file_size(dir / "full.ply");
  std::filesystem::resize_file(dir / "full.ply", size - 5);
  EXPECT_EQ(load_error(dir / "full.ply"), ErrorKind::ParseError);
}

}  // namespace
}  // namespace phm

#include <mrxsim/fields.hpp>
#include <mrxsim/model.hpp>
#include <mrxsim/presets.hpp>

#include <gtest/gtest.h>

#include <algorithm>

#include "test_support.hpp"

using namespace mrx;

namespace {

bool has_violation(const ValidationReport& r, std::string_view needle) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const std::string& v) { return v.find(needle) != std::string::npos; });
}

}  // namespace

TEST(EntityArray, LinearInterpolationWithNormals) {
  const auto e = create_entity_array({0, 0, 0}, {0, 0.1, 0}, {1, 0, 0}, 3);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0].position, Vec3(0, 0, 0));
  EXPECT_EQ(e[1].position, Vec3(0, 0.05, 0));
  EXPECT_EQ(e[2].position, Vec3(0, 0.1, 0));
  for (const auto& p : e) EXPECT_EQ(p.normal, Vec3(1, 0, 0));
}

TEST(EntityArray, EndpointsOnlyAndNormalIsNormalized) {
  const auto e = create_entity_array({0, 0, 0}, {1, 0, 0}, {0, 0, 2}, 2);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].position, Vec3(0, 0, 0));
  EXPECT_EQ(e[1].position, Vec3(1, 0, 0));
  EXPECT_EQ(e[0].normal, Vec3(0, 0, 1));
}

TEST(EntityArray, EquidistantSpacing) {
  const auto e = create_entity_array({0, 0, 0}, {0, 0, 0.09}, {0, 1, 0}, 10);
  ASSERT_EQ(e.size(), 10u);
  for (std::size_t i = 1; i < e.size(); ++i) {
    EXPECT_NEAR((e[i].position - e[i - 1].position).norm(), 0.09 / 9.0, 1e-15);
  }
}

TEST(EntityArray, RejectsBadArguments) {
  EXPECT_THROW(create_entity_array({0, 0, 0}, {1, 0, 0}, {0, 0, 1}, 1), std::invalid_argument);
  EXPECT_THROW(create_entity_array({0, 0, 0}, {0, 0, 0}, {0, 0, 1}, 3), std::invalid_argument);
  EXPECT_THROW(create_entity_array({0, 0, 0}, {1, 0, 0}, {0, 0, 0}, 3), std::invalid_argument);
}

TEST(CoilLoop, UnitSquare) {
  const auto p = create_coil_loop(1.0, 4);
  const std::vector<Vec3> want = {{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}, {1, 0, 0}};
  ASSERT_EQ(p.size(), want.size());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_LT((p[i] - want[i]).norm(), 1e-15) << i;
}

TEST(CoilLoop, TriangleOnCircumcircleAndClosed) {
  const auto p = create_coil_loop(0.05, 3);
  ASSERT_EQ(p.size(), 4u);
  for (const auto& v : p) EXPECT_NEAR(v.norm(), 0.05, 1e-17);
  EXPECT_EQ(p.back(), p.front());
}

TEST(CoilLoop, ChordLengths) {
  const auto p = create_coil_loop(2.0, 360);
  ASSERT_EQ(p.size(), 361u);
  const double chord = 2.0 * 2.0 * std::sin(M_PI / 360.0);
  for (std::size_t i = 1; i < p.size(); ++i) EXPECT_NEAR((p[i] - p[i - 1]).norm(), chord, 1e-13);
}

TEST(CoilLoop, CounterClockwiseFromPlusZ) {
  const auto p = create_coil_loop(1.0, 8);
  double area_z = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) area_z += p[i - 1].cross(p[i]).z();
  EXPECT_GT(area_z, 0.0);
}

TEST(Relocate, IdentityAndTranslation) {
  const std::vector<Vec3> pts = {{1, 0, 0}};
  EXPECT_EQ(relocate_structure(pts, {0, 0, 0}, {0, 0, 1})[0], Vec3(1, 0, 0));
  EXPECT_EQ(relocate_structure(pts, {5, 5, 5}, {0, 0, 1})[0], Vec3(6, 5, 5));
}

TEST(Relocate, RotatesZOntoX) {
  const Mat3 r = rotation_from_z({1, 0, 0});
  EXPECT_LT((r * r.transpose() - Mat3::Identity()).norm(), 1e-15);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-15);
  EXPECT_LT((r * Vec3::UnitZ() - Vec3::UnitX()).norm(), 1e-15);
  const std::vector<Vec3> pts = {{1, 0, 0}, {0, 1, 0}};
  const auto out = relocate_structure(pts, {0, 0, 0}, {1, 0, 0});
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LT((out[i] - r * pts[i]).norm(), 1e-15);
}

TEST(Relocate, AntiparallelNormal) {
  const Mat3 r = rotation_from_z({0, 0, -1});
  EXPECT_EQ(r * Vec3::UnitZ(), Vec3(0, 0, -1));
  EXPECT_EQ(r.determinant(), 1.0);
}

TEST(RelocateProperty, RandomNormalsGiveProperRotations) {
  test::Rng rng(20240101);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec3 n = rng.unit();
    if (trial % 100 == 0) n = Vec3(1e-9 * rng.uniform(-1, 1), 1e-9 * rng.uniform(-1, 1), -1.0).normalized();
    const Mat3 r = rotation_from_z(n);
    EXPECT_LT((r * r.transpose() - Mat3::Identity()).norm(), 1e-13) << trial;
    EXPECT_NEAR(r.determinant(), 1.0, 1e-13) << trial;
    EXPECT_LT((r * Vec3::UnitZ() - n).norm(), 1e-13) << trial;
  }
}

TEST(ParseCoils, TemplateAtOriginIsUnchanged) {
  const std::vector<Coil> coils = {{{0, 0, 0}, {0, 0, 1}, std::nullopt}};
  const auto tmpl = create_coil_loop(1.0, 4);
  const auto out = parse_coils(coils, tmpl);
  ASSERT_TRUE(out[0].segments);
  EXPECT_EQ(*out[0].segments, tmpl);
}

TEST(ParseCoils, TranslationEquivariance) {
  const std::vector<Coil> coils = {{{0.1, 0.2, 0.3}, {0, 0, 1}, std::nullopt},
                                   {{-0.4, 0.5, 0.0}, {0, 0, 1}, std::nullopt}};
  const auto out = parse_coils(coils, create_coil_loop(0.01, 12));
  const Vec3 shift = coils[1].position - coils[0].position;
  for (std::size_t i = 0; i < out[0].segments->size(); ++i) {
    EXPECT_LT(((*out[1].segments)[i] - (*out[0].segments)[i] - shift).norm(), 1e-15);
  }
}

TEST(ParseCoils, SegmentsLieInPlaneOfNormal) {
  const Vec3 pos(0.3, -0.2, 1.0);
  const std::vector<Coil> coils = {{pos, {0, 1, 0}, std::nullopt}};
  const auto out = parse_coils(coils, create_coil_loop(1.0, 32));
  for (const auto& p : *out[0].segments) EXPECT_NEAR((p - pos).dot(Vec3(0, 1, 0)), 0.0, 1e-15);
}

TEST(GetRoi, SingleVoxel) {
  const std::vector<Vec3> centers = {{0.005, 0.005, 0}};
  const Roi roi = get_roi(centers, {0.01, 0.01, 0});
  EXPECT_EQ(roi.x.lo, 0.0);
  EXPECT_EQ(roi.x.hi, 0.01);
  EXPECT_EQ(roi.y.lo, 0.0);
  EXPECT_EQ(roi.y.hi, 0.01);
  EXPECT_EQ(roi.z.lo, 0.0);
  EXPECT_EQ(roi.z.hi, 0.0);
}

TEST(GetRoi, RoundTripThroughVoxelGrid) {
  const Roi roi{{0, 0.1}, {0, 0.1}, {0, 0}};
  const VoxelGrid g = create_voxel_grid(roi, {10, 10, 1});
  const Roi back = get_roi(g.centers, g.voxel_size);
  for (int a = 0; a < 3; ++a) {
    EXPECT_NEAR(back.axis(a).lo, roi.axis(a).lo, 1e-15);
    EXPECT_NEAR(back.axis(a).hi, roi.axis(a).hi, 1e-15);
  }
}

TEST(GetRoi, UnitSpacedCube) {
  std::vector<Vec3> centers;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) centers.emplace_back(i, j, k);
  const Roi roi = get_roi(centers, {1, 1, 1});
  for (int a = 0; a < 3; ++a) {
    EXPECT_EQ(roi.axis(a).lo, -0.5);
    EXPECT_EQ(roi.axis(a).hi, 1.5);
  }
}

TEST(CurrentPattern, Presets) {
  RowMatrix seq(3, 3);
  seq << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  EXPECT_TRUE(same_matrix(create_current_pattern("sequential", 3, 1.0), seq));
  RowMatrix uni(1, 4);
  uni << 0.5, 0.5, 0.5, 0.5;
  EXPECT_TRUE(same_matrix(create_current_pattern("uniform", 4, 0.5), uni));
  RowMatrix pair(2, 3);
  pair << 2, -2, 0, 0, 2, -2;
  EXPECT_TRUE(same_matrix(create_current_pattern("pairwise", 3, 2.0), pair));
}

TEST(CurrentPattern, Errors) {
  EXPECT_THROW(create_current_pattern("zigzag", 3, 1.0), std::invalid_argument);
  EXPECT_THROW(create_current_pattern("sequential", 0, 1.0), std::invalid_argument);
  EXPECT_THROW(create_current_pattern("sequential", 3, 0.0), std::invalid_argument);
  EXPECT_THROW(create_current_pattern("pairwise", 1, 1.0), std::invalid_argument);
}

TEST(ValidateSetup, PresetsPass) {
  for (const char* name : {"default2D", "default3D", "realistic3D"}) {
    const auto r = validate_setup(presets::by_name(name));
    EXPECT_TRUE(r.ok()) << name << ": " << (r.violations.empty() ? "" : r.violations.front());
  }
}

TEST(ValidateSetup, NonUnitNormal) {
  mrx::Setup s = presets::default3d();
  s.coils[3].normal = {0, 0, 2};
  const auto r = validate_setup(s);
  EXPECT_TRUE(has_violation(r, "non-unit normal, coil 4"));
}

TEST(ValidateSetup, ZCoherenceIn2D) {
  mrx::Setup s = presets::default2d();
  s.sensors[0].position.z() = 0.01;
  EXPECT_TRUE(has_violation(validate_setup(s), "2D z-coherence"));
}

TEST(ValidateSetup, OtherViolations) {
  mrx::Setup s = presets::default3d();
  s.sensors[1].sensor_id = s.sensors[0].sensor_id;
  s.coils[0].position.x() = std::nan("");
  s.coils[1].segments = std::vector<Vec3>{{0, 0, 0}};
  s.coils[2].segments = std::vector<Vec3>{{0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
  s.dim = 4;
  const auto r = validate_setup(s);
  EXPECT_TRUE(has_violation(r, "duplicate sensor id 1"));
  EXPECT_TRUE(has_violation(r, "non-finite coordinates, coil 1"));
  EXPECT_TRUE(has_violation(r, "coil 2: fewer than 2 segment points"));
  EXPECT_TRUE(has_violation(r, "coil 3: repeated consecutive segment point"));
  EXPECT_TRUE(has_violation(r, "invalid dimension"));

  mrx::Setup empty;
  EXPECT_TRUE(has_violation(validate_setup(empty), "no coils"));
  EXPECT_TRUE(has_violation(validate_setup(empty), "no sensors"));
}

TEST(ValidateConfig, Examples) {
  const mrx::Setup s = presets::default2d();
  Config ok = presets::single_sequential(s, {10, 10, 1});
  EXPECT_TRUE(validate_config(ok).ok());

  Config mismatch = ok;
  mismatch.active_coils = {0, 1, 2, 3};
  mismatch.current_pattern = RowMatrix::Ones(2, 5);
  EXPECT_TRUE(has_violation(validate_config(mismatch), "pattern/coil mismatch"));

  Config res = ok;
  res.res = {0, 10, 1};
  EXPECT_TRUE(has_violation(validate_config(res), "nonpositive resolution"));

  Config order = ok;
  order.active_sensors = {2, 1};
  EXPECT_TRUE(has_violation(validate_config(order), "strictly increasing"));
}

TEST(Compatibility, Examples) {
  const mrx::Setup s = presets::default2d();
  Config c = presets::single_sequential(s, {10, 10, 1});
  EXPECT_TRUE(check_compatibility(s, c).ok());

  Config out_of_range = c;
  out_of_range.active_sensors.push_back(9);
  EXPECT_TRUE(has_violation(check_compatibility(s, out_of_range), "sensor index out of range: 10"));

  Config deep = c;
  deep.res = {10, 10, 3};
  EXPECT_TRUE(has_violation(check_compatibility(s, deep), "2D requires nz=1"));
}

TEST(Compatibility, SegmentsIn2DWarn) {
  mrx::Setup s = presets::default2d();
  s.coils[0].segments = std::vector<Vec3>{{-0.03, 0.0, 0.0}, {-0.01, 0.0, 0.0}};
  const auto r = check_compatibility(s, presets::single_sequential(s, {10, 10, 1}));
  EXPECT_TRUE(r.ok());
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0], "coil 1: segments ignored in 2D setup, dipole model used");
}

TEST(Validation, PureAndRequireValidThrows) {
  mrx::Setup s = presets::default3d();
  s.coils[0].normal = {0, 0, 3};
  const auto a = validate_setup(s);
  const auto b = validate_setup(s);
  EXPECT_EQ(a.violations, b.violations);
  try {
    require_valid(s, presets::single_sequential(s, {10, 10, 5}));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_FALSE(e.violations().empty());
  }
}

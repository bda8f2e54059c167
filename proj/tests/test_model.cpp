#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "ehcs/model.hpp"

namespace ehcs {
namespace {

EhcsSpec scalar_spec() {
  EhcsSpec s;
  s.plant = PlantModel::scalar(0.8, 1.1);
  s.channel = {0.98, 2};
  s.source = build_deterministic_periodic({5, 0, 0});
  s.battery_capacity = 2;
  return s;
}

bool has_error(const ValidationError& e, const std::string& prefix) {
  return std::any_of(e.errors().begin(), e.errors().end(),
                     [&](const std::string& m) { return m.rfind(prefix, 0) == 0; });
}

TEST(ValidateEhcs, AcceptsWellFormedScalarSystem) {
  const auto v = validate_ehcs(scalar_spec());
  EXPECT_EQ(v.dim(), 1);
  EXPECT_EQ(v.num_latent(), 3);
  EXPECT_EQ(v.h_max(), 5);
  EXPECT_EQ(v.num_energy_levels(), 5 + 2 + 1);
  EXPECT_TRUE(v.warnings().empty());
  EXPECT_EQ(v.disturbance_second_moment(), Eigen::MatrixXd::Zero(1, 1));
}

TEST(ValidateEhcs, ReportsEveryViolationAtOnce) {
  auto s = scalar_spec();
  s.plant.a_open = Eigen::MatrixXd::Identity(2, 2);
  s.channel.success_prob = 1.5;
  s.channel.tx_threshold = 0;
  s.battery_capacity = -1;
  try {
    validate_ehcs(s);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_TRUE(has_error(e, "plant: dimension mismatch"));
    EXPECT_TRUE(has_error(e, "channel.lambda"));
    EXPECT_TRUE(has_error(e, "channel.tx_threshold"));
    EXPECT_TRUE(has_error(e, "battery_capacity"));
    EXPECT_EQ(e.errors().size(), 4u);
  }
}

TEST(ValidateEhcs, RejectsNonFinitePlant) {
  auto s = scalar_spec();
  s.plant.a_closed(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(validate_ehcs(s), ValidationError);
}

TEST(ValidateEhcs, RejectsNonStochasticSourceWithColumnNumber) {
  auto s = scalar_spec();
  Eigen::MatrixXd t(2, 2);
  t << 0.5, 0.5, 0.4, 0.5;
  s.source = HarvestSource::unchecked(t, {0, 1});
  try {
    validate_ehcs(s);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(has_error(e, "source.transition: column 1"));
  }
}

TEST(ValidateEhcs, RejectsNegativeEnergyAndLengthMismatch) {
  auto s = scalar_spec();
  s.source = HarvestSource::unchecked(Eigen::MatrixXd::Identity(2, 2), {0, -1});
  EXPECT_THROW(validate_ehcs(s), ValidationError);
  s.source = HarvestSource::unchecked(Eigen::MatrixXd::Identity(2, 2), {0, 1, 2});
  EXPECT_THROW(validate_ehcs(s), ValidationError);
}

TEST(ValidateEhcs, WarnsWhenTransmissionIsNeverFeasible) {
  auto s = scalar_spec();
  s.channel.tx_threshold = 9;  // 5 + 2 < 9
  const auto v = validate_ehcs(s);
  ASSERT_EQ(v.warnings().size(), 1u);
  EXPECT_NE(v.warnings()[0].find("never feasible"), std::string::npos);
}

TEST(ValidateEhcs, IsIdempotent) {
  const auto v = validate_ehcs(scalar_spec());
  const auto& again = validate_ehcs(v);
  EXPECT_EQ(&again, &v);
}

TEST(ValidateEhcs, WithBatteryCapacityRevalidates) {
  const auto v = validate_ehcs(scalar_spec());
  EXPECT_EQ(with_battery_capacity(v, 7).battery_capacity(), 7);
  EXPECT_THROW(with_battery_capacity(v, -1), ValidationError);
}

TEST(Disturbance, UniformSecondMomentIsWidthSquaredOverThree) {
  auto s = scalar_spec();
  s.disturbance = DisturbanceModel::uniform(Eigen::VectorXd::Constant(1, 0.5));
  EXPECT_NEAR(validate_ehcs(s).disturbance_second_moment()(0, 0), 1.0 / 12.0, 1e-15);

  // A scalar half width broadcasts over every coordinate.
  const DisturbanceModel d = DisturbanceModel::uniform(Eigen::VectorXd::Constant(1, 0.3));
  const Eigen::MatrixXd w = d.second_moment(3);
  EXPECT_TRUE(w.isApprox(Eigen::MatrixXd::Identity(3, 3) * (0.09 / 3.0)));
}

TEST(Disturbance, GaussianCovarianceMustBePsd) {
  auto s = scalar_spec();
  s.disturbance = DisturbanceModel::gaussian(Eigen::MatrixXd::Constant(1, 1, -1.0));
  EXPECT_THROW(validate_ehcs(s), ValidationError);
  s.disturbance = DisturbanceModel::gaussian(Eigen::MatrixXd::Constant(1, 1, 2.0));
  EXPECT_DOUBLE_EQ(validate_ehcs(s).disturbance_second_moment()(0, 0), 2.0);
}

TEST(Disturbance, WrongShapeIsRejected) {
  auto s = scalar_spec();
  s.disturbance = DisturbanceModel::gaussian(Eigen::MatrixXd::Identity(2, 2));
  EXPECT_THROW(validate_ehcs(s), ValidationError);
  s.disturbance = DisturbanceModel::uniform(Eigen::VectorXd::Constant(2, 0.1));
  EXPECT_THROW(validate_ehcs(s), ValidationError);
}

}  // namespace
}  // namespace ehcs

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "credence/dataset.hpp"
#include "credence/model.hpp"
#include "credence/rng.hpp"
#include "credence/transform.hpp"
#include "test_helpers.hpp"

using namespace credence;

namespace {

LogDensityModel std_gaussian_1d() {
  return LogDensityModel(
      1, []<class S>(std::span<const S> theta) -> S { return -0.5 * theta[0] * theta[0]; },
      make_identity_transform(1));
}

}  // namespace

TEST_CASE("ParamPoint rejects non-finite entries") {
  CHECK_THROWS_AS(constrained({1.0, std::numeric_limits<double>::quiet_NaN()}),
                  std::invalid_argument);
  CHECK_THROWS_AS(unconstrained({std::numeric_limits<double>::infinity()}),
                  std::invalid_argument);
  CHECK_NOTHROW(constrained({1.0, -2.5}));
}

TEST_CASE("transform round trips are identity to 1e-12") {
  Rng rng(123);
  const Transform identity = make_identity_transform(3);
  const Transform log_t = make_log_transform(3);
  const Transform logit_t = make_logit_transform(3);
  for (int i = 0; i < 100; ++i) {
    Vec theta_id(3), theta_pos(3), theta_unit(3);
    for (int j = 0; j < 3; ++j) {
      theta_id[j] = 4.0 * rng.normal();
      theta_pos[j] = std::exp(2.0 * rng.normal());
      theta_unit[j] = rng.uniform() * 0.98 + 0.01;
    }
    const Vec id_rt = identity.inverse(identity.forward(theta_id));
    const Vec log_rt = log_t.inverse(log_t.forward(theta_pos));
    const Vec logit_rt = logit_t.inverse(logit_t.forward(theta_unit));
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(id_rt[j] - theta_id[j]) < 1e-12);
      CHECK(std::abs(log_rt[j] - theta_pos[j]) < 1e-12 * std::max(1.0, theta_pos[j]));
      CHECK(std::abs(logit_rt[j] - theta_unit[j]) < 1e-12);
    }
  }
}

TEST_CASE("log-det Jacobian matches finite differences of the inverse map") {
  Rng rng(7);
  const double h = 1e-6;
  for (const auto& transform : {make_log_transform(2), make_logit_transform(2)}) {
    for (int rep = 0; rep < 20; ++rep) {
      Vec zeta{2.0 * rng.normal(), 2.0 * rng.normal()};
      // elementwise map: the Jacobian is diagonal, so log|det| is the sum
      // of log |d theta_i / d zeta_i|
      double fd_log_det = 0.0;
      for (int j = 0; j < 2; ++j) {
        Vec up = zeta, down = zeta;
        up[j] += h;
        down[j] -= h;
        const double deriv =
            (transform.inverse(up)[j] - transform.inverse(down)[j]) / (2.0 * h);
        fd_log_det += std::log(std::abs(deriv));
      }
      CHECK(std::abs(fd_log_det - transform.log_abs_det_jacobian_inverse(zeta)) < 1e-5);
    }
  }
  const Transform identity = make_identity_transform(2);
  CHECK(identity.log_abs_det_jacobian_inverse(Vec{1.0, -3.0}) == 0.0);
}

TEST_CASE("make_log_transform examples") {
  const Transform t1 = make_log_transform(1);
  CHECK(t1.inverse(Vec{0.0})[0] == Catch::Approx(1.0));
  CHECK(t1.log_abs_det_jacobian_inverse(Vec{0.0}) == 0.0);

  const Transform t2 = make_log_transform(2);
  const Vec theta = t2.inverse(Vec{1.0, 2.0});
  CHECK(theta[0] == Catch::Approx(std::exp(1.0)));
  CHECK(theta[1] == Catch::Approx(std::exp(2.0)));
  CHECK(t2.log_abs_det_jacobian_inverse(Vec{1.0, 2.0}) == Catch::Approx(3.0));

  // far-negative zeta still maps to a strictly positive theta
  const double tiny = t1.inverse(Vec{-50.0})[0];
  CHECK(tiny > 0.0);
  CHECK(std::isfinite(tiny));

  CHECK_THROWS_AS(make_log_transform(0), std::invalid_argument);
}

TEST_CASE("transformed_log_density") {
  SECTION("identity transform, Gaussian peak") {
    const LogDensityModel model = std_gaussian_1d();
    CHECK(transformed_log_density(model, unconstrained({0.0})) == Catch::Approx(0.0));
  }
  SECTION("log transform picks up the Jacobian term") {
    const LogDensityModel model(
        1, []<class S>(std::span<const S> theta) -> S { return -theta[0]; },
        make_log_transform(1));
    // -exp(0) + log|det J| = -1 + 0
    CHECK(transformed_log_density(model, unconstrained({0.0})) == Catch::Approx(-1.0));
  }
  SECTION("dimension and space violations") {
    const LogDensityModel model = std_gaussian_1d();
    CHECK_THROWS_AS(transformed_log_density(model, unconstrained({0.0, 1.0})),
                    std::invalid_argument);
    CHECK_THROWS_AS(transformed_log_density(model, constrained({0.0})), std::invalid_argument);
  }
}

TEST_CASE("log_joint never returns NaN") {
  const LogDensityModel model(
      1, []<class S>(std::span<const S> theta) -> S { return std::sqrt(ad::value_of(theta[0])); },
      make_identity_transform(1));
  CHECK(model.log_joint(Vec{-1.0}) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("coin posterior density") {
  CHECK(coin_posterior_density(0.5, 1, 0) == Catch::Approx(1.0));
  CHECK(coin_posterior_density(0.3, 0, 0) == Catch::Approx(1.0));
  CHECK_THROWS_AS(coin_posterior_density(-0.1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(coin_posterior_density(1.1, 1, 1), std::invalid_argument);

  SECTION("integrates to one for h + t <= 20") {
    for (std::uint64_t h = 0; h <= 20; ++h) {
      for (std::uint64_t t = 0; h + t <= 20; ++t) {
        const double integral = testing::simpson(
            [&](double r) { return coin_posterior_density(r, h, t); }, 0.0, 1.0, 1 << 16);
        CHECK(std::abs(integral - 1.0) < 1e-8);
      }
    }
  }
  SECTION("large counts stay finite through lgamma") {
    CHECK(std::isfinite(coin_posterior_density(0.5, 400, 350)));
  }
}

TEST_CASE("dataset CSV loading") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "credence_model_core_test";
  fs::create_directories(dir);

  SECTION("features with a label column") {
    const fs::path file = dir / "labeled.csv";
    std::ofstream(file) << "value,label\n1,0\n33,1\n2.5,0\n";
    const Dataset ds = load_dataset_csv(file);
    REQUIRE(ds.n_rows() == 3);
    REQUIRE(ds.n_features() == 1);
    REQUIRE(ds.labels.has_value());
    CHECK(ds.feature_names == std::vector<std::string>{"value"});
    CHECK(ds.features(1, 0) == 33.0);
    CHECK((*ds.labels)[1] == 1.0);
    CHECK(ds.labels_are_binary());
  }
  SECTION("no label column means all features") {
    const fs::path file = dir / "unlabeled.csv";
    std::ofstream(file) << "a,b\n1,2\n3,4\n";
    const Dataset ds = load_dataset_csv(file);
    CHECK(ds.n_features() == 2);
    CHECK_FALSE(ds.labels.has_value());
  }
  SECTION("missing values are an error") {
    const fs::path file = dir / "missing.csv";
    std::ofstream(file) << "value,label\n1,0\n,1\n";
    CHECK_THROWS_WITH(load_dataset_csv(file), Catch::Matchers::ContainsSubstring("missing"));
  }
  SECTION("ragged rows are an error") {
    const fs::path file = dir / "ragged.csv";
    std::ofstream(file) << "a,b\n1\n";
    CHECK_THROWS(load_dataset_csv(file));
  }
  SECTION("quoted fields parse") {
    const fs::path file = dir / "quoted.csv";
    std::ofstream(file) << "\"value\",label\n\"1.5\",0\n";
    const Dataset ds = load_dataset_csv(file);
    CHECK(ds.features(0, 0) == 1.5);
  }
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "credence/ad.hpp"
#include "credence/bnn.hpp"
#include "credence/conjugate.hpp"
#include "credence/gradients.hpp"
#include "credence/model.hpp"
#include "credence/rng.hpp"

using namespace credence;

namespace {

LogDensityModel gaussian_diag(Vec precisions) {
  const std::size_t dim = precisions.size();
  return LogDensityModel(
      dim,
      [precisions]<class S>(std::span<const S> x) -> S {
        S total = S(0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
          total += -0.5 * precisions[i] * x[i] * x[i];
        }
        return total;
      },
      make_identity_transform(dim));
}

Dataset tiny_classification_data(std::size_t input_dim, std::size_t n, Rng& rng) {
  Dataset ds;
  ds.features = Matrix(n, input_dim);
  ds.labels = Vec(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < input_dim; ++j) {
      ds.features(i, j) = 2.0 * rng.normal();
      s += ds.features(i, j);
    }
    (*ds.labels)[i] = s + 0.5 * rng.normal() > 0.0 ? 1.0 : 0.0;
  }
  return ds;
}

}  // namespace

TEST_CASE("tape differentiates elementary compositions") {
  ad::Tape tape;
  const ad::Var x = ad::leaf(tape, 0.7);
  const ad::Var y = ad::leaf(tape, -1.3);
  const ad::Var f = ad::exp(x * y) + ad::tanh(x) / y - ad::log(ad::logistic(y));
  const auto adj = tape.adjoints(f.index());

  const double h = 1e-7;
  auto eval = [](double xv, double yv) {
    return std::exp(xv * yv) + std::tanh(xv) / yv - std::log(1.0 / (1.0 + std::exp(-yv)));
  };
  const double fdx = (eval(0.7 + h, -1.3) - eval(0.7 - h, -1.3)) / (2.0 * h);
  const double fdy = (eval(0.7, -1.3 + h) - eval(0.7, -1.3 - h)) / (2.0 * h);
  CHECK(adj[static_cast<std::size_t>(x.index())] == Catch::Approx(fdx).epsilon(1e-6));
  CHECK(adj[static_cast<std::size_t>(y.index())] == Catch::Approx(fdy).epsilon(1e-6));
}

TEST_CASE("constants fold without a tape") {
  const ad::Var c = ad::exp(ad::Var(1.0)) * ad::Var(2.0);
  CHECK(c.tape() == nullptr);
  CHECK(c.value() == Catch::Approx(2.0 * std::exp(1.0)));
}

TEST_CASE("grad_log_density on Gaussian targets") {
  const GradientEngine engine;
  SECTION("1D standard Gaussian") {
    const auto model = gaussian_diag({1.0});
    const Vec g = grad_log_density(engine, model, unconstrained({2.0}));
    CHECK(g[0] == Catch::Approx(-2.0));
  }
  SECTION("2D diagonal precisions (1, 4)") {
    const auto model = gaussian_diag({1.0, 4.0});
    const Vec g = grad_log_density(engine, model, unconstrained({1.0, 1.0}));
    CHECK(g[0] == Catch::Approx(-1.0));
    CHECK(g[1] == Catch::Approx(-4.0));
  }
  SECTION("finite-difference engine agrees") {
    const auto model = gaussian_diag({1.0, 4.0});
    const GradientEngine fd{GradientMode::FiniteDifference, 1e-5};
    const Vec g = grad_log_density(fd, model, unconstrained({1.0, 1.0}));
    CHECK(g[0] == Catch::Approx(-1.0).epsilon(1e-8));
    CHECK(g[1] == Catch::Approx(-4.0).epsilon(1e-8));
  }
}

TEST_CASE("gradient errors") {
  const GradientEngine engine;
  const auto model = gamma_poisson_model(2.0, 1.0, 0, 0);
  SECTION("dimension mismatch") {
    CHECK_THROWS_AS(grad_log_density(engine, model, unconstrained({0.0, 0.0})),
                    std::invalid_argument);
  }
  SECTION("non-finite density carries the point") {
    const LogDensityModel inf_model(
        1,
        []<class S>(std::span<const S>) -> S {
          return S(-std::numeric_limits<double>::infinity());
        },
        make_identity_transform(1));
    CHECK_THROWS_AS(grad_log_density(engine, inf_model, unconstrained({3.5})), NumericError);
    try {
      grad_log_density(engine, inf_model, unconstrained({3.5}));
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("3.5") != std::string::npos);
    }
  }
}

TEST_CASE("check_gradient") {
  SECTION("quadratic densities pass tight tolerances") {
    const auto model = gaussian_diag({2.0, 0.5});
    Rng rng(99);
    for (int i = 0; i < 10; ++i) {
      const auto report =
          check_gradient(model, Vec{3.0 * rng.normal(), 3.0 * rng.normal()}, 1e-6);
      CHECK(report.pass);
    }
  }
  SECTION("kink reported as failure, not crash") {
    const LogDensityModel kinked(
        1,
        []<class S>(std::span<const S> theta) -> S {
          // -|theta|, differentiable everywhere except 0
          return ad::value_of(theta[0]) >= 0.0 ? -theta[0] : theta[0];
        },
        make_identity_transform(1));
    const auto report = check_gradient(kinked, Vec{0.0}, 1e-6);
    CHECK_FALSE(report.pass);
  }
}

TEST_CASE("gradient of a sum is the sum of gradients") {
  const auto model_a = gaussian_diag({1.0, 3.0});
  const auto model_b = gaussian_diag({2.0, 0.25});
  const LogDensityModel composed(
      2,
      []<class S>(std::span<const S> x) -> S {
        S a = S(0.0), b = S(0.0);
        a += -0.5 * (1.0 * x[0] * x[0] + 3.0 * x[1] * x[1]);
        b += -0.5 * (2.0 * x[0] * x[0] + 0.25 * x[1] * x[1]);
        return a + b;
      },
      make_identity_transform(2));
  const GradientEngine engine;
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const Vec zeta{2.0 * rng.normal(), 2.0 * rng.normal()};
    const Vec ga = grad_log_density(engine, model_a, zeta);
    const Vec gb = grad_log_density(engine, model_b, zeta);
    const Vec gc = grad_log_density(engine, composed, zeta);
    CHECK(gc[0] == Catch::Approx(ga[0] + gb[0]));
    CHECK(gc[1] == Catch::Approx(ga[1] + gb[1]));
  }
}

TEST_CASE("check_gradient passes on every bundled model at 25 random points") {
  Rng rng(2024);
  std::vector<LogDensityModel> models;
  models.push_back(beta_bernoulli_model(1.0, 1.0, 7, 3));
  models.push_back(gamma_poisson_model(2.0, 1.0, 10, 4));
  models.push_back(dirichlet_categorical_model({1.0, 1.0, 1.0}, {2, 3, 5}));
  models.push_back(gaussian_diag({1.0, 4.0, 0.5}));

  for (const auto& model : models) {
    for (int i = 0; i < 25; ++i) {
      Vec zeta(model.dim());
      for (double& z : zeta) z = 1.5 * rng.normal();
      const auto report = check_gradient(model, zeta, 1e-5);
      INFO("max_rel_error = " << report.max_rel_error);
      CHECK(report.pass);
    }
  }
}

TEST_CASE("BNN gradients match finite differences to 1e-6") {
  Rng rng(77);
  Dataset data = tiny_classification_data(1, 40, rng);
  BnnArchitecture arch;
  arch.input_dim = 1;
  arch.hidden_layers = {5};
  const LogDensityModel model = bnn_log_joint(arch, data);
  const GradientEngine analytic;
  const GradientEngine fd{GradientMode::FiniteDifference, 1e-5};
  for (int rep = 0; rep < 5; ++rep) {
    Vec w(model.dim());
    for (double& x : w) x = 0.5 * rng.normal();
    const Vec ga = grad_log_density(analytic, model, w);
    const Vec gf = grad_log_density(fd, model, w);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double scale = std::max(1e-8, std::abs(gf[i]));
      CHECK(std::abs(ga[i] - gf[i]) / scale < 1e-6);
    }
  }
}

#include <doctest.h>

#include <cmath>

#include "catchsim/ballistics.hpp"
#include "catchsim/rng.hpp"
#include "support/oracles.hpp"

using namespace catchsim;

namespace {
BallState sample_state(Rng& rng) {
  BallState s;
  s.position = Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(1, 2));
  s.velocity =
      Vec3(rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(0, 6));
  return s;
}
}  // namespace

TEST_CASE("acceleration formula") {
  DragModel model;
  CHECK((ball_accel(model, Vec3::Zero()) - Vec3(0, 0, -model.gravity)).norm() ==
        doctest::Approx(0.0));
  const Vec3 v(3.0, -4.0, 0.0);  // speed 5
  const Vec3 a = ball_accel(model, v);
  CHECK(a.x() == doctest::Approx(-model.drag_coeff * 5.0 * 3.0));
  CHECK(a.y() == doctest::Approx(-model.drag_coeff * 5.0 * -4.0));
  CHECK(a.z() == doctest::Approx(-model.gravity));
}

TEST_CASE("integration agrees with a fine independent Euler run") {
  DragModel model;
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const BallState s0 = sample_state(rng);
    const BallPrediction pred = predict(model, s0, 0.6, 1e-3);
    const BallState fine = testsupport::naive_propagate(model, s0, 0.6, 1e-6);
    const BallState& end = pred.states.back();
    CHECK(end.t == doctest::Approx(0.6).epsilon(1e-9));
    CHECK((end.position - fine.position).norm() < 5e-5);
    CHECK((end.velocity - fine.velocity).norm() < 5e-4);
  }
}

TEST_CASE("drag-free flight reproduces the closed form") {
  DragModel model;
  model.drag_coeff = 0.0;
  BallState s0;
  s0.position = Vec3(1.0, 2.0, 1.5);
  s0.velocity = Vec3(-3.0, 0.5, 4.0);
  const double T = 0.75;
  const BallPrediction pred = predict(model, s0, T, 1e-3);
  const BallState end = query(pred, T);
  const Vec3 expect = s0.position + T * s0.velocity -
                      0.5 * model.gravity * T * T * Vec3::UnitZ();
  CHECK((end.position - expect).norm() < 1e-10);
  CHECK((end.velocity -
         (s0.velocity - model.gravity * T * Vec3::UnitZ())).norm() < 1e-10);
}

TEST_CASE("drag strictly dissipates mechanical energy") {
  DragModel model;
  Rng rng(32);
  const BallState s0 = sample_state(rng);
  const BallPrediction pred = predict(model, s0, 0.7, 1e-3);
  double prev = std::numeric_limits<double>::infinity();
  for (const BallState& s : pred.states) {
    const double energy =
        0.5 * s.velocity.squaredNorm() + model.gravity * s.position.z();
    CHECK(energy <= prev + 1e-12);
    prev = energy;
  }
}

TEST_CASE("drag shortens range relative to the vacuum trajectory") {
  DragModel model;
  DragModel vacuum;
  vacuum.drag_coeff = 0.0;
  BallState s0;
  s0.position = Vec3::Zero();
  s0.velocity = Vec3(6.0, 0.0, 3.0);
  const BallState with_drag = query(predict(model, s0, 0.6, 1e-3), 0.6);
  const BallState without = query(predict(vacuum, s0, 0.6, 1e-3), 0.6);
  CHECK(with_drag.position.x() < without.position.x());
}

TEST_CASE("query is exact on grid points and accurate between them") {
  DragModel model;
  Rng rng(33);
  const BallState s0 = sample_state(rng);
  const BallPrediction pred = predict(model, s0, 0.5, 0.01);
  for (size_t k = 0; k < pred.states.size(); k += 7) {
    const BallState q = query(pred, pred.states[k].t);
    CHECK((q.position - pred.states[k].position).norm() < 1e-13);
    CHECK((q.velocity - pred.states[k].velocity).norm() < 1e-13);
  }
  // Between grid points, compare against a fine reference run.
  for (double t : {0.0151, 0.1234, 0.3339, 0.4987}) {
    const BallState q = query(pred, t);
    const BallState ref = testsupport::naive_propagate(model, s0, t, 1e-6);
    CHECK((q.position - ref.position).norm() < 1e-5);
    CHECK((q.velocity - ref.velocity).norm() < 1e-3);
  }
}

TEST_CASE("query rejects times outside the horizon") {
  DragModel model;
  BallState s0;
  s0.velocity = Vec3(1, 0, 0);
  const BallPrediction pred = predict(model, s0, 0.5, 0.01);
  CHECK_THROWS_AS(query(pred, -0.01), ConfigError);
  CHECK_THROWS_AS(query(pred, 0.51), ConfigError);
}

TEST_CASE("predict validates its step and horizon") {
  DragModel model;
  BallState s0;
  CHECK_THROWS_AS(predict(model, s0, 0.5, 0.0), ConfigError);
  CHECK_THROWS_AS(predict(model, s0, 0.5, -0.1), ConfigError);
  CHECK_THROWS_AS(predict(model, s0, 0.001, 0.01), ConfigError);
}

TEST_CASE("euler integration converges to the rk4 answer as dt shrinks") {
  DragModel model;
  BallState s0;
  s0.velocity = Vec3(5, 1, 4);
  const BallState ref = query(predict(model, s0, 0.5, 1e-4), 0.5);
  const BallState coarse =
      query(predict(model, s0, 0.5, 1e-2, Integrator::euler), 0.5);
  const BallState fine =
      query(predict(model, s0, 0.5, 1e-4, Integrator::euler), 0.5);
  const double err_coarse = (coarse.position - ref.position).norm();
  const double err_fine = (fine.position - ref.position).norm();
  CHECK(err_fine < err_coarse / 10.0);
  CHECK(err_fine < 5e-4);
}

TEST_CASE("drag estimation recovers the coefficient from clean tosses") {
  DragModel truth;
  truth.drag_coeff = 0.0238;
  Rng rng(34);
  std::vector<std::vector<BallState>> tosses;
  for (int toss = 0; toss < 5; ++toss) {
    const BallState s0 = sample_state(rng);
    const BallPrediction pred = predict(truth, s0, 0.6, 1e-3);
    std::vector<BallState> samples;
    for (double t = 0.0; t <= 0.6; t += 1.0 / 120.0) {
      samples.push_back(query(pred, t));
    }
    tosses.push_back(samples);
  }
  const DragModel fitted = estimate_drag(tosses);
  CHECK(fitted.drag_coeff ==
        doctest::Approx(truth.drag_coeff).epsilon(0.02));
}

TEST_CASE("drag estimation refuses to fit slow uninformative data") {
  DragModel truth;
  BallState s0;
  s0.position = Vec3(0, 0, 2);
  s0.velocity = Vec3(0.05, 0.0, 0.0);  // crawling: below the speed gate
  const BallPrediction pred = predict(truth, s0, 0.04, 1e-3);
  std::vector<BallState> samples;
  for (double t = 0.0; t <= 0.04; t += 0.005) samples.push_back(query(pred, t));
  CHECK_THROWS_AS(estimate_drag({samples}), IdentifiabilityError);
}

TEST_CASE("throw synthesis hits the requested target") {
  DragModel model;
  const Vec3 origin(2.8, -3.1, 1.5);
  const Vec3 target(0.0, 0.0, 1.0);
  const double T = 0.7;
  const auto v0 = solve_throw_velocity(model, origin, target, T);
  REQUIRE(v0.has_value());
  BallState s0;
  s0.position = origin;
  s0.velocity = *v0;
  const BallState arrival = query(predict(model, s0, T + 0.01, 1e-4), T);
  CHECK((arrival.position - target).norm() < 2e-3);
}

TEST_CASE("drag-free throw matches the projectile closed form") {
  DragModel model;
  model.drag_coeff = 0.0;
  const Vec3 origin(1.0, 1.0, 1.0);
  const Vec3 target(-1.0, 0.5, 1.2);
  const double T = 0.8;
  const auto v0 = solve_throw_velocity(model, origin, target, T);
  REQUIRE(v0.has_value());
  const Vec3 expect =
      (target - origin) / T + 0.5 * model.gravity * T * Vec3::UnitZ();
  CHECK((*v0 - expect).norm() < 1e-6);
}

TEST_CASE("synthesized throws are deterministic and respect the region") {
  DragModel model;
  OriginRegion region;
  const Vec3 target(0.1, -0.2, 1.0);
  const auto a = synthesize_throw(model, 99, target, 0.7, region);
  const auto b = synthesize_throw(model, 99, target, 0.7, region);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK((a->position - b->position).norm() == 0.0);
  CHECK((a->velocity - b->velocity).norm() == 0.0);
  const double r = std::hypot(a->position.x(), a->position.y());
  CHECK(r >= region.radius_min - 1e-9);
  CHECK(r <= region.radius_max + 1e-9);
  CHECK(a->position.z() >= region.height_min - 1e-9);
  CHECK(a->position.z() <= region.height_max + 1e-9);
  const auto c = synthesize_throw(model, 100, target, 0.7, region);
  REQUIRE(c.has_value());
  CHECK((a->position - c->position).norm() > 1e-6);
}

TEST_CASE("fixed-origin regions pin the throw position") {
  DragModel model;
  OriginRegion region;
  region.fixed_origin = Vec3(2.5, 2.0, 1.5);
  const auto s = synthesize_throw(model, 7, Vec3(0, 0, 1), 0.7, region);
  REQUIRE(s.has_value());
  CHECK((s->position - *region.fixed_origin).norm() < 1e-12);
}

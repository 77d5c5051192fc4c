#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <vector>

#include "catchsim/rng.hpp"
#include "catchsim/tracking.hpp"

using namespace catchsim;

namespace {

JointMlp zero_net() {
  JointMlp net;
  net.w1 = Eigen::MatrixXd::Zero(10, 2);
  net.b1 = Eigen::VectorXd::Zero(10);
  net.w2 = Eigen::MatrixXd::Zero(10, 10);
  net.b2 = Eigen::VectorXd::Zero(10);
  net.w3 = Eigen::MatrixXd::Zero(1, 10);
  return net;
}

JointMlp random_net(Rng& rng) {
  JointMlp net = zero_net();
  auto fill = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.normal(0.0, 0.7);
  };
  fill(net.w1);
  fill(net.w2);
  fill(net.w3);
  for (int i = 0; i < 10; ++i) {
    net.b1[i] = rng.uniform(-0.5, 0.5);
    net.b2[i] = rng.uniform(-0.5, 0.5);
  }
  net.b3 = rng.uniform(-0.5, 0.5);
  return net;
}

// Smooth random reference stream for plant probes.
std::vector<JointVector> wander_stream(const PlantConfig& cfg, std::uint64_t seed,
                                       int steps) {
  Rng rng(seed);
  std::vector<JointVector> out;
  JointVector y = JointVector::Zero();
  JointVector rate = JointVector::Zero();
  for (int k = 0; k < steps; ++k) {
    for (int i = 0; i < kNumJoints; ++i) {
      rate[i] = 0.95 * rate[i] + rng.uniform(-0.4, 0.4);
      y[i] = std::clamp(y[i] + rate[i] * cfg.control_dt, -0.9 * cfg.q_max[i],
                        0.9 * cfg.q_max[i]);
    }
    out.push_back(y);
  }
  return out;
}

// The held-out evaluation artifacts are expensive to build (dataset
// collection plus training with closed-loop selection), so every test case
// that needs them shares one lazily built copy.
struct TrainedPipeline {
  RobotDescription desc;
  PlantConfig cfg;
  TrainingSet set;
  MlpModel model;
  TrainReport report;
};

const TrainedPipeline& trained_pipeline() {
  static const TrainedPipeline p = [] {
    TrainedPipeline t;
    t.desc = default_description();
    t.cfg = PlantConfig::defaults(t.desc);
    DatasetOptions dopts;
    dopts.seed = 11;
    dopts.min_pairs_per_joint = 1400;
    t.set = collect_dataset(t.desc, t.cfg, dopts);
    TrainOptions topts;
    topts.seed = 33;
    t.model = train_for_plant(t.set, t.cfg, topts, &t.report);
    return t;
  }();
  return p;
}

}  // namespace

TEST_CASE("the plant holds position under a constant reference") {
  const PlantConfig cfg = PlantConfig::defaults(default_description());
  JointVector q0;
  q0 << 0.3, -0.8, 1.1, 0.4, -1.2, 0.9, 0.7, -0.5;
  PlantState st = init_plant(cfg, q0);
  for (int k = 0; k < 500; ++k) {
    const JointVector q = plant_step(cfg, st, q0);
    CHECK((q - q0).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(st.qd.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("measured relative degree equals the declared one") {
  const PlantConfig cfg = PlantConfig::defaults(default_description());
  for (int i = 0; i < kNumJoints; ++i) {
    const int r = measure_relative_degree(cfg, i);
    CHECK(r == cfg.relative_degree[static_cast<size_t>(i)]);
    CHECK(r == cfg.delay_steps[static_cast<size_t>(i)] + 1);
    CHECK(r == (i < kNumArmJoints ? 8 : 14));
  }

  SUBCASE("a longer configured delay moves the declared degree with it") {
    PlantConfig slow = cfg;
    slow.delay_steps[2] = 19;
    slow.relative_degree[2] = 20;
    CHECK(measure_relative_degree(slow, 2) == 20);
  }
}

TEST_CASE("velocity and acceleration clips hold under wild references") {
  const PlantConfig cfg = PlantConfig::defaults(default_description());
  Rng rng(derive_seed(20260824, 5, 0));
  PlantState st = init_plant(cfg, JointVector::Zero());
  JointVector qd_prev = st.qd;
  for (int k = 0; k < 2000; ++k) {
    JointVector y;
    for (int i = 0; i < kNumJoints; ++i) {
      y[i] = rng.uniform(-cfg.q_max[i], cfg.q_max[i]);
    }
    plant_step(cfg, st, y);
    for (int i = 0; i < kNumJoints; ++i) {
      CHECK(std::abs(st.qd[i]) <= cfg.v_max[i] + 1e-12);
      CHECK(std::abs(st.qd[i] - qd_prev[i]) <=
            cfg.a_max[i] * cfg.control_dt + 1e-12);
    }
    qd_prev = st.qd;
  }
}

TEST_CASE("plant replays are bit-identical") {
  const PlantConfig cfg = PlantConfig::defaults(default_description());
  const auto refs = wander_stream(cfg, derive_seed(20260824, 5, 1), 600);
  std::vector<JointVector> first, second;
  {
    PlantState st = init_plant(cfg, refs.front());
    for (const auto& y : refs) first.push_back(plant_step(cfg, st, y));
  }
  {
    PlantState st = init_plant(cfg, refs.front());
    for (const auto& y : refs) second.push_back(plant_step(cfg, st, y));
  }
  REQUIRE(first.size() == second.size());
  for (size_t k = 0; k < first.size(); ++k) {
    CHECK((first[k] - second[k]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("pair extraction on a perfectly tracking plant gives zero targets") {
  const PlantConfig cfg = PlantConfig::defaults(default_description());
  const auto y = wander_stream(cfg, derive_seed(20260824, 5, 2), 400);
  // Fictitious plant whose output equals the applied reference.
  const TrainingSet set = extract_pairs(y, y, cfg.relative_degree);
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& pairs = set.joints[static_cast<size_t>(i)];
    const int r = cfg.relative_degree[static_cast<size_t>(i)];
    REQUIRE(static_cast<int>(pairs.size()) == static_cast<int>(y.size()) - r);
    for (size_t k = 0; k < pairs.size(); ++k) {
      CHECK(pairs[k].target == 0.0);
      CHECK(pairs[k].state_offset ==
            y[k][i] - y[k + 1][i]);
      CHECK(pairs[k].future_offset ==
            y[k + static_cast<size_t>(r)][i] - y[k + 1][i]);
    }
  }

  SUBCASE("re-extraction is bit-identical") {
    const TrainingSet again = extract_pairs(y, y, cfg.relative_degree);
    for (int i = 0; i < kNumJoints; ++i) {
      const auto& a = set.joints[static_cast<size_t>(i)];
      const auto& b = again.joints[static_cast<size_t>(i)];
      REQUIRE(a.size() == b.size());
      for (size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].state_offset == b[k].state_offset);
        CHECK(a[k].future_offset == b[k].future_offset);
        CHECK(a[k].target == b[k].target);
      }
    }
  }

  SUBCASE("mismatched stream lengths are rejected") {
    auto shorter = y;
    shorter.pop_back();
    CHECK_THROWS_AS(extract_pairs(y, shorter, cfg.relative_degree), ConfigError);
  }
}

TEST_CASE("collected datasets meet the per-joint quota deterministically") {
  const RobotDescription desc = default_description();
  const PlantConfig cfg = PlantConfig::defaults(desc);
  DatasetOptions opts;
  opts.seed = 4;
  const TrainingSet a = collect_dataset(desc, cfg, opts);
  for (int i = 0; i < kNumJoints; ++i) {
    CHECK(a.joints[static_cast<size_t>(i)].size() >= 1000);
    for (const TrainingPair& p : a.joints[static_cast<size_t>(i)]) {
      CHECK(std::isfinite(p.state_offset));
      CHECK(std::isfinite(p.future_offset));
      CHECK(std::isfinite(p.target));
    }
  }

  const TrainingSet b = collect_dataset(desc, cfg, opts);
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& pa = a.joints[static_cast<size_t>(i)];
    const auto& pb = b.joints[static_cast<size_t>(i)];
    REQUIRE(pa.size() == pb.size());
    for (size_t k = 0; k < pa.size(); ++k) {
      CHECK(pa[k].state_offset == pb[k].state_offset);
      CHECK(pa[k].future_offset == pb[k].future_offset);
      CHECK(pa[k].target == pb[k].target);
    }
  }

  DatasetOptions other = opts;
  other.seed = 5;
  const TrainingSet c = collect_dataset(desc, cfg, other);
  bool any_difference = false;
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& pa = a.joints[static_cast<size_t>(i)];
    const auto& pc = c.joints[static_cast<size_t>(i)];
    if (pa.size() != pc.size()) {
      any_difference = true;
      continue;
    }
    for (size_t k = 0; k < pa.size(); ++k) {
      any_difference |= pa[k].target != pc[k].target;
    }
  }
  CHECK(any_difference);
}

TEST_CASE("dataset files round-trip exactly") {
  const RobotDescription desc = default_description();
  const PlantConfig cfg = PlantConfig::defaults(desc);
  DatasetOptions opts;
  opts.seed = 6;
  opts.min_pairs_per_joint = 100;
  const TrainingSet set = collect_dataset(desc, cfg, opts);

  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "catchsim_dataset_roundtrip.csv").string();
  save_dataset(set, path);
  const TrainingSet loaded = load_dataset(path);
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& a = set.joints[static_cast<size_t>(i)];
    const auto& b = loaded.joints[static_cast<size_t>(i)];
    REQUIRE(a.size() == b.size());
    for (size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].state_offset == b[k].state_offset);
      CHECK(a[k].future_offset == b[k].future_offset);
      CHECK(a[k].target == b[k].target);
    }
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_dataset("/nonexistent/pairs.csv"), IoError);

  const std::string bad = (dir / "catchsim_dataset_bad.csv").string();
  {
    std::ofstream f(bad);
    f << "not,a,schema,header\n1,2,3,4\n";
  }
  CHECK_THROWS_AS(load_dataset(bad), ConfigError);
  {
    std::ofstream f(bad);
    f << "joint,state_offset,future_offset,target\n9,0.1,0.2,0.3\n";
  }
  CHECK_THROWS_AS(load_dataset(bad), ConfigError);
  {
    std::ofstream f(bad);
    f << "joint,state_offset,future_offset,target\n2,abc,0.2,0.3\n";
  }
  CHECK_THROWS_AS(load_dataset(bad), ConfigError);
  std::filesystem::remove(bad);
}

TEST_CASE("backpropagation matches central finite differences") {
  Rng rng(derive_seed(20260824, 5, 3));
  int checked = 0;
  for (int draw = 0; draw < 100; ++draw) {
    JointMlp net = random_net(rng);
    std::vector<Eigen::Vector3d> samples;
    const int n = rng.uniform_int(1, 4);
    for (int s = 0; s < n; ++s) {
      samples.emplace_back(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                           rng.uniform(-2.0, 2.0));
    }
    detail::MlpGradients grads;
    detail::mlp_loss_and_grad(net, samples, &grads);

    // Flatten analytic and numeric gradients over every parameter.
    std::vector<double*> params;
    std::vector<double> analytic;
    auto collect = [&](Eigen::MatrixXd& m, const Eigen::MatrixXd& g) {
      for (Eigen::Index k = 0; k < m.size(); ++k) {
        params.push_back(m.data() + k);
        analytic.push_back(g.data()[k]);
      }
    };
    collect(net.w1, grads.w1);
    collect(net.w2, grads.w2);
    collect(net.w3, grads.w3);
    for (Eigen::Index k = 0; k < net.b1.size(); ++k) {
      params.push_back(net.b1.data() + k);
      analytic.push_back(grads.b1[k]);
    }
    for (Eigen::Index k = 0; k < net.b2.size(); ++k) {
      params.push_back(net.b2.data() + k);
      analytic.push_back(grads.b2[k]);
    }
    params.push_back(&net.b3);
    analytic.push_back(grads.b3);

    const double h = 1e-6;
    Eigen::VectorXd numeric(params.size());
    for (size_t k = 0; k < params.size(); ++k) {
      const double saved = *params[k];
      *params[k] = saved + h;
      const double up = detail::mlp_loss_and_grad(net, samples, nullptr);
      *params[k] = saved - h;
      const double down = detail::mlp_loss_and_grad(net, samples, nullptr);
      *params[k] = saved;
      numeric[static_cast<Eigen::Index>(k)] = (up - down) / (2.0 * h);
    }
    const Eigen::Map<Eigen::VectorXd> exact(analytic.data(),
                                            static_cast<Eigen::Index>(analytic.size()));
    const double denom = std::max(1e-12, exact.norm());
    CHECK((numeric - exact).norm() / denom < 1e-4);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("an easy linear mapping is fit to high accuracy") {
  Rng rng(derive_seed(20260824, 5, 4));
  std::vector<TrainingPair> pairs;
  auto target_fn = [](double a, double b) { return 0.37 * a - 0.21 * b + 0.05; };
  for (int k = 0; k < 1200; ++k) {
    TrainingPair p;
    p.state_offset = rng.uniform(-1.0, 1.0);
    p.future_offset = rng.uniform(-1.0, 1.0);
    p.target = target_fn(p.state_offset, p.future_offset);
    pairs.push_back(p);
  }
  TrainOptions opts;
  opts.seed = 12;
  opts.epochs = 300;  // the fit check wants full convergence
  const JointMlp net = train_joint(pairs, opts);

  double mse = 0.0;
  for (int k = 0; k < 300; ++k) {
    const double a = rng.uniform(-1.0, 1.0);
    const double b = rng.uniform(-1.0, 1.0);
    const double e = net.forward(a, b) - target_fn(a, b);
    mse += e * e / 300.0;
  }
  CHECK(mse < 1e-4);
}

TEST_CASE("all-zero targets train to a near-zero function") {
  Rng rng(derive_seed(20260824, 5, 5));
  std::vector<TrainingPair> pairs;
  for (int k = 0; k < 1000; ++k) {
    TrainingPair p;
    p.state_offset = rng.uniform(-1.0, 1.0);
    p.future_offset = rng.uniform(-1.0, 1.0);
    p.target = 0.0;
    pairs.push_back(p);
  }
  const JointMlp net = train_joint(pairs, {});
  for (int k = 0; k < 100; ++k) {
    CHECK(std::abs(net.forward(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))) <
          1e-3);
  }
}

TEST_CASE("training is reproducible to the bit") {
  Rng rng(derive_seed(20260824, 5, 6));
  std::vector<TrainingPair> pairs;
  for (int k = 0; k < 400; ++k) {
    TrainingPair p;
    p.state_offset = rng.uniform(-1.0, 1.0);
    p.future_offset = rng.uniform(-1.0, 1.0);
    p.target = 0.2 * p.state_offset * p.future_offset;
    pairs.push_back(p);
  }
  TrainOptions opts;
  opts.seed = 9;
  JointCurves c1, c2;
  const JointMlp a = train_joint(pairs, opts, &c1);
  const JointMlp b = train_joint(pairs, opts, &c2);
  CHECK(c1.val_mse.back() == c2.val_mse.back());
  CHECK((a.w1 - b.w1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.w2 - b.w2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.w3 - b.w3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.b3 == b.b3);

  TrainOptions other = opts;
  other.seed = 10;
  const JointMlp c = train_joint(pairs, other);
  CHECK((a.w1 - c.w1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("divergent training aborts with diagnostics") {
  Rng rng(derive_seed(20260824, 5, 7));
  std::vector<TrainingPair> pairs;
  for (int k = 0; k < 200; ++k) {
    TrainingPair p;
    p.state_offset = rng.uniform(-1.0, 1.0);
    p.future_offset = rng.uniform(-1.0, 1.0);
    p.target = p.state_offset;
    pairs.push_back(p);
  }
  TrainOptions opts;
  opts.learning_rate = 1e3;  // guaranteed blow-up
  CHECK_THROWS_AS(train_joint(pairs, opts), TrainingError);
}

TEST_CASE("zero networks pass references through and clamps engage") {
  const PlantConfig cfg = PlantConfig::defaults(default_description());
  const JointMlp zero = zero_net();
  CHECK(preshape_joint(zero, 0.3, -0.8, 1.2) == -0.8);
  CHECK(preshape_joint(zero, -2.0, 1.5, 0.0) == 1.5);

  MlpModel model;
  for (auto& j : model.joints) j = zero_net();
  JointVector q = JointVector::Constant(0.2);
  JointVector y_next, y_future;
  for (int i = 0; i < kNumJoints; ++i) {
    y_next[i] = 0.1 * i - 0.4;
    y_future[i] = y_next[i] + 0.05;
  }
  const JointVector out = preshape(model, cfg, q, y_next, y_future);
  CHECK((out - y_next).cwiseAbs().maxCoeff() == 0.0);

  // A gigantic constant offset must be clamped to the position limits.
  for (auto& j : model.joints) j.b3 = 100.0;
  const JointVector clamped = preshape(model, cfg, q, y_next, y_future);
  for (int i = 0; i < kNumJoints; ++i) {
    CHECK(clamped[i] == cfg.q_max[i]);
  }
}

TEST_CASE("preshaping cuts held-out tracking error") {
  const TrainedPipeline& pipe = trained_pipeline();
  for (int i = 0; i < kNumJoints; ++i) {
    CHECK(pipe.set.joints[static_cast<size_t>(i)].size() >= 1400);
  }

  // Held-out protocol: displacements below the training bounds over 1 s.
  JointVector dq_bound;
  dq_bound << 0.8, 0.8, 0.8, 1.1, 1.1, 1.1, 0.2, 0.2;
  Rng rng(derive_seed(99, 0, 0));
  JointVector agg_off = JointVector::Zero();
  JointVector agg_on = JointVector::Zero();
  double worst_ratio = 0.0;
  int evaluated = 0;
  for (int c = 0; c < 6; ++c) {
    JointVector dq, qs;
    for (int i = 0; i < kNumJoints; ++i) {
      const double mag = rng.uniform(0.5, 1.0) * dq_bound[i];
      dq[i] = (rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * mag;
      const double lo = -0.9 * pipe.desc.q_max[i] + std::max(0.0, -dq[i]);
      const double hi = 0.9 * pipe.desc.q_max[i] - std::max(0.0, dq[i]);
      qs[i] = rng.uniform(lo, hi);
    }
    const PathResult path = plan_path(pipe.desc, qs, JointVector::Zero(),
                                      qs + dq, 0.0, 1.0, 0.05, LowLevel::qp);
    REQUIRE(path.status == optim::SolveStatus::optimal);
    const TrackResult off = track_trajectory(pipe.cfg, path.trajectory, nullptr);
    const TrackResult on = track_trajectory(pipe.cfg, path.trajectory, &pipe.model);
    ++evaluated;
    agg_off += off.rmse.cwiseAbs2();
    agg_on += on.rmse.cwiseAbs2();
    for (int i = 0; i < kNumJoints; ++i) {
      REQUIRE(off.rmse[i] > 1e-6);
      // Stability guard: the add-on never doubles any joint's error on
      // any single trajectory.
      const double ratio = on.rmse[i] / off.rmse[i];
      CHECK(ratio <= 2.0);
      worst_ratio = std::max(worst_ratio, ratio);
    }
  }
  REQUIRE(evaluated == 6);
  agg_off = (agg_off / evaluated).cwiseSqrt();
  agg_on = (agg_on / evaluated).cwiseSqrt();

  double best_reduction = -1.0;
  int best_joint = -1;
  double mean_reduction = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    const double reduction = 1.0 - agg_on[i] / agg_off[i];
    MESSAGE("joint ", i, " reduction ", 100.0 * reduction, "%");
    // Per-joint bound from the reported reduction range.
    CHECK(agg_on[i] <= 0.65 * agg_off[i]);
    mean_reduction += reduction / kNumJoints;
    if (reduction > best_reduction) {
      best_reduction = reduction;
      best_joint = i;
    }
  }
  MESSAGE("mean reduction ", 100.0 * mean_reduction, "%, worst ratio ",
          worst_ratio);
  CHECK(mean_reduction >= 0.35);
  // The slow, delay-heavy base joints benefit the most.
  CHECK(best_joint >= kNumArmJoints);
}

TEST_CASE("preshaping a constant reference at equilibrium stays benign") {
  const TrainedPipeline& pipe = trained_pipeline();
  JointTrajectory still;
  still.t0 = 0.0;
  still.dt = 0.05;
  still.q0 << 0.2, -0.9, 1.3, 0.5, -1.1, 0.4, 0.3, -0.2;
  still.qd0 = JointVector::Zero();
  still.accels.assign(20, JointVector::Zero());

  const TrackResult off = track_trajectory(pipe.cfg, still, nullptr);
  const TrackResult on = track_trajectory(pipe.cfg, still, &pipe.model);
  for (int i = 0; i < kNumJoints; ++i) {
    CHECK(off.rmse[i] == 0.0);  // true equilibrium
    // "No harm on trivial tasks": any residual correction stays below a
    // milliradian / millimeter of reference motion that is not there.
    CHECK(on.rmse[i] <= 1e-3);
  }
}

TEST_CASE("model files round-trip and validate") {
  const TrainedPipeline& pipe = trained_pipeline();
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "catchsim_model_roundtrip.json").string();
  save_model(pipe.model, path);
  const MlpModel loaded = load_model(path);
  Rng rng(derive_seed(20260824, 5, 8));
  for (int i = 0; i < kNumJoints; ++i) {
    const JointMlp& a = pipe.model.joints[static_cast<size_t>(i)];
    const JointMlp& b = loaded.joints[static_cast<size_t>(i)];
    for (int k = 0; k < 20; ++k) {
      const double x1 = rng.uniform(-0.5, 0.5);
      const double x2 = rng.uniform(-0.5, 0.5);
      CHECK(a.forward(x1, x2) == b.forward(x1, x2));
    }
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), IoError);
  const std::string bad = (dir / "catchsim_model_bad.json").string();
  {
    std::ofstream f(bad);
    f << "{not json";
  }
  CHECK_THROWS_AS(load_model(bad), ConfigError);
  {
    std::ofstream f(bad);
    f << R"({"schema_version": 9, "architecture": [2,10,10,1], "joints": []})";
  }
  CHECK_THROWS_AS(load_model(bad), ConfigError);
  {
    std::ofstream f(bad);
    f << R"({"schema_version": 1, "architecture": [2,9,9,1], "joints": []})";
  }
  CHECK_THROWS_AS(load_model(bad), ConfigError);
  std::filesystem::remove(bad);
}

TEST_CASE("plant configuration validation rejects inconsistencies") {
  const PlantConfig good = PlantConfig::defaults(default_description());
  CHECK_NOTHROW(good.validate());

  PlantConfig bad = good;
  bad.tau[3] = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = good;
  bad.kp[0] = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = good;
  bad.delay_steps[5] = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = good;
  bad.relative_degree[6] = 10;  // inconsistent with delay 13
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = good;
  bad.control_dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

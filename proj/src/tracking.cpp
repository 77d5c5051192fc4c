#include "catchsim/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <random>
#include <sstream>

#include "catchsim/rng.hpp"

namespace catchsim {

namespace {

using nlohmann::json;

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// Deterministic Fisher-Yates: index choice is a plain modulo on the raw
// engine output, so the permutation depends only on the seed, never on
// library-specific distribution internals.
void shuffle_indices(std::vector<int>& idx, std::mt19937_64& engine) {
  for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
    const int j = static_cast<int>(engine() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
}

struct ForwardPass {
  Eigen::Vector2d x;
  Eigen::VectorXd z1, h1, z2, h2;
  double out = 0.0;
};

ForwardPass forward_normalized(const JointMlp& net, double x1, double x2) {
  ForwardPass f;
  f.x << x1, x2;
  f.z1 = net.w1 * f.x + net.b1;
  f.h1 = f.z1.cwiseMax(0.0);
  f.z2 = net.w2 * f.h1 + net.b2;
  f.h2 = f.z2.cwiseMax(0.0);
  f.out = (net.w3 * f.h2)(0) + net.b3;
  return f;
}

// All trainable parameters in a fixed order, so the optimizer state lines
// up across calls.
std::vector<std::pair<double*, int>> param_views(JointMlp& net) {
  return {{net.w1.data(), static_cast<int>(net.w1.size())},
          {net.b1.data(), static_cast<int>(net.b1.size())},
          {net.w2.data(), static_cast<int>(net.w2.size())},
          {net.b2.data(), static_cast<int>(net.b2.size())},
          {net.w3.data(), static_cast<int>(net.w3.size())},
          {&net.b3, 1}};
}

std::vector<std::pair<const double*, int>> grad_views(
    const detail::MlpGradients& g) {
  return {{g.w1.data(), static_cast<int>(g.w1.size())},
          {g.b1.data(), static_cast<int>(g.b1.size())},
          {g.w2.data(), static_cast<int>(g.w2.size())},
          {g.b2.data(), static_cast<int>(g.b2.size())},
          {g.w3.data(), static_cast<int>(g.w3.size())},
          {&g.b3, 1}};
}

double mse_normalized(const JointMlp& net,
                      const std::vector<Eigen::Vector3d>& samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) {
    const double e = forward_normalized(net, s[0], s[1]).out - s[2];
    sum += e * e;
  }
  return sum / static_cast<double>(samples.size());
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows,
                                 Eigen::Index cols, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw ConfigError(std::string("model field has wrong shape: ") + name);
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(std::string("model field has wrong shape: ") + name);
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = row[static_cast<size_t>(c)].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, Eigen::Index n,
                                 const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw ConfigError(std::string("model field has wrong shape: ") + name);
  }
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = j[static_cast<size_t>(i)].get<double>();
  return v;
}

}  // namespace

PlantConfig PlantConfig::defaults(const RobotDescription& desc) {
  PlantConfig cfg;
  for (int i = 0; i < kNumJoints; ++i) {
    const bool arm = i < kNumArmJoints;
    cfg.kp[i] = arm ? 18.0 : 14.0;
    cfg.kd[i] = arm ? 0.2 : 0.1;
    cfg.tau[i] = arm ? 0.06 : 0.025;
    cfg.delay_steps[static_cast<size_t>(i)] = arm ? 7 : 13;
    cfg.relative_degree[static_cast<size_t>(i)] = arm ? 8 : 14;
  }
  cfg.q_max = desc.q_max;
  cfg.v_max = desc.v_max;
  cfg.a_max = desc.a_max;
  return cfg;
}

void PlantConfig::validate() const {
  if (!(control_dt > 0.0)) throw ConfigError("plant control step must be positive");
  for (int i = 0; i < kNumJoints; ++i) {
    if (!(tau[i] > 0.0)) throw ConfigError("plant lag time constant must be positive");
    if (!(kp[i] > 0.0)) throw ConfigError("plant position gain must be positive");
    if (kd[i] < 0.0) throw ConfigError("plant damping gain must be non-negative");
    const int d = delay_steps[static_cast<size_t>(i)];
    if (d < 0) throw ConfigError("plant transport delay must be non-negative");
    if (relative_degree[static_cast<size_t>(i)] != d + 1) {
      throw ConfigError(
          "declared relative degree must equal transport delay + 1");
    }
    if (!(q_max[i] > 0.0 && v_max[i] > 0.0 && a_max[i] > 0.0)) {
      throw ConfigError("plant actuation limits must be positive");
    }
  }
}

PlantState init_plant(const PlantConfig& cfg, const JointVector& q0) {
  cfg.validate();
  PlantState st;
  st.q = q0;
  st.qd = JointVector::Zero();
  for (int i = 0; i < kNumJoints; ++i) {
    st.pending[static_cast<size_t>(i)].assign(
        static_cast<size_t>(cfg.delay_steps[static_cast<size_t>(i)]), q0[i]);
  }
  return st;
}

JointVector plant_step(const PlantConfig& cfg, PlantState& state,
                       const JointVector& y_ref) {
  const double dt = cfg.control_dt;
  for (int i = 0; i < kNumJoints; ++i) {
    auto& line = state.pending[static_cast<size_t>(i)];
    line.push_back(y_ref[i]);
    const double y_eff = line.front();
    line.pop_front();

    double v_cmd = cfg.kp[i] * (y_eff - state.q[i]) - cfg.kd[i] * state.qd[i];
    v_cmd = clip(v_cmd, -cfg.v_max[i], cfg.v_max[i]);
    double accel = (v_cmd - state.qd[i]) / cfg.tau[i];
    accel = clip(accel, -cfg.a_max[i], cfg.a_max[i]);
    state.qd[i] += accel * dt;
    state.q[i] += state.qd[i] * dt;
  }
  return state.q;
}

int measure_relative_degree(const PlantConfig& cfg, int joint) {
  if (joint < 0 || joint >= kNumJoints) throw ConfigError("joint index out of range");
  PlantState st = init_plant(cfg, JointVector::Zero());
  JointVector y = JointVector::Zero();
  y[joint] = 0.1;
  for (int k = 1; k <= 1000; ++k) {
    const JointVector q = plant_step(cfg, st, y);
    if (std::abs(q[joint]) > 1e-12) return k;
  }
  throw ConfigError("reference step never reached the output");
}

TrainingSet extract_pairs(const std::vector<JointVector>& applied,
                          const std::vector<JointVector>& measured,
                          const std::array<int, kNumJoints>& relative_degree) {
  if (applied.size() != measured.size()) {
    throw ConfigError("applied/measured streams must have equal length");
  }
  TrainingSet set;
  const int n = static_cast<int>(applied.size());
  for (int i = 0; i < kNumJoints; ++i) {
    const int r = relative_degree[static_cast<size_t>(i)];
    if (r < 1) throw ConfigError("relative degree must be at least 1");
    for (int k = 0; k + r < n; ++k) {
      TrainingPair p;
      p.state_offset = measured[static_cast<size_t>(k)][i] -
                       measured[static_cast<size_t>(k + 1)][i];
      p.future_offset = measured[static_cast<size_t>(k + r)][i] -
                        measured[static_cast<size_t>(k + 1)][i];
      p.target = applied[static_cast<size_t>(k + 1)][i] -
                 measured[static_cast<size_t>(k + 1)][i];
      set.joints[static_cast<size_t>(i)].push_back(p);
    }
  }
  return set;
}

DatasetOptions::DatasetOptions() {
  max_displacement << 1.36, 1.36, 1.36, 1.75, 1.75, 2.53, 0.76, 0.76;
  anchor_jitter.setConstant(0.3);
}

TrainingSet collect_dataset(const RobotDescription& desc,
                            const PlantConfig& cfg,
                            const DatasetOptions& opts) {
  cfg.validate();
  if (opts.min_pairs_per_joint <= 0 || opts.durations.empty()) {
    throw ConfigError("dataset options need a positive pair quota and durations");
  }
  TrainingSet set;
  Rng rng(derive_seed(opts.seed, 0, 42));
  size_t duration_idx = 0;

  // The quota counts pairs extracted from recordings; re-anchored copies
  // are augmentation on top of it.
  std::array<size_t, kNumJoints> extracted{};
  auto pairs_short = [&]() {
    size_t m = std::numeric_limits<size_t>::max();
    for (size_t c : extracted) m = std::min(m, c);
    return m < static_cast<size_t>(opts.min_pairs_per_joint);
  };

  while (pairs_short()) {
    // Rest-to-rest displacement within the configured bounds, with both
    // endpoints inside 95% of the position limits.
    JointVector dq, qs;
    for (int i = 0; i < kNumJoints; ++i) {
      dq[i] = rng.uniform(-opts.max_displacement[i], opts.max_displacement[i]);
      const double lo = -0.95 * desc.q_max[i] + std::max(0.0, -dq[i]);
      const double hi = 0.95 * desc.q_max[i] - std::max(0.0, dq[i]);
      qs[i] = rng.uniform(lo, hi);
    }
    const double duration = opts.durations[duration_idx % opts.durations.size()];
    ++duration_idx;

    const PathResult path =
        plan_path(desc, qs, JointVector::Zero(), qs + dq, 0.0, duration,
                  opts.waypoint_dt, LowLevel::qp);
    if (path.status != optim::SolveStatus::optimal) {
      throw ConfigError("dataset trajectory generator produced an infeasible instance");
    }

    // Open-loop replay on the plant; half a second of settling keeps the
    // deceleration-to-rest segment in the dataset.
    const double horizon = duration + 0.5;
    const int steps = static_cast<int>(std::ceil(horizon / cfg.control_dt));
    PlantState st = init_plant(cfg, qs);
    std::vector<JointVector> applied, measured;
    applied.reserve(static_cast<size_t>(steps) + 1);
    measured.reserve(static_cast<size_t>(steps) + 1);
    applied.push_back(qs);
    measured.push_back(qs);
    for (int k = 1; k <= steps; ++k) {
      const JointVector y = path.trajectory.at(k * cfg.control_dt).q;
      applied.push_back(y);
      measured.push_back(plant_step(cfg, st, y));
    }

    const TrainingSet batch = extract_pairs(applied, measured, cfg.relative_degree);
    for (int i = 0; i < kNumJoints; ++i) {
      auto& dst = set.joints[static_cast<size_t>(i)];
      extracted[static_cast<size_t>(i)] += batch.joints[static_cast<size_t>(i)].size();
      for (const TrainingPair& p : batch.joints[static_cast<size_t>(i)]) {
        dst.push_back(p);
        for (int c = 0; c < opts.jitter_copies; ++c) {
          const double shift = rng.uniform(-opts.anchor_jitter[i], opts.anchor_jitter[i]);
          dst.push_back({p.state_offset - shift, p.future_offset - shift,
                         p.target - shift});
        }
      }
    }
  }
  return set;
}

void save_dataset(const TrainingSet& set, const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  out << "joint,state_offset,future_offset,target\n";
  for (int i = 0; i < kNumJoints; ++i) {
    for (const TrainingPair& p : set.joints[static_cast<size_t>(i)]) {
      out << i << ',' << p.state_offset << ',' << p.future_offset << ','
          << p.target << '\n';
    }
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write dataset file: " + path);
  f << out.str();
}

TrainingSet load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read dataset file: " + path);
  std::string line;
  if (!std::getline(f, line) ||
      line != "joint,state_offset,future_offset,target") {
    throw ConfigError("dataset file is missing its schema header: " + path);
  }
  TrainingSet set;
  size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    int joint = -1;
    TrainingPair p;
    try {
      std::getline(row, cell, ',');
      joint = std::stoi(cell);
      std::getline(row, cell, ',');
      p.state_offset = std::stod(cell);
      std::getline(row, cell, ',');
      p.future_offset = std::stod(cell);
      std::getline(row, cell, ',');
      p.target = std::stod(cell);
    } catch (const std::exception&) {
      throw ConfigError("malformed dataset row " + std::to_string(line_no) +
                        " in " + path);
    }
    if (joint < 0 || joint >= kNumJoints) {
      throw ConfigError("dataset row " + std::to_string(line_no) +
                        " has an out-of-range joint index");
    }
    set.joints[static_cast<size_t>(joint)].push_back(p);
  }
  return set;
}

double JointMlp::forward(double state_offset, double future_offset) const {
  const double sx = in_std[0] > 0.0 ? in_std[0] : 1.0;
  const double sy = in_std[1] > 0.0 ? in_std[1] : 1.0;
  const ForwardPass f = forward_normalized(*this, (state_offset - in_mean[0]) / sx,
                                           (future_offset - in_mean[1]) / sy);
  return f.out * out_std + out_mean;
}

namespace detail {

double mlp_loss_and_grad(const JointMlp& net,
                         const std::vector<Eigen::Vector3d>& samples,
                         MlpGradients* grads) {
  if (grads != nullptr) {
    grads->w1 = Eigen::MatrixXd::Zero(net.w1.rows(), net.w1.cols());
    grads->b1 = Eigen::VectorXd::Zero(net.b1.size());
    grads->w2 = Eigen::MatrixXd::Zero(net.w2.rows(), net.w2.cols());
    grads->b2 = Eigen::VectorXd::Zero(net.b2.size());
    grads->w3 = Eigen::MatrixXd::Zero(net.w3.rows(), net.w3.cols());
    grads->b3 = 0.0;
  }
  if (samples.empty()) return 0.0;

  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double loss = 0.0;
  for (const auto& s : samples) {
    const ForwardPass f = forward_normalized(net, s[0], s[1]);
    const double err = f.out - s[2];
    loss += err * err * inv_n;
    if (grads == nullptr) continue;

    const double dout = 2.0 * err * inv_n;
    grads->w3 += dout * f.h2.transpose();
    grads->b3 += dout;
    Eigen::VectorXd dh2 = net.w3.transpose() * dout;
    Eigen::VectorXd dz2 =
        dh2.cwiseProduct((f.z2.array() > 0.0).cast<double>().matrix());
    grads->w2 += dz2 * f.h1.transpose();
    grads->b2 += dz2;
    Eigen::VectorXd dh1 = net.w2.transpose() * dz2;
    Eigen::VectorXd dz1 =
        dh1.cwiseProduct((f.z1.array() > 0.0).cast<double>().matrix());
    grads->w1 += dz1 * f.x.transpose();
    grads->b1 += dz1;
  }
  return loss;
}

}  // namespace detail

JointMlp train_joint(const std::vector<TrainingPair>& pairs,
                     const TrainOptions& opts, JointCurves* curves) {
  if (pairs.size() < 10) throw ConfigError("too few training pairs");
  if (opts.epochs <= 0 || opts.batch <= 0 || !(opts.learning_rate > 0.0) ||
      !(opts.val_fraction > 0.0 && opts.val_fraction < 1.0)) {
    throw ConfigError("invalid training options");
  }

  // Seeded shuffle, then an 80/20-style split.
  std::vector<int> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::mt19937_64 engine(derive_seed(opts.seed, 0, 101));
  shuffle_indices(order, engine);
  const int n_val = std::max(
      1, static_cast<int>(std::lround(opts.val_fraction *
                                      static_cast<double>(pairs.size()))));
  const int n_train = static_cast<int>(pairs.size()) - n_val;
  if (n_train < 1) throw ConfigError("too few training pairs after the split");

  // Normalization constants from the training split only.
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  double t_mean = 0.0;
  for (int i = 0; i < n_train; ++i) {
    const TrainingPair& p = pairs[static_cast<size_t>(order[static_cast<size_t>(i)])];
    mean[0] += p.state_offset;
    mean[1] += p.future_offset;
    t_mean += p.target;
  }
  mean /= n_train;
  t_mean /= n_train;
  Eigen::Vector2d var = Eigen::Vector2d::Zero();
  double t_var = 0.0;
  for (int i = 0; i < n_train; ++i) {
    const TrainingPair& p = pairs[static_cast<size_t>(order[static_cast<size_t>(i)])];
    var[0] += (p.state_offset - mean[0]) * (p.state_offset - mean[0]);
    var[1] += (p.future_offset - mean[1]) * (p.future_offset - mean[1]);
    t_var += (p.target - t_mean) * (p.target - t_mean);
  }
  var /= n_train;
  t_var /= n_train;

  JointMlp net;
  net.in_mean = mean;
  net.in_std << std::sqrt(var[0]), std::sqrt(var[1]);
  if (net.in_std[0] < 1e-12) net.in_std[0] = 1.0;
  if (net.in_std[1] < 1e-12) net.in_std[1] = 1.0;
  net.out_mean = t_mean;
  net.out_std = std::sqrt(t_var);
  if (net.out_std < 1e-12) net.out_std = 1.0;

  auto normalized = [&](int idx) {
    const TrainingPair& p = pairs[static_cast<size_t>(idx)];
    return Eigen::Vector3d((p.state_offset - net.in_mean[0]) / net.in_std[0],
                           (p.future_offset - net.in_mean[1]) / net.in_std[1],
                           (p.target - net.out_mean) / net.out_std);
  };
  std::vector<Eigen::Vector3d> train_samples, val_samples;
  for (int i = 0; i < n_train; ++i)
    train_samples.push_back(normalized(order[static_cast<size_t>(i)]));
  for (int i = n_train; i < static_cast<int>(pairs.size()); ++i)
    val_samples.push_back(normalized(order[static_cast<size_t>(i)]));

  // Seeded initialization: normal fan-in-scaled weights plus uniformly
  // spread hidden biases, so the rectifier kinks start distributed across
  // the normalized input range instead of stacked at the origin.
  Rng init_rng(derive_seed(opts.seed, 1, 13));
  auto he = [&](Eigen::MatrixXd& m, int fan_in) {
    const double s = std::sqrt(2.0 / fan_in);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = init_rng.normal(0.0, s);
  };
  auto spread = [&](Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = init_rng.uniform(-0.5, 0.5);
  };
  net.w1.resize(10, 2);
  net.b1.resize(10);
  net.w2.resize(10, 10);
  net.b2.resize(10);
  net.w3.resize(1, 10);
  net.b3 = 0.0;
  he(net.w1, 2);
  he(net.w2, 10);
  he(net.w3, 10);
  spread(net.b1);
  spread(net.b2);

  // Adaptive-moment optimizer state, flattened over all parameters.
  auto params = param_views(net);
  int total = 0;
  for (const auto& [ptr, len] : params) total += len;
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(total);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(total);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  const double initial_val = mse_normalized(net, val_samples);
  std::vector<int> train_order(train_samples.size());
  for (size_t i = 0; i < train_order.size(); ++i) train_order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    shuffle_indices(train_order, engine);
    for (size_t start = 0; start < train_order.size();
         start += static_cast<size_t>(opts.batch)) {
      std::vector<Eigen::Vector3d> batch;
      const size_t end =
          std::min(train_order.size(), start + static_cast<size_t>(opts.batch));
      for (size_t i = start; i < end; ++i)
        batch.push_back(train_samples[static_cast<size_t>(train_order[i])]);

      detail::MlpGradients grads;
      detail::mlp_loss_and_grad(net, batch, &grads);
      const auto gviews = grad_views(grads);

      ++step;
      int offset = 0;
      for (size_t p = 0; p < params.size(); ++p) {
        double* theta = params[p].first;
        const double* g = gviews[p].first;
        for (int i = 0; i < params[p].second; ++i) {
          const int k = offset + i;
          m1[k] = beta1 * m1[k] + (1.0 - beta1) * g[i];
          m2[k] = beta2 * m2[k] + (1.0 - beta2) * g[i] * g[i];
          const double mhat = m1[k] / (1.0 - std::pow(beta1, step));
          const double vhat = m2[k] / (1.0 - std::pow(beta2, step));
          theta[i] -= opts.learning_rate * mhat / (std::sqrt(vhat) + eps);
        }
        offset += params[p].second;
      }
    }

    const double train_mse = mse_normalized(net, train_samples);
    const double val_mse = mse_normalized(net, val_samples);
    if (curves != nullptr) {
      curves->train_mse.push_back(train_mse);
      curves->val_mse.push_back(val_mse);
    }
    if (val_mse > 10.0 * std::max(initial_val, 1e-12)) {
      throw TrainingError("training diverged: validation MSE " +
                          std::to_string(val_mse) + " exceeds 10x initial " +
                          std::to_string(initial_val) + " at epoch " +
                          std::to_string(epoch + 1));
    }
  }
  return net;
}

MlpModel train(const TrainingSet& set, const TrainOptions& opts,
               TrainReport* report) {
  MlpModel model;
  for (int i = 0; i < kNumJoints; ++i) {
    TrainOptions per = opts;
    per.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(i), 7);
    JointCurves curves;
    model.joints[static_cast<size_t>(i)] = train_joint(
        set.joints[static_cast<size_t>(i)], per, report ? &curves : nullptr);
    if (report != nullptr) report->joints[static_cast<size_t>(i)] = std::move(curves);
  }
  return model;
}

namespace {

// Smooth single-joint probe used for closed-loop model selection: a
// minimum-jerk-style rest-to-rest move sampled into a waypoint trajectory.
JointTrajectory probe_trajectory(const PlantConfig& cfg, int joint) {
  const double duration = 1.0;
  const double dt = 0.05;
  const double delta = 0.6 * std::min(1.0, cfg.q_max[joint]);
  JointTrajectory traj;
  traj.t0 = 0.0;
  traj.dt = dt;
  traj.q0 = JointVector::Zero();
  traj.qd0 = JointVector::Zero();
  const int steps = static_cast<int>(std::round(duration / dt));
  for (int k = 0; k < steps; ++k) {
    // Acceleration of delta * (10 s^3 - 15 s^4 + 6 s^5), s = t / T.
    const double s = (k + 0.5) / steps;
    const double accel =
        delta * (60.0 * s - 180.0 * s * s + 120.0 * s * s * s) /
        (duration * duration);
    JointVector u = JointVector::Zero();
    u[joint] = accel;
    traj.accels.push_back(u);
  }
  return traj;
}

double probe_reduction(const PlantConfig& cfg, int joint, const JointMlp& net) {
  const JointTrajectory traj = probe_trajectory(cfg, joint);
  // Zero networks everywhere else: exact pass-through on other joints.
  MlpModel candidate;
  for (int i = 0; i < kNumJoints; ++i) {
    JointMlp& z = candidate.joints[static_cast<size_t>(i)];
    z.w1 = Eigen::MatrixXd::Zero(10, 2);
    z.b1 = Eigen::VectorXd::Zero(10);
    z.w2 = Eigen::MatrixXd::Zero(10, 10);
    z.b2 = Eigen::VectorXd::Zero(10);
    z.w3 = Eigen::MatrixXd::Zero(1, 10);
  }
  candidate.joints[static_cast<size_t>(joint)] = net;
  const TrackResult off = track_trajectory(cfg, traj, nullptr);
  const TrackResult on = track_trajectory(cfg, traj, &candidate);
  if (off.rmse[joint] <= 1e-12) return 0.0;
  return 1.0 - on.rmse[joint] / off.rmse[joint];
}

}  // namespace

MlpModel train_for_plant(const TrainingSet& set, const PlantConfig& cfg,
                         const TrainOptions& opts, TrainReport* report) {
  cfg.validate();
  MlpModel model;
  constexpr int kMaxCandidates = 6;
  for (int i = 0; i < kNumJoints; ++i) {
    JointMlp best;
    JointCurves best_curves;
    double best_reduction = -std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < kMaxCandidates; ++attempt) {
      TrainOptions per = opts;
      per.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(i),
                             7 + static_cast<std::uint64_t>(attempt));
      JointCurves curves;
      JointMlp net = train_joint(set.joints[static_cast<size_t>(i)], per,
                                 report ? &curves : nullptr);
      const double reduction = probe_reduction(cfg, i, net);
      if (reduction > best_reduction) {
        best_reduction = reduction;
        best = std::move(net);
        best_curves = std::move(curves);
      }
      if (best_reduction >= 0.5) break;
    }
    model.joints[static_cast<size_t>(i)] = std::move(best);
    if (report != nullptr) {
      report->joints[static_cast<size_t>(i)] = std::move(best_curves);
    }
  }
  return model;
}

void save_model(const MlpModel& model, const std::string& path) {
  json j;
  j["schema_version"] = 1;
  j["architecture"] = {2, 10, 10, 1};
  json joints = json::array();
  for (const JointMlp& net : model.joints) {
    json n;
    n["w1"] = matrix_to_json(net.w1);
    n["b1"] = std::vector<double>(net.b1.data(), net.b1.data() + net.b1.size());
    n["w2"] = matrix_to_json(net.w2);
    n["b2"] = std::vector<double>(net.b2.data(), net.b2.data() + net.b2.size());
    n["w3"] = matrix_to_json(net.w3);
    n["b3"] = net.b3;
    n["in_mean"] = {net.in_mean[0], net.in_mean[1]};
    n["in_std"] = {net.in_std[0], net.in_std[1]};
    n["out_mean"] = net.out_mean;
    n["out_std"] = net.out_std;
    joints.push_back(std::move(n));
  }
  j["joints"] = std::move(joints);
  std::ofstream f(path);
  if (!f) throw IoError("cannot write model file: " + path);
  f << j.dump(2) << '\n';
}

MlpModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read model file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("model file is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (j.at("schema_version").get<int>() != 1) {
      throw ConfigError("unsupported model schema version");
    }
    const std::vector<int> arch = j.at("architecture").get<std::vector<int>>();
    if (arch != std::vector<int>{2, 10, 10, 1}) {
      throw ConfigError("unsupported network architecture");
    }
    const json& joints = j.at("joints");
    if (!joints.is_array() || joints.size() != kNumJoints) {
      throw ConfigError("model file must contain one network per joint");
    }
    MlpModel model;
    for (int i = 0; i < kNumJoints; ++i) {
      const json& n = joints[static_cast<size_t>(i)];
      JointMlp& net = model.joints[static_cast<size_t>(i)];
      net.w1 = matrix_from_json(n.at("w1"), 10, 2, "w1");
      net.b1 = vector_from_json(n.at("b1"), 10, "b1");
      net.w2 = matrix_from_json(n.at("w2"), 10, 10, "w2");
      net.b2 = vector_from_json(n.at("b2"), 10, "b2");
      net.w3 = matrix_from_json(n.at("w3"), 1, 10, "w3");
      net.b3 = n.at("b3").get<double>();
      net.in_mean << n.at("in_mean")[0].get<double>(), n.at("in_mean")[1].get<double>();
      net.in_std << n.at("in_std")[0].get<double>(), n.at("in_std")[1].get<double>();
      net.out_mean = n.at("out_mean").get<double>();
      net.out_std = n.at("out_std").get<double>();
      if (!net.w1.allFinite() || !net.w2.allFinite() || !net.w3.allFinite() ||
          !net.b1.allFinite() || !net.b2.allFinite() || !std::isfinite(net.b3)) {
        throw ConfigError("model parameters must be finite");
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw ConfigError("model file is missing fields: " + std::string(e.what()));
  }
}

double preshape_joint(const JointMlp& net, double q_now, double y_next,
                      double y_future) {
  return y_next + net.forward(q_now - y_next, y_future - y_next);
}

JointVector preshape(const MlpModel& model, const PlantConfig& cfg,
                     const JointVector& q_now, const JointVector& y_next,
                     const JointVector& y_future) {
  JointVector out;
  for (int i = 0; i < kNumJoints; ++i) {
    out[i] = clip(preshape_joint(model.joints[static_cast<size_t>(i)], q_now[i],
                                 y_next[i], y_future[i]),
                  -cfg.q_max[i], cfg.q_max[i]);
  }
  return out;
}

TrackResult track_trajectory(const PlantConfig& cfg, const JointTrajectory& traj,
                             const MlpModel* model, double settle_time) {
  cfg.validate();
  const double t0 = traj.t0;
  const double horizon = traj.end_time() - t0 + std::max(0.0, settle_time);
  const int steps = static_cast<int>(std::ceil(horizon / cfg.control_dt - 1e-9));

  TrackResult res;
  PlantState st = init_plant(cfg, traj.at(t0).q);
  JointVector q_meas = st.q;
  JointVector sq_sum = JointVector::Zero();
  for (int k = 1; k <= steps; ++k) {
    const double t_next = t0 + k * cfg.control_dt;
    const JointVector y_next = traj.at(t_next).q;
    JointVector command = y_next;
    if (model != nullptr) {
      JointVector y_future;
      for (int i = 0; i < kNumJoints; ++i) {
        const int r = cfg.relative_degree[static_cast<size_t>(i)];
        y_future[i] = traj.at(t_next + (r - 1) * cfg.control_dt).q[i];
      }
      command = preshape(*model, cfg, q_meas, y_next, y_future);
    }
    q_meas = plant_step(cfg, st, command);
    res.times.push_back(t_next);
    res.reference.push_back(y_next);
    res.measured.push_back(q_meas);
    sq_sum += (y_next - q_meas).cwiseAbs2();
  }
  if (steps > 0) res.rmse = (sq_sum / steps).cwiseSqrt();
  return res;
}

}  // namespace catchsim

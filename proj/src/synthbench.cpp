#include "d4/synthbench.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "d4/d4.hpp"
#include "d4/errors.hpp"
#include "d4/random.hpp"

namespace d4 {

namespace {

enum Stream : std::uint64_t { kDirections = 1, kLatent = 2, kNoise = 3, kFlips = 4 };

double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

double cosine(const Vector& a, const Vector& b) { return a.dot(b) / (a.norm() * b.norm()); }

}  // namespace

void SynthConfig::validate() const {
  if (n < 2) throw ConfigError("synthetic n must be at least 2");
  if (p < 2) throw ConfigError("synthetic p must be at least 2");
  if (!(std::abs(corr) < 1.0)) throw ConfigError("correlation must lie strictly inside (-1, 1)");
  if (!(std1 > 0.0) || !(std2 > 0.0)) throw ConfigError("standard deviations must be positive");
  if (!(flip_prob >= 0.0 && flip_prob < 0.5)) {
    throw ConfigError("flip probability must lie in [0, 0.5)");
  }
}

void draw_ground_truth(Index p, std::uint64_t seed, Vector& w1, Vector& w2) {
  if (p < 2) throw ConfigError("need at least two dimensions for two orthogonal directions");
  Rng rng = make_rng(seed, kDirections);
  std::normal_distribution<double> normal;
  Matrix g(p, 2);
  for (Index j = 0; j < 2; ++j) {
    for (Index i = 0; i < p; ++i) g(i, j) = normal(rng);
  }
  w1 = normalize(g.col(0));
  Vector r = g.col(1) - w1.dot(g.col(1)) * w1;
  r -= w1.dot(r) * w1;
  w2 = normalize(r);
}

SynthDataset generate(const SynthConfig& config, const Vector& w_star_1, const Vector& w_star_2) {
  config.validate();
  if (w_star_1.size() != config.p || w_star_2.size() != config.p) {
    throw DimensionMismatch("ground-truth directions do not match p");
  }
  const Index n = config.n;
  const Index p = config.p;

  SynthDataset out;
  out.w_star_1 = w_star_1;
  out.w_star_2 = w_star_2;

  // Isotropic noise confined to the complement of span{w1, w2}.
  out.X.resize(n, p);
  {
    Rng rng = make_rng(config.seed, kNoise);
    std::normal_distribution<double> normal;
    double* data = out.X.data();
    for (Index k = 0; k < n * p; ++k) data[k] = normal(rng);
  }
  Matrix W(p, 2);
  W.col(0) = w_star_1;
  W.col(1) = w_star_2;
  out.X.noalias() -= (out.X * W) * W.transpose();

  // Latent pair with the requested stds and correlation.
  Vector t1(n), t2(n);
  {
    Rng rng = make_rng(config.seed, kLatent);
    std::normal_distribution<double> normal;
    const double c = config.corr;
    const double s = std::sqrt(1.0 - c * c);
    for (Index i = 0; i < n; ++i) {
      const double z1 = normal(rng);
      const double z2 = normal(rng);
      t1[i] = config.std1 * z1;
      t2[i] = config.std2 * (c * z1 + s * z2);
    }
  }
  out.X.noalias() += t1 * w_star_1.transpose();
  out.X.noalias() += t2 * w_star_2.transpose();

  const Vector proj1 = out.X * w_star_1;
  const Vector proj2 = out.X * w_star_2;
  out.y1.resize(n);
  out.y2.resize(n);
  Rng rng = make_rng(config.seed, kFlips);
  std::bernoulli_distribution flip(config.flip_prob);
  for (Index i = 0; i < n; ++i) {
    const double e1 = flip(rng) ? -1.0 : 1.0;
    const double e2 = flip(rng) ? -1.0 : 1.0;
    out.y1[i] = e1 * sign_of(proj1[i]);
    out.y2[i] = e2 * sign_of(proj2[i]);
  }
  return out;
}

SynthDataset generate(const SynthConfig& config) {
  config.validate();
  Vector w1, w2;
  draw_ground_truth(config.p, config.seed, w1, w2);
  return generate(config, w1, w2);
}

const ExperimentRow& ExperimentTable::at(int iteration, const std::string& target) const {
  for (const auto& row : rows) {
    if (row.iteration == iteration && row.target == target) return row;
  }
  throw ConfigError("no experiment row for iteration " + std::to_string(iteration) + ", " +
                    target);
}

ExperimentTable run_experiment(const SynthConfig& train_cfg, const SynthConfig& test_cfg,
                               const LearnerSpec& learner) {
  train_cfg.validate();
  test_cfg.validate();
  if (train_cfg.p != test_cfg.p) throw DimensionMismatch("train and test p differ");

  Vector w1, w2;
  draw_ground_truth(train_cfg.p, train_cfg.seed, w1, w2);
  SynthDataset train = generate(train_cfg, w1, w2);
  SynthDataset test = generate(test_cfg, w1, w2);

  ExperimentTable table;
  auto record = [&](int iteration, const char* name, const Matrix& Xtr, const Vector& ytr,
                    const Matrix& Xte, const Vector& yte) {
    const LinearModel m = fit(Xtr, ytr, Task::binary, learner);
    ExperimentRow row;
    row.iteration = iteration;
    row.target = name;
    row.train_acc = accuracy(classify(predict_scores(Xtr, m)), ytr);
    row.test_acc = accuracy(classify(predict_scores(Xte, m)), yte);
    row.load_w1 = cosine(m.weights, w1);
    row.load_w2 = cosine(m.weights, w2);
    table.rows.push_back(row);
  };

  record(0, "y1", train.X, train.y1, test.X, test.y1);
  record(0, "y2", train.X, train.y2, test.X, test.y2);

  D4Config config;
  config.learner = learner;
  config.max_iterations = 1;
  const D4Model model = d4_fit(train.X, train.y2, Task::binary, config);
  if (model.size() != 1) {
    throw NumericalError("removal step for y2 stopped early: " + model.message);
  }
  table.removed_direction = model.basis.vector(0);

  train.X = project_rows_orthogonal(train.X, model.basis);
  test.X = project_rows_orthogonal(test.X, model.basis);
  record(1, "y1", train.X, train.y1, test.X, test.y1);
  record(1, "y2", train.X, train.y2, test.X, test.y2);
  return table;
}

SynthConfig table1_train_config(std::uint64_t seed) {
  SynthConfig c;
  c.seed = derive_seed(seed, 0x7a1);
  return c;
}

SynthConfig table1_test_config(std::uint64_t seed) {
  SynthConfig c;
  c.corr = -0.9;
  c.seed = derive_seed(seed, 0x7e5);
  return c;
}

LearnerSpec table1_learner() {
  LearnerSpec spec;
  spec.kind = LearnerKind::logistic;
  spec.regularization = 1.0;
  spec.fit_intercept = true;
  return spec;
}

void write_csv(std::ostream& os, const ExperimentTable& table) {
  os << "iteration,target,train_acc,test_acc,load_w1,load_w2\n";
  char buf[256];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.6f,%.6f,%.6f,%.6f\n", r.iteration, r.target.c_str(),
                  r.train_acc, r.test_acc, r.load_w1, r.load_w2);
    os << buf;
  }
}

void write_pretty(std::ostream& os, const ExperimentTable& table) {
  os << "Iteration  Target  Train Acc  Test Acc  Load w*1  Load w*2\n";
  char buf[256];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%9d  %6s  %9.3f  %8.3f  %8.3f  %8.3f\n", r.iteration,
                  r.target.c_str(), r.train_acc, r.test_acc, r.load_w1, r.load_w2);
    os << buf;
  }
}

}  // namespace d4

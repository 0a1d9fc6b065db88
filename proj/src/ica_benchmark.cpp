#include <algorithm>
#include <array>
#include <cmath>

#include "padx/errors.hpp"
#include "padx/ica.hpp"

namespace padx::ica {

namespace {

constexpr int kProposalsPerScene = 4;
constexpr int kFeatureDim = 4;
constexpr int kClasses = 2;
constexpr double kNoise = 0.25;
constexpr double kCompanionOffset = 1.5;

struct Scene {
  ProposalSet proposals;
  Eigen::Index ambiguous = 0;  // row of the ambiguous proposal
  int label = 0;
};

// Feature layout: [companion cluster axis, distractor marker, ambiguous
// marker, companion marker]. The ambiguous proposal's distribution does not
// depend on the label; only the companion's sign on axis 0 does.
Scene make_scene(Rng& rng) {
  Scene s;
  s.label = static_cast<int>(rng.uniform_int(0, 1));
  std::array<Eigen::Index, kProposalsPerScene> slot{0, 1, 2, 3};
  for (int i = kProposalsPerScene - 1; i > 0; --i) {
    std::swap(slot[i], slot[rng.uniform_int(0, i)]);
  }
  s.proposals.features.resize(kProposalsPerScene, kFeatureDim);
  s.proposals.scores.resize(kProposalsPerScene);
  auto emit = [&](Eigen::Index row, std::array<double, kFeatureDim> mean,
                  double score) {
    for (int j = 0; j < kFeatureDim; ++j) {
      s.proposals.features(row, j) = mean[j] + kNoise * rng.normal();
    }
    s.proposals.scores[row] = score;
  };
  const double sign = s.label == 0 ? 1.0 : -1.0;
  s.ambiguous = slot[0];
  emit(slot[0], {0.0, 0.0, 1.0, 0.0}, rng.uniform(0.9, 1.0));
  emit(slot[1], {sign * kCompanionOffset, 0.0, 0.0, 1.0}, rng.uniform(0.3, 0.9));
  emit(slot[2], {0.0, 1.0, 0.0, 0.0}, rng.uniform(0.3, 0.9));
  emit(slot[3], {0.0, 1.0, 0.0, 0.0}, rng.uniform(0.3, 0.9));
  return s;
}

std::vector<Scene> make_scenes(Rng& rng, int count) {
  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) scenes.push_back(make_scene(rng));
  return scenes;
}

// Softmax cross-entropy gradient w.r.t. logits, scaled by `weight`.
Vector softmax_xent_grad(const Vector& logits, int label, double weight) {
  const Vector shifted = logits.array() - logits.maxCoeff();
  Vector p = shifted.array().exp();
  p /= p.sum();
  p[label] -= 1.0;
  return weight * p;
}

int argmax(const Vector& v) {
  Eigen::Index best = 0;
  v.maxCoeff(&best);
  return static_cast<int>(best);
}

// Row of the ambiguous proposal within the ICA output, if it was selected.
Eigen::Index selected_row(const std::vector<Eigen::Index>& selected,
                          Eigen::Index proposal) {
  auto it = std::find(selected.begin(), selected.end(), proposal);
  return it == selected.end() ? -1 : it - selected.begin();
}

struct LinearHead {
  Matrix w;
  Vector b;

  Vector logits(const Vector& f) const { return w * f + b; }
};

double train_baseline(const std::vector<Scene>& train,
                      const std::vector<Scene>& test,
                      const BenchmarkConfig& cfg, Rng& rng) {
  LinearHead head{Matrix(kClasses, kFeatureDim), Vector::Zero(kClasses)};
  const double stddev = std::sqrt(2.0 / kFeatureDim);
  for (Eigen::Index i = 0; i < head.w.size(); ++i) {
    head.w.data()[i] = stddev * rng.normal();
  }
  const double weight = 1.0 / static_cast<double>(train.size());
  for (int step = 0; step < cfg.steps; ++step) {
    Matrix gw = Matrix::Zero(kClasses, kFeatureDim);
    Vector gb = Vector::Zero(kClasses);
    for (const Scene& s : train) {
      const Vector f = s.proposals.features.row(s.ambiguous).transpose();
      const Vector g = softmax_xent_grad(head.logits(f), s.label, weight);
      gw.noalias() += g * f.transpose();
      gb += g;
    }
    head.w -= cfg.learning_rate * gw;
    head.b -= cfg.learning_rate * gb;
  }
  int correct = 0;
  for (const Scene& s : test) {
    const Vector f = s.proposals.features.row(s.ambiguous).transpose();
    correct += argmax(head.logits(f)) == s.label;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double train_ica(const std::vector<Scene>& train, const std::vector<Scene>& test,
                 const BenchmarkConfig& cfg, Rng& rng) {
  IcaParams params =
      IcaParams::init({cfg.k, kFeatureDim, kFeatureDim, kClasses}, rng);
  const double weight = 1.0 / static_cast<double>(train.size());
  for (int step = 0; step < cfg.steps; ++step) {
    IcaParams grad = IcaParams::zeros(params.dims);
    for (const Scene& s : train) {
      const IcaOutput out = ica_forward(params, s.proposals);
      const Eigen::Index row = selected_row(out.selected, s.ambiguous);
      if (row < 0) continue;
      Matrix upstream = Matrix::Zero(out.logits.rows(), out.logits.cols());
      upstream.row(row) =
          softmax_xent_grad(out.logits.row(row).transpose(), s.label, weight)
              .transpose();
      const IcaGradients g = ica_backward(params, s.proposals, upstream);
      grad.w1 += g.params.w1;
      grad.b1 += g.params.b1;
      grad.w2 += g.params.w2;
      grad.b2 += g.params.b2;
      grad.head_w += g.params.head_w;
      grad.head_b += g.params.head_b;
    }
    params.w1 -= cfg.learning_rate * grad.w1;
    params.b1 -= cfg.learning_rate * grad.b1;
    params.w2 -= cfg.learning_rate * grad.w2;
    params.b2 -= cfg.learning_rate * grad.b2;
    params.head_w -= cfg.learning_rate * grad.head_w;
    params.head_b -= cfg.learning_rate * grad.head_b;
  }
  int correct = 0;
  for (const Scene& s : test) {
    const IcaOutput out = ica_forward(params, s.proposals);
    const Eigen::Index row = selected_row(out.selected, s.ambiguous);
    if (row >= 0) correct += argmax(out.logits.row(row).transpose()) == s.label;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace

BenchmarkResult synth_cooccurrence_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.steps < 1) throw InputError("benchmark: steps must be >= 1");
  if (cfg.k < 1) throw InputError("benchmark: k must be >= 1");
  if (cfg.train_scenes < 1 || cfg.test_scenes < 1) {
    throw InputError("benchmark: scene counts must be >= 1");
  }
  Rng data_rng = Rng::derive(cfg.seed, 0);
  const auto train = make_scenes(data_rng, cfg.train_scenes);
  const auto test = make_scenes(data_rng, cfg.test_scenes);

  // Both models draw their initial weights from the same seeded stream.
  BenchmarkResult result;
  Rng baseline_rng = Rng::derive(cfg.seed, 1);
  result.baseline_accuracy = train_baseline(train, test, cfg, baseline_rng);
  Rng ica_rng = Rng::derive(cfg.seed, 1);
  result.ica_accuracy = train_ica(train, test, cfg, ica_rng);
  return result;
}

}  // namespace padx::ica

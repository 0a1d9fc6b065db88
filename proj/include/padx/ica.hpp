#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "padx/rng.hpp"

namespace padx::ica {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// N region proposals: one feature row and one confidence per proposal.
struct ProposalSet {
  Matrix features;  // N x d
  Vector scores;    // N

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

struct IcaDims {
  int k = 4;  // context proposals
  int d = 0;  // proposal feature width
  int m = 0;  // fusion width
  int c = 0;  // classes

  friend bool operator==(const IcaDims&, const IcaDims&) = default;
};

// Co-occurrence aggregator weights plus the classification head it feeds.
struct IcaParams {
  IcaDims dims;
  Matrix w1;      // m x (k*d)
  Vector b1;      // m
  Matrix w2;      // d x (d+m)
  Vector b2;      // d
  Matrix head_w;  // C x d
  Vector head_b;  // C

  static IcaParams zeros(const IcaDims& dims);
  // He-normal weights (std sqrt(2 / fan_in)), zero biases.
  static IcaParams init(const IcaDims& dims, Rng& rng);

  void check_shapes() const;
  std::size_t parameter_count() const;

  // Visits every parameter block in serialization order.
  template <typename F>
  void for_each_block(F&& f) {
    f(w1); f(b1); f(w2); f(b2); f(head_w); f(head_b);
  }
  template <typename F>
  void for_each_block(F&& f) const {
    f(w1); f(b1); f(w2); f(b2); f(head_w); f(head_b);
  }
};

struct IcaOutput {
  std::vector<Eigen::Index> selected;  // score desc, index asc
  Vector concat;        // k*d, zero-padded when N < k
  Vector fusion_pre;    // W1 concat + b1
  Vector fusion;        // relu(fusion_pre), m
  Matrix new_pre;       // rows: W2 [f_j; fusion] + b2
  Matrix new_features;  // rows: relu(new_pre), one per selected proposal
  Matrix logits;        // rows: head_W f_new + head_b
};

// Top-k by score, ties to the lower index. Returns all N when N < k.
std::vector<Eigen::Index> topk_select(const ProposalSet& ps, int k);

IcaOutput ica_forward(const IcaParams& params, const ProposalSet& ps);

struct IcaGradients {
  IcaParams params;  // same layout as the forward parameters
  Matrix features;   // N x d; rows of unselected proposals are zero
};

// Reverse-mode gradients given dLoss/dLogits (one row per selected proposal).
IcaGradients ica_backward(const IcaParams& params, const ProposalSet& ps,
                          const Matrix& upstream);

// Max relative error between ica_backward and central differences of
// L = sum of squared logits, over every parameter and feature entry.
double grad_check(const IcaParams& params, const ProposalSet& ps,
                  double eps = 1e-5);

// Smallest |pre-activation| in a forward pass; grad_check is only meaningful
// when this is comfortably larger than eps.
double min_abs_preactivation(const IcaParams& params, const ProposalSet& ps);

struct GradCheckCase {
  IcaParams params;
  ProposalSet proposals;
};

// Random parameters (normal weights and biases) and proposals for gradient
// checking, redrawn from the same stream until every pre-activation is at
// least 10 * eps away from the ReLU kink.
GradCheckCase make_gradcheck_case(const IcaDims& dims, int num_proposals,
                                  std::uint64_t seed, double eps = 1e-5);

// Flat little-endian file: "ICA1", k d m C as uint32, then W1 b1 W2 b2 head_W
// head_b as float64, matrices row-major.
void save_params(const IcaParams& params, const std::filesystem::path& path);
IcaParams load_params(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_params(const IcaParams& params);
IcaParams decode_params(const std::vector<std::uint8_t>& bytes);

struct BenchmarkConfig {
  std::uint64_t seed = 1;
  int steps = 2000;
  int k = 4;
  double learning_rate = 0.05;
  int train_scenes = 512;
  int test_scenes = 1024;
};

struct BenchmarkResult {
  double baseline_accuracy = 0.0;
  double ica_accuracy = 0.0;
};

// Synthetic co-occurrence task. Each scene has 4 proposals; the highest
// scoring one is ambiguous (its feature distribution is identical for both
// labels) and its label is carried only by which cluster a companion
// proposal comes from. Trains a per-proposal linear head and ICA + head with
// full-batch gradient descent; reports held-out accuracy on the ambiguous
// proposals.
BenchmarkResult synth_cooccurrence_benchmark(const BenchmarkConfig& cfg);

}  // namespace padx::ica

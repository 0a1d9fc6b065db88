#include "padx/ica.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "padx/errors.hpp"

namespace padx::ica {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                  const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(name) + " is " + shape(m) + ", expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void expect_size(const Vector& v, Eigen::Index n, const char* name) {
  if (v.size() != n) {
    throw DimensionError(std::string(name) + " has " +
                         std::to_string(v.size()) + " entries, expected " +
                         std::to_string(n));
  }
}

Vector relu(const Vector& x) { return x.cwiseMax(0.0); }

// Subgradient 0 at exactly 0.
Vector relu_mask(const Vector& pre) {
  return (pre.array() > 0.0).cast<double>().matrix();
}

void check_inputs(const IcaParams& params, const ProposalSet& ps) {
  params.check_shapes();
  if (ps.size() < 1) throw InputError("ica: empty proposal set");
  if (ps.scores.size() != ps.size()) {
    throw DimensionError("ica: " + std::to_string(ps.size()) +
                         " features but " + std::to_string(ps.scores.size()) +
                         " scores");
  }
  if (ps.dim() != params.dims.d) {
    throw DimensionError("ica: feature dimension " + std::to_string(ps.dim()) +
                         " does not match d=" + std::to_string(params.dims.d));
  }
}

Matrix he_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(cols));
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = stddev * rng.normal();
  }
  return m;
}

double sum_sq_logits(const IcaParams& params, const ProposalSet& ps) {
  return ica_forward(params, ps).logits.squaredNorm();
}

}  // namespace

IcaParams IcaParams::zeros(const IcaDims& dims) {
  if (dims.k < 1 || dims.d < 1 || dims.m < 1 || dims.c < 1) {
    throw DimensionError("ica: k, d, m and C must all be >= 1");
  }
  IcaParams p;
  p.dims = dims;
  p.w1 = Matrix::Zero(dims.m, dims.k * dims.d);
  p.b1 = Vector::Zero(dims.m);
  p.w2 = Matrix::Zero(dims.d, dims.d + dims.m);
  p.b2 = Vector::Zero(dims.d);
  p.head_w = Matrix::Zero(dims.c, dims.d);
  p.head_b = Vector::Zero(dims.c);
  return p;
}

IcaParams IcaParams::init(const IcaDims& dims, Rng& rng) {
  IcaParams p = zeros(dims);
  p.w1 = he_normal(p.w1.rows(), p.w1.cols(), rng);
  p.w2 = he_normal(p.w2.rows(), p.w2.cols(), rng);
  p.head_w = he_normal(p.head_w.rows(), p.head_w.cols(), rng);
  return p;
}

void IcaParams::check_shapes() const {
  const auto [k, d, m, c] = dims;
  if (k < 1 || d < 1 || m < 1 || c < 1) {
    throw DimensionError("ica: k, d, m and C must all be >= 1");
  }
  expect_shape(w1, m, static_cast<Eigen::Index>(k) * d, "W1");
  expect_size(b1, m, "b1");
  expect_shape(w2, d, d + m, "W2");
  expect_size(b2, d, "b2");
  expect_shape(head_w, c, d, "head_W");
  expect_size(head_b, c, "head_b");
}

std::size_t IcaParams::parameter_count() const {
  std::size_t n = 0;
  for_each_block([&](const auto& block) { n += block.size(); });
  return n;
}

std::vector<Eigen::Index> topk_select(const ProposalSet& ps, int k) {
  if (k < 1) throw InputError("topk_select: k must be >= 1");
  if (ps.scores.size() < 1) throw InputError("topk_select: no proposals");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(ps.scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(k));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                    order.end(), [&](Eigen::Index a, Eigen::Index b) {
                      if (ps.scores[a] != ps.scores[b]) {
                        return ps.scores[a] > ps.scores[b];
                      }
                      return a < b;
                    });
  order.resize(take);
  return order;
}

IcaOutput ica_forward(const IcaParams& params, const ProposalSet& ps) {
  check_inputs(params, ps);
  const auto [k, d, m, c] = params.dims;

  IcaOutput out;
  out.selected = topk_select(ps, k);
  const auto n_sel = static_cast<Eigen::Index>(out.selected.size());

  out.concat = Vector::Zero(static_cast<Eigen::Index>(k) * d);
  for (Eigen::Index j = 0; j < n_sel; ++j) {
    out.concat.segment(j * d, d) = ps.features.row(out.selected[j]).transpose();
  }
  out.fusion_pre = params.w1 * out.concat + params.b1;
  out.fusion = relu(out.fusion_pre);

  out.new_pre.resize(n_sel, d);
  out.new_features.resize(n_sel, d);
  out.logits.resize(n_sel, c);
  Vector aug(d + m);
  aug.tail(m) = out.fusion;
  for (Eigen::Index j = 0; j < n_sel; ++j) {
    aug.head(d) = ps.features.row(out.selected[j]).transpose();
    const Vector pre = params.w2 * aug + params.b2;
    const Vector f_new = relu(pre);
    out.new_pre.row(j) = pre.transpose();
    out.new_features.row(j) = f_new.transpose();
    out.logits.row(j) = (params.head_w * f_new + params.head_b).transpose();
  }
  return out;
}

IcaGradients ica_backward(const IcaParams& params, const ProposalSet& ps,
                          const Matrix& upstream) {
  const IcaOutput fwd = ica_forward(params, ps);
  const auto [k, d, m, c] = params.dims;
  const auto n_sel = static_cast<Eigen::Index>(fwd.selected.size());
  expect_shape(upstream, n_sel, c, "upstream gradient");

  IcaGradients g{IcaParams::zeros(params.dims),
                 Matrix::Zero(ps.size(), ps.dim())};
  Vector d_fusion = Vector::Zero(m);
  Vector aug(d + m);
  aug.tail(m) = fwd.fusion;
  for (Eigen::Index j = 0; j < n_sel; ++j) {
    const Vector up = upstream.row(j).transpose();
    const Vector f_new = fwd.new_features.row(j).transpose();
    g.params.head_w.noalias() += up * f_new.transpose();
    g.params.head_b += up;

    const Vector d_pre = (params.head_w.transpose() * up)
                             .cwiseProduct(relu_mask(fwd.new_pre.row(j).transpose()));
    aug.head(d) = ps.features.row(fwd.selected[j]).transpose();
    g.params.w2.noalias() += d_pre * aug.transpose();
    g.params.b2 += d_pre;

    const Vector d_aug = params.w2.transpose() * d_pre;
    g.features.row(fwd.selected[j]) += d_aug.head(d).transpose();
    d_fusion += d_aug.tail(m);  // fusion feeds every selected branch
  }

  const Vector d_fusion_pre = d_fusion.cwiseProduct(relu_mask(fwd.fusion_pre));
  g.params.w1.noalias() = d_fusion_pre * fwd.concat.transpose();
  g.params.b1 = d_fusion_pre;
  const Vector d_concat = params.w1.transpose() * d_fusion_pre;
  for (Eigen::Index j = 0; j < n_sel; ++j) {
    g.features.row(fwd.selected[j]) += d_concat.segment(j * d, d).transpose();
  }
  return g;
}

double min_abs_preactivation(const IcaParams& params, const ProposalSet& ps) {
  const IcaOutput fwd = ica_forward(params, ps);
  double best = fwd.fusion_pre.cwiseAbs().minCoeff();
  if (fwd.new_pre.size() > 0) {
    best = std::min(best, fwd.new_pre.cwiseAbs().minCoeff());
  }
  return best;
}

double grad_check(const IcaParams& params, const ProposalSet& ps, double eps) {
  if (!(eps > 0.0)) throw InputError("grad_check: eps must be positive");
  const IcaOutput fwd = ica_forward(params, ps);
  const IcaGradients analytic = ica_backward(params, ps, 2.0 * fwd.logits);

  double worst = 0.0;
  auto compare = [&](double a, double numeric) {
    const double err =
        std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, err);
  };

  IcaParams probe = params;
  auto walk = [&](auto& block, const auto& grad) {
    for (Eigen::Index i = 0; i < block.size(); ++i) {
      double& slot = block.data()[i];
      const double saved = slot;
      slot = saved + eps;
      const double up = sum_sq_logits(probe, ps);
      slot = saved - eps;
      const double down = sum_sq_logits(probe, ps);
      slot = saved;
      compare(grad.data()[i], (up - down) / (2.0 * eps));
    }
  };
  walk(probe.w1, analytic.params.w1);
  walk(probe.b1, analytic.params.b1);
  walk(probe.w2, analytic.params.w2);
  walk(probe.b2, analytic.params.b2);
  walk(probe.head_w, analytic.params.head_w);
  walk(probe.head_b, analytic.params.head_b);

  ProposalSet moved = ps;
  for (Eigen::Index i = 0; i < moved.features.size(); ++i) {
    double& slot = moved.features.data()[i];
    const double saved = slot;
    slot = saved + eps;
    const double up = sum_sq_logits(params, moved);
    slot = saved - eps;
    const double down = sum_sq_logits(params, moved);
    slot = saved;
    compare(analytic.features.data()[i], (up - down) / (2.0 * eps));
  }
  return worst;
}

GradCheckCase make_gradcheck_case(const IcaDims& dims, int num_proposals,
                                  std::uint64_t seed, double eps) {
  if (num_proposals < 1) throw InputError("gradcheck: need >= 1 proposal");
  Rng rng(seed);
  auto normal_fill = [&](auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = rng.normal();
  };
  for (int attempt = 0; attempt < 1000; ++attempt) {
    GradCheckCase c{IcaParams::init(dims, rng), {}};
    normal_fill(c.params.b1);
    normal_fill(c.params.b2);
    normal_fill(c.params.head_b);
    c.proposals.features.resize(num_proposals, dims.d);
    c.proposals.scores.resize(num_proposals);
    normal_fill(c.proposals.features);
    for (Eigen::Index i = 0; i < num_proposals; ++i) {
      c.proposals.scores[i] = rng.uniform01();
    }
    if (min_abs_preactivation(c.params, c.proposals) > 10.0 * eps) return c;
  }
  throw InputError("gradcheck: could not draw a kink-free instance");
}

}  // namespace padx::ica

#include "padx/poisson.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "padx/errors.hpp"

namespace padx::poisson {

namespace {

// Neighbour order matches increasing unknown index: up, left, right, down.
constexpr std::array<Point, 4> kNeighbours{{{0, -1}, {-1, 0}, {1, 0}, {0, 1}}};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

std::string pt(Point p) {
  return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

}  // namespace

BlendProblem make_patch_problem(ImageBuffer target, ImageBuffer source,
                                Point offset) {
  if (source.width() < 3 || source.height() < 3) {
    throw DimensionError("blend: patch " + std::to_string(source.width()) +
                         "x" + std::to_string(source.height()) +
                         " is smaller than 3x3");
  }
  BinaryMask mask(source.width(), source.height());
  for (int v = 1; v + 1 < source.height(); ++v) {
    for (int u = 1; u + 1 < source.width(); ++u) mask.set(u, v);
  }
  return {std::move(target), std::move(source), std::move(mask), offset};
}

void validate(const BlendProblem& p) {
  if (p.target.empty() || p.source.empty()) {
    throw DimensionError("blend: empty target or source image");
  }
  if (p.source.channels() != p.target.channels()) {
    throw DimensionError("blend: source has " +
                         std::to_string(p.source.channels()) +
                         " channels, target has " +
                         std::to_string(p.target.channels()));
  }
  if (p.mask.width() != p.source.width() ||
      p.mask.height() != p.source.height()) {
    throw DimensionError("blend: mask is " + std::to_string(p.mask.width()) +
                         "x" + std::to_string(p.mask.height()) +
                         " but source is " + std::to_string(p.source.width()) +
                         "x" + std::to_string(p.source.height()));
  }
  if (p.mask.count() == 0) throw InputError("blend: mask is empty");
  for (int v = 0; v < p.mask.height(); ++v) {
    for (int u = 0; u < p.mask.width(); ++u) {
      if (!p.mask.contains(u, v)) continue;
      const Point t{u + p.offset.x, v + p.offset.y};
      if (t.x < 1 || t.y < 1 || t.x > p.target.width() - 2 ||
          t.y > p.target.height() - 2) {
        throw BoundaryError("blend: region pixel " + pt({u, v}) +
                            " maps to target " + pt(t) +
                            ", which is not strictly inside the " +
                            std::to_string(p.target.width()) + "x" +
                            std::to_string(p.target.height()) + " target");
      }
    }
  }
}

void CsrMatrix::multiply(const std::vector<double>& x,
                         std::vector<double>& y) const {
  y.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      s += values[k] * x[cols[k]];
    }
    y[r] = s;
  }
}

double CsrMatrix::at(std::size_t row, std::size_t col) const {
  for (std::size_t k = row_ptr[row]; k < row_ptr[row + 1]; ++k) {
    if (cols[k] == col) return values[k];
  }
  return 0.0;
}

SparseSystem build_system(const BlendProblem& p) {
  validate(p);
  const int sw = p.source.width();
  const int sh = p.source.height();
  const int channels = p.target.channels();

  SparseSystem sys;
  sys.source_width = sw;
  sys.index.assign(static_cast<std::size_t>(sw) * sh, -1);
  for (int v = 0; v < sh; ++v) {
    for (int u = 0; u < sw; ++u) {
      if (p.mask.contains(u, v)) {
        sys.index[static_cast<std::size_t>(v) * sw + u] =
            static_cast<long>(sys.pixels.size());
        sys.pixels.push_back({u, v});
      }
    }
  }
  sys.n = sys.pixels.size();
  sys.rhs.assign(channels, std::vector<double>(sys.n, 0.0));
  sys.guess.assign(channels, std::vector<double>(sys.n, 0.0));

  CsrMatrix& a = sys.matrix;
  a.n = sys.n;
  a.row_ptr.reserve(sys.n + 1);
  a.row_ptr.push_back(0);
  for (std::size_t i = 0; i < sys.n; ++i) {
    const Point q = sys.pixels[i];
    const Point tq{q.x + p.offset.x, q.y + p.offset.y};
    std::array<std::pair<std::size_t, double>, 5> row{};
    std::size_t row_len = 0;
    for (std::size_t k = 0; k < kNeighbours.size(); ++k) {
      const Point d = kNeighbours[k];
      const Point r{q.x + d.x, q.y + d.y};
      if (k == 2) row[row_len++] = {i, static_cast<double>(kNeighbours.size())};
      if (p.mask.contains(r.x, r.y)) {
        row[row_len++] = {static_cast<std::size_t>(sys.index_of(r.x, r.y)),
                          -1.0};
      } else {
        for (int c = 0; c < channels; ++c) {
          sys.rhs[c][i] += p.target.at(tq.x + d.x, tq.y + d.y, c);
        }
      }
      // Guidance v = grad g, defined only where the source raster exists.
      if (r.x >= 0 && r.y >= 0 && r.x < sw && r.y < sh) {
        for (int c = 0; c < channels; ++c) {
          sys.rhs[c][i] += double(p.source.at(q.x, q.y, c)) -
                           double(p.source.at(r.x, r.y, c));
        }
      }
    }
    for (std::size_t k = 0; k < row_len; ++k) {
      a.cols.push_back(row[k].first);
      a.values.push_back(row[k].second);
    }
    a.row_ptr.push_back(a.cols.size());
    for (int c = 0; c < channels; ++c) {
      sys.guess[c][i] = p.source.at(q.x, q.y, c);
    }
  }
  return sys;
}

double residual_norm(const SparseSystem& sys, std::size_t channel,
                     const std::vector<double>& x) {
  std::vector<double> ax;
  sys.matrix.multiply(x, ax);
  double s = 0.0;
  for (std::size_t i = 0; i < sys.n; ++i) {
    const double r = sys.rhs[channel][i] - ax[i];
    s += r * r;
  }
  return std::sqrt(s);
}

std::vector<ChannelSolve> solve_cg(const SparseSystem& sys,
                                   const CgOptions& opts) {
  if (!(opts.tol > 0.0)) throw InputError("solve_cg: tol must be positive");
  const std::size_t n = sys.n;
  const std::size_t max_iter = opts.max_iter ? opts.max_iter : 10 * n;

  std::vector<ChannelSolve> out;
  out.reserve(sys.channels());
  std::vector<double> r(n), p(n), ap(n);
  for (std::size_t c = 0; c < sys.channels(); ++c) {
    const std::vector<double>& b = sys.rhs[c];
    const double b_norm = norm(b);
    ChannelSolve cs;
    if (b_norm == 0.0) {
      cs.x.assign(n, 0.0);
      out.push_back(std::move(cs));
      continue;
    }
    const double target = opts.tol * b_norm;
    cs.x = sys.guess[c];

    auto restart = [&] {
      sys.matrix.multiply(cs.x, ap);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
      p = r;
      return dot(r, r);
    };
    double rs = restart();
    for (;;) {
      if (std::sqrt(rs) <= target) {
        // The recursive residual drifts from the true one; confirm.
        const double true_rs = restart();
        if (std::sqrt(true_rs) <= target) {
          rs = true_rs;
          break;
        }
        rs = true_rs;
      }
      if (cs.iterations >= max_iter) {
        const double final_residual = residual_norm(sys, c, cs.x);
        throw ConvergenceError(
            "conjugate gradient did not converge in " +
                std::to_string(max_iter) + " iterations (channel " +
                std::to_string(c) + ", residual " +
                std::to_string(final_residual) + ", target " +
                std::to_string(target) + ")",
            final_residual);
      }
      sys.matrix.multiply(p, ap);
      const double alpha = rs / dot(p, ap);
      for (std::size_t i = 0; i < n; ++i) {
        cs.x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      const double rs_next = dot(r, r);
      const double beta = rs_next / rs;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
      rs = rs_next;
      ++cs.iterations;
    }
    cs.residual = std::sqrt(rs);
    out.push_back(std::move(cs));
  }
  return out;
}

std::vector<std::vector<double>> dense_solve_oracle(const SparseSystem& sys) {
  if (sys.n > kDenseOracleMaxUnknowns) {
    throw InputError("dense_solve_oracle: " + std::to_string(sys.n) +
                     " unknowns exceeds cap of " +
                     std::to_string(kDenseOracleMaxUnknowns));
  }
  const auto n = static_cast<Eigen::Index>(sys.n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t r = 0; r < sys.n; ++r) {
    for (std::size_t k = sys.matrix.row_ptr[r]; k < sys.matrix.row_ptr[r + 1];
         ++k) {
      a(static_cast<Eigen::Index>(r),
        static_cast<Eigen::Index>(sys.matrix.cols[k])) = sys.matrix.values[k];
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  std::vector<std::vector<double>> out;
  for (const auto& rhs : sys.rhs) {
    const Eigen::VectorXd b =
        Eigen::Map<const Eigen::VectorXd>(rhs.data(), n);
    const Eigen::VectorXd x = llt.solve(b);
    out.emplace_back(x.data(), x.data() + n);
  }
  return out;
}

BlendSolution solve(const BlendProblem& p, const CgOptions& opts) {
  BlendSolution sol;
  sol.system = build_system(p);
  sol.channels = solve_cg(sol.system, opts);
  return sol;
}

ImageBuffer compose(const BlendProblem& p, const SparseSystem& sys,
                    const std::vector<std::vector<double>>& solution) {
  ImageBuffer out = p.target;
  for (std::size_t i = 0; i < sys.n; ++i) {
    const Point q = sys.pixels[i];
    for (std::size_t c = 0; c < solution.size(); ++c) {
      const double v = std::clamp(solution[c][i], 0.0, 255.0);
      out.at(q.x + p.offset.x, q.y + p.offset.y, static_cast<int>(c)) =
          static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return out;
}

ImageBuffer blend(const BlendProblem& p, const CgOptions& opts) {
  BlendSolution sol = solve(p, opts);
  std::vector<std::vector<double>> values;
  values.reserve(sol.channels.size());
  for (auto& ch : sol.channels) values.push_back(std::move(ch.x));
  return compose(p, sol.system, values);
}

}  // namespace padx::poisson

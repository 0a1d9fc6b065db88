#pragma once

#include <cstddef>
#include <vector>

#include "padx/core.hpp"

namespace padx::poisson {

// Seamless-cloning problem: paste the gradients of `source` over the masked
// region into `target`, pinned to the target on the region's outer ring.
// The mask lives in source coordinates; `offset` maps source (u, v) to target
// (u + dx, v + dy). Guidance differences toward neighbours outside the source
// raster are taken as zero.
struct BlendProblem {
  ImageBuffer target;
  ImageBuffer source;
  BinaryMask mask;
  Point offset;
};

// Problem for pasting a whole rectangular patch: the region is the patch minus
// its 1-pixel outer ring, and that ring supplies the guidance gradients across
// the region boundary. Pasting a patch onto the pixels it was cut from leaves
// the target unchanged. The patch must be at least 3x3.
BlendProblem make_patch_problem(ImageBuffer target, ImageBuffer source,
                                Point offset);

// Throws BoundaryError if any masked pixel lands on or outside the target
// border, DimensionError on mismatched sizes or channels.
void validate(const BlendProblem& p);

// Compressed sparse row matrix.
struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> cols;
  std::vector<double> values;

  // y = A x
  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  double at(std::size_t row, std::size_t col) const;
};

// Discrete Poisson system over the masked pixels. Unknown i corresponds to
// source pixel `pixels[i]` (ordered by row, then column).
struct SparseSystem {
  std::size_t n = 0;
  CsrMatrix matrix;
  std::vector<std::vector<double>> rhs;    // one per channel
  std::vector<std::vector<double>> guess;  // source values, one per channel
  std::vector<Point> pixels;
  std::vector<long> index;  // source raster -> unknown index, -1 outside
  int source_width = 0;

  std::size_t channels() const { return rhs.size(); }
  long index_of(int u, int v) const {
    return index[static_cast<std::size_t>(v) * source_width + u];
  }
};

SparseSystem build_system(const BlendProblem& p);

struct CgOptions {
  double tol = 1e-8;          // relative residual ||Ax - b|| / ||b||
  std::size_t max_iter = 0;   // 0 means 10 * n
};

struct ChannelSolve {
  std::vector<double> x;
  std::size_t iterations = 0;
  double residual = 0.0;  // final ||Ax - b||_2
};

// Unpreconditioned conjugate gradient per channel, warm-started from the
// source values. Throws ConvergenceError if max_iter is exhausted.
std::vector<ChannelSolve> solve_cg(const SparseSystem& sys,
                                   const CgOptions& opts = {});

inline constexpr std::size_t kDenseOracleMaxUnknowns = 4096;

// Dense Cholesky solve of the same system, for cross-checking solve_cg.
std::vector<std::vector<double>> dense_solve_oracle(const SparseSystem& sys);

// ||Ax - b||_2 for one channel.
double residual_norm(const SparseSystem& sys, std::size_t channel,
                     const std::vector<double>& x);

// Real-valued solution of a blend, before clamping and rounding.
struct BlendSolution {
  SparseSystem system;
  std::vector<ChannelSolve> channels;
};

BlendSolution solve(const BlendProblem& p, const CgOptions& opts = {});

// Writes round(clamp(x, 0, 255)) into a copy of the target over the region.
ImageBuffer compose(const BlendProblem& p, const SparseSystem& sys,
                    const std::vector<std::vector<double>>& solution);

ImageBuffer blend(const BlendProblem& p, const CgOptions& opts = {});

}  // namespace padx::poisson

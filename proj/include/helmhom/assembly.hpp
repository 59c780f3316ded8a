// Complex sparse systems for P1 elements: triplet assembly into CSR, the
// Helmholtz/corrector bilinear form
//   (u, v) -> int a grad(u).grad(v) + int c u v + gamma oint u v
// with scalar and divergence-form volume loads, and residual-checked direct
// solves (the factorization itself is delegated to Eigen).
#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "helmhom/geometry.hpp"
#include "helmhom/mesh.hpp"

namespace helmhom::fem {

class ComplexSparseMatrix {
 public:
  explicit ComplexSparseMatrix(int dim);

  int dim() const { return dim_; }
  bool finalized() const { return finalized_; }
  std::size_t nnz() const { return vals_.size(); }

  // Triplet stage; duplicate (r, c) pairs accumulate.
  void add(int row, int col, Complex value);

  // Sort, merge duplicates, drop exact zeros, build CSR. Idempotent.
  void finalize();

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<Complex>& values() const { return vals_; }

  std::vector<Complex> apply(const std::vector<Complex>& x) const;
  bool symmetric_pattern() const;
  bool is_real(double tol = 0.0) const;

 private:
  struct Triplet {
    int row, col;
    Complex val;
  };
  int dim_;
  bool finalized_ = false;
  std::vector<Triplet> triplets_;
  std::vector<int> row_ptr_, col_idx_;
  std::vector<Complex> vals_;
};

// Per-triangle volume loads. Empty vectors mean "no such load"; otherwise
// the size must equal the triangle count.
struct VolumeLoads {
  std::vector<Complex> scalar;   // f:  rhs += int f v        (per triangle)
  std::vector<Vec2c> divergence; // F:  rhs += -int F.grad(v) (per triangle)
};

// Impedance-type closure on the outer boundary: gamma enters the matrix as
// gamma * oint u v; `load` (if set) is g(point, outward normal) and enters
// the rhs as oint g v, integrated with 2-point Gauss per boundary edge.
struct BoundaryClosure {
  Complex gamma{0.0, 0.0};
  std::function<Complex(const Vec2&, const Vec2&)> load;
};

struct AssembledSystem {
  ComplexSparseMatrix matrix;
  std::vector<Complex> rhs;
};

// a_tri / c_tri are per-triangle coefficients (piecewise-constant sampling).
// The returned matrix is finalized. A closure on a periodic grid is an error.
AssembledSystem assemble(const Grid& grid, const std::vector<Mat2>& a_tri,
                         const std::vector<Complex>& c_tri,
                         const VolumeLoads& loads = {},
                         const BoundaryClosure* closure = nullptr);

// Symmetric elimination of Dirichlet constraints (dof -> value) on a
// finalized system; used by manufactured-solution tests.
AssembledSystem apply_dirichlet(const AssembledSystem& sys,
                                const std::vector<std::pair<int, Complex>>& bc);

// Direct sparse factorization held for repeated right-hand sides. Real
// symmetric matrices take the Cholesky-type path with LU fallback; complex
// matrices take sparse LU. Every solve enforces
//   ||A x - b|| <= 1e-8 * max(||b||, 1e-300)
// and throws NonConvergence past that; structural/numerical breakdown of
// the factorization throws SingularMatrix.
class LinearSolver {
 public:
  explicit LinearSolver(const ComplexSparseMatrix& A);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  std::vector<Complex> solve(const std::vector<Complex>& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<Complex> solve_linear(const ComplexSparseMatrix& A,
                                  const std::vector<Complex>& b);

}  // namespace helmhom::fem

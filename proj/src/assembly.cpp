#include "helmhom/assembly.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "helmhom/errors.hpp"

namespace helmhom::fem {

namespace {

using SpMatD = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<Complex>;

double vec_norm(const std::vector<Complex>& v) {
  double s = 0.0;
  for (const Complex& c : v) s += std::norm(c);
  return std::sqrt(s);
}

}  // namespace

ComplexSparseMatrix::ComplexSparseMatrix(int dim) : dim_(dim) {
  if (dim <= 0) throw Error("sparse matrix dimension must be positive");
}

void ComplexSparseMatrix::add(int row, int col, Complex value) {
  if (finalized_) throw Error("cannot add entries to a finalized matrix");
  if (row < 0 || row >= dim_ || col < 0 || col >= dim_)
    throw Error("sparse matrix entry out of range");
  triplets_.push_back({row, col, value});
}

void ComplexSparseMatrix::finalize() {
  if (finalized_) return;
  std::sort(triplets_.begin(), triplets_.end(),
            [](const Triplet& a, const Triplet& b) {
              return a.row != b.row ? a.row < b.row : a.col < b.col;
            });
  row_ptr_.assign(dim_ + 1, 0);
  col_idx_.clear();
  vals_.clear();
  std::size_t i = 0;
  for (int r = 0; r < dim_; ++r) {
    while (i < triplets_.size() && triplets_[i].row == r) {
      const int c = triplets_[i].col;
      Complex v{0.0, 0.0};
      while (i < triplets_.size() && triplets_[i].row == r && triplets_[i].col == c)
        v += triplets_[i++].val;
      if (v != Complex{0.0, 0.0}) {
        col_idx_.push_back(c);
        vals_.push_back(v);
      }
    }
    row_ptr_[r + 1] = static_cast<int>(col_idx_.size());
  }
  triplets_.clear();
  triplets_.shrink_to_fit();
  finalized_ = true;
}

std::vector<Complex> ComplexSparseMatrix::apply(const std::vector<Complex>& x) const {
  if (!finalized_) throw Error("matrix must be finalized before apply");
  if (static_cast<int>(x.size()) != dim_) throw Error("apply: size mismatch");
  std::vector<Complex> y(dim_, Complex{0.0, 0.0});
  for (int r = 0; r < dim_; ++r) {
    Complex acc{0.0, 0.0};
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += vals_[k] * x[col_idx_[k]];
    y[r] = acc;
  }
  return y;
}

bool ComplexSparseMatrix::symmetric_pattern() const {
  if (!finalized_) throw Error("matrix must be finalized");
  for (int r = 0; r < dim_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const int c = col_idx_[k];
      const int lo = row_ptr_[c], hi = row_ptr_[c + 1];
      if (!std::binary_search(col_idx_.begin() + lo, col_idx_.begin() + hi, r))
        return false;
    }
  }
  return true;
}

bool ComplexSparseMatrix::is_real(double tol) const {
  if (!finalized_) throw Error("matrix must be finalized");
  for (const Complex& v : vals_)
    if (std::abs(v.imag()) > tol) return false;
  return true;
}

AssembledSystem assemble(const Grid& grid, const std::vector<Mat2>& a_tri,
                         const std::vector<Complex>& c_tri,
                         const VolumeLoads& loads, const BoundaryClosure* closure) {
  const TriMesh& m = grid.mesh;
  const DofMap& dofs = grid.dofs;
  const std::size_t ntri = m.triangles.size();
  if (!a_tri.empty() && a_tri.size() != ntri)
    throw Error("assemble: a-field size mismatch");
  if (!c_tri.empty() && c_tri.size() != ntri)
    throw Error("assemble: c-field size mismatch");
  if (!loads.scalar.empty() && loads.scalar.size() != ntri)
    throw Error("assemble: scalar load size mismatch");
  if (!loads.divergence.empty() && loads.divergence.size() != ntri)
    throw Error("assemble: divergence load size mismatch");
  if (closure && dofs.periodic)
    throw Error("assemble: boundary closure on a periodic grid");

  AssembledSystem sys{ComplexSparseMatrix(dofs.n_dofs),
                      std::vector<Complex>(dofs.n_dofs, Complex{0.0, 0.0})};

  for (std::size_t t = 0; t < ntri; ++t) {
    const auto& tv = m.triangles[t].v;
    const double A = m.area(t);
    const auto g = m.basis_gradients(t);
    const int d[3] = {dofs.dof(tv[0]), dofs.dof(tv[1]), dofs.dof(tv[2])};

    if (!a_tri.empty()) {
      const Mat2& a = a_tri[t];
      for (int i = 0; i < 3; ++i) {
        const Vec2 ag = a.apply(g[i]);
        for (int j = 0; j < 3; ++j)
          sys.matrix.add(d[i], d[j], Complex{A * ag.dot(g[j]), 0.0});
      }
    }
    if (!c_tri.empty() && c_tri[t] != Complex{0.0, 0.0}) {
      // Exact P1 mass matrix: (A/12) * (2 on diagonal, 1 off).
      const Complex w = c_tri[t] * (A / 12.0);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          sys.matrix.add(d[i], d[j], w * (i == j ? 2.0 : 1.0));
    }
    if (!loads.scalar.empty() && loads.scalar[t] != Complex{0.0, 0.0}) {
      const Complex w = loads.scalar[t] * (A / 3.0);
      for (int i = 0; i < 3; ++i) sys.rhs[d[i]] += w;
    }
    if (!loads.divergence.empty()) {
      const Vec2c& F = loads.divergence[t];
      for (int i = 0; i < 3; ++i)
        sys.rhs[d[i]] -= A * (F.x * g[i].x + F.y * g[i].y);
    }
  }

  if (closure) {
    const Complex gamma = closure->gamma;
    // 2-point Gauss abscissae on [0,1].
    const double q0 = 0.5 - 0.5 / std::sqrt(3.0), q1 = 0.5 + 0.5 / std::sqrt(3.0);
    for (const BoundaryEdge& e : m.boundary_edges) {
      const Vec2 p0 = m.vertices[e.v0], p1 = m.vertices[e.v1];
      const double len = (p1 - p0).norm();
      const int d0 = dofs.dof(e.v0), d1 = dofs.dof(e.v1);
      if (gamma != Complex{0.0, 0.0}) {
        const Complex w = gamma * (len / 6.0);
        sys.matrix.add(d0, d0, 2.0 * w);
        sys.matrix.add(d0, d1, w);
        sys.matrix.add(d1, d0, w);
        sys.matrix.add(d1, d1, 2.0 * w);
      }
      if (closure->load) {
        for (double q : {q0, q1}) {
          const Vec2 xq = p0 + (p1 - p0) * q;
          const Complex gv = closure->load(xq, e.normal) * (len / 2.0);
          sys.rhs[d0] += gv * (1.0 - q);
          sys.rhs[d1] += gv * q;
        }
      }
    }
  }

  sys.matrix.finalize();
  return sys;
}

AssembledSystem apply_dirichlet(const AssembledSystem& sys,
                                const std::vector<std::pair<int, Complex>>& bc) {
  const ComplexSparseMatrix& A = sys.matrix;
  if (!A.finalized()) throw Error("apply_dirichlet: matrix must be finalized");
  std::vector<char> fixed(A.dim(), 0);
  std::vector<Complex> value(A.dim(), Complex{0.0, 0.0});
  for (const auto& [d, v] : bc) {
    if (d < 0 || d >= A.dim()) throw Error("apply_dirichlet: dof out of range");
    fixed[d] = 1;
    value[d] = v;
  }
  AssembledSystem out{ComplexSparseMatrix(A.dim()), sys.rhs};
  for (int r = 0; r < A.dim(); ++r) {
    if (fixed[r]) {
      out.matrix.add(r, r, Complex{1.0, 0.0});
      out.rhs[r] = value[r];
      continue;
    }
    for (int k = A.row_ptr()[r]; k < A.row_ptr()[r + 1]; ++k) {
      const int c = A.col_idx()[k];
      if (fixed[c])
        out.rhs[r] -= A.values()[k] * value[c];
      else
        out.matrix.add(r, c, A.values()[k]);
    }
  }
  out.matrix.finalize();
  return out;
}

struct LinearSolver::Impl {
  // CSR copy for residual checks (independent of the caller's lifetime).
  std::vector<int> row_ptr, col_idx;
  std::vector<Complex> vals;
  int dim = 0;
  bool real = false;

  SpMatD Ad;
  SpMatC Ac;
  std::unique_ptr<Eigen::SimplicialLDLT<SpMatD>> ldlt;
  mutable std::unique_ptr<Eigen::SparseLU<SpMatD>> lu_real;
  std::unique_ptr<Eigen::SparseLU<SpMatC>> lu_cplx;

  std::vector<Complex> residual_vector(const std::vector<Complex>& x,
                                       const std::vector<Complex>& b) const {
    std::vector<Complex> r = b;
    for (int row = 0; row < dim; ++row) {
      Complex acc{0.0, 0.0};
      for (int k = row_ptr[row]; k < row_ptr[row + 1]; ++k)
        acc += vals[k] * x[col_idx[k]];
      r[row] -= acc;
    }
    return r;
  }

  bool residual_ok(const std::vector<Complex>& x, const std::vector<Complex>& b) const {
    for (const Complex& c : x)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    const double bn = std::max(vec_norm(b), 1e-300);
    return vec_norm(residual_vector(x, b)) <= 1e-8 * bn;
  }
};

LinearSolver::LinearSolver(const ComplexSparseMatrix& A) : impl_(new Impl) {
  if (!A.finalized()) throw Error("solve: matrix must be finalized");
  impl_->dim = A.dim();
  impl_->row_ptr = A.row_ptr();
  impl_->col_idx = A.col_idx();
  impl_->vals = A.values();

  double max_abs = 0.0;
  for (const Complex& v : impl_->vals) max_abs = std::max(max_abs, std::abs(v));
  impl_->real = A.is_real(/*tol=*/0.0);

  if (impl_->real) {
    // Symmetric (to rounding) real matrices take the Cholesky-type path;
    // anything else goes straight to LU.
    bool symmetric = A.symmetric_pattern();
    if (symmetric) {
      const double tol = 1e-12 * std::max(max_abs, 1e-300);
      for (int r = 0; r < impl_->dim && symmetric; ++r) {
        for (int k = impl_->row_ptr[r]; k < impl_->row_ptr[r + 1]; ++k) {
          const int c = impl_->col_idx[k];
          if (c < r) continue;
          const int lo = impl_->row_ptr[c], hi = impl_->row_ptr[c + 1];
          auto it = std::lower_bound(impl_->col_idx.begin() + lo,
                                     impl_->col_idx.begin() + hi, r);
          const Complex vt = impl_->vals[it - impl_->col_idx.begin()];
          if (std::abs((impl_->vals[k] - vt).real()) > tol) {
            symmetric = false;
            break;
          }
        }
      }
    }
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(impl_->vals.size());
    for (int r = 0; r < impl_->dim; ++r)
      for (int k = impl_->row_ptr[r]; k < impl_->row_ptr[r + 1]; ++k)
        t.emplace_back(r, impl_->col_idx[k], impl_->vals[k].real());
    impl_->Ad.resize(impl_->dim, impl_->dim);
    impl_->Ad.setFromTriplets(t.begin(), t.end());
    impl_->Ad.makeCompressed();

    if (symmetric) {
      impl_->ldlt = std::make_unique<Eigen::SimplicialLDLT<SpMatD>>(impl_->Ad);
      if (impl_->ldlt->info() == Eigen::Success) return;
      impl_->ldlt.reset();  // fall through to LU
    }
    impl_->lu_real = std::make_unique<Eigen::SparseLU<SpMatD>>(impl_->Ad);
    if (impl_->lu_real->info() != Eigen::Success)
      throw SingularMatrix("sparse LU factorization failed (singular matrix)");
    return;
  }

  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(impl_->vals.size());
  for (int r = 0; r < impl_->dim; ++r)
    for (int k = impl_->row_ptr[r]; k < impl_->row_ptr[r + 1]; ++k)
      t.emplace_back(r, impl_->col_idx[k], impl_->vals[k]);
  impl_->Ac.resize(impl_->dim, impl_->dim);
  impl_->Ac.setFromTriplets(t.begin(), t.end());
  impl_->Ac.makeCompressed();
  impl_->lu_cplx = std::make_unique<Eigen::SparseLU<SpMatC>>(impl_->Ac);
  if (impl_->lu_cplx->info() != Eigen::Success)
    throw SingularMatrix("sparse LU factorization failed (singular matrix)");
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

std::vector<Complex> LinearSolver::solve(const std::vector<Complex>& b) const {
  const Impl& im = *impl_;
  if (static_cast<int>(b.size()) != im.dim) throw Error("solve: rhs size mismatch");

  std::vector<Complex> x(im.dim);
  if (im.real) {
    Eigen::VectorXd br(im.dim), bi(im.dim);
    for (int i = 0; i < im.dim; ++i) {
      br[i] = b[i].real();
      bi[i] = b[i].imag();
    }
    const bool has_imag = bi.cwiseAbs().maxCoeff() != 0.0;
    auto solve_real = [&](const Eigen::VectorXd& rhs) -> Eigen::VectorXd {
      if (im.lu_real) return im.lu_real->solve(rhs);
      return im.ldlt->solve(rhs);
    };
    Eigen::VectorXd xr = solve_real(br);
    Eigen::VectorXd xi = has_imag ? solve_real(bi) : Eigen::VectorXd::Zero(im.dim);
    for (int i = 0; i < im.dim; ++i) x[i] = Complex{xr[i], xi[i]};
    if (!im.residual_ok(x, b)) {
      // LDLT without pivoting can lose accuracy on indefinite matrices;
      // refactor with LU once and retry.
      if (im.ldlt && !im.lu_real) {
        im.lu_real = std::make_unique<Eigen::SparseLU<SpMatD>>(im.Ad);
        if (im.lu_real->info() != Eigen::Success)
          throw SingularMatrix("sparse LU factorization failed (singular matrix)");
        xr = im.lu_real->solve(br);
        if (has_imag)
          xi = im.lu_real->solve(bi);
        else
          xi.setZero();
        for (int i = 0; i < im.dim; ++i) x[i] = Complex{xr[i], xi[i]};
        if (im.residual_ok(x, b)) return x;
      }
      throw NonConvergence("linear solve residual exceeds 1e-8 * ||b||");
    }
    return x;
  }

  Eigen::VectorXcd bc(im.dim);
  for (int i = 0; i < im.dim; ++i) bc[i] = b[i];
  const Eigen::VectorXcd xc = im.lu_cplx->solve(bc);
  for (int i = 0; i < im.dim; ++i) x[i] = xc[i];
  if (!im.residual_ok(x, b))
    throw NonConvergence("linear solve residual exceeds 1e-8 * ||b||");
  return x;
}

std::vector<Complex> solve_linear(const ComplexSparseMatrix& A,
                                  const std::vector<Complex>& b) {
  return LinearSolver(A).solve(b);
}

}  // namespace helmhom::fem

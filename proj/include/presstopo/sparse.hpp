#pragma once

// Fixed-pattern finite element assembly and Dirichlet-reduced SPD solves.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "presstopo/errors.hpp"

namespace presstopo {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Sparsity pattern of a square matrix assembled from equal-sized element
/// blocks, with a precomputed scatter map so repeated assemblies only add
/// values. Element order is fixed, so results are bitwise reproducible.
class AssemblyPattern {
 public:
  AssemblyPattern() = default;

  AssemblyPattern(int size, int dofs_per_element, std::vector<int> element_dofs)
      : size_(size), stride_(dofs_per_element), element_dofs_(std::move(element_dofs)) {
    if (stride_ <= 0 || element_dofs_.size() % stride_ != 0) {
      throw InvalidArgument("element dof list is not a multiple of the block size");
    }
    const int nel = num_elements();
    std::vector<Eigen::Triplet<double, int>> triplets;
    triplets.reserve(static_cast<std::size_t>(nel) * stride_ * stride_);
    for (int e = 0; e < nel; ++e) {
      const int* d = &element_dofs_[static_cast<std::size_t>(e) * stride_];
      for (int c = 0; c < stride_; ++c)
        for (int r = 0; r < stride_; ++r) triplets.emplace_back(d[r], d[c], 0.0);
    }
    pattern_.resize(size_, size_);
    pattern_.setFromTriplets(triplets.begin(), triplets.end());
    pattern_.makeCompressed();

    scatter_.resize(static_cast<std::size_t>(nel) * stride_ * stride_);
    const int* outer = pattern_.outerIndexPtr();
    const int* inner = pattern_.innerIndexPtr();
    for (int e = 0; e < nel; ++e) {
      const int* d = &element_dofs_[static_cast<std::size_t>(e) * stride_];
      for (int c = 0; c < stride_; ++c) {
        for (int r = 0; r < stride_; ++r) {
          const int* lo = inner + outer[d[c]];
          const int* hi = inner + outer[d[c] + 1];
          const int* pos = std::lower_bound(lo, hi, d[r]);
          scatter_[(static_cast<std::size_t>(e) * stride_ + c) * stride_ + r] =
              static_cast<int>(pos - inner);
        }
      }
    }
  }

  int size() const { return size_; }
  int block_size() const { return stride_; }
  int num_elements() const { return static_cast<int>(element_dofs_.size() / stride_); }
  const SparseMatrix& pattern() const { return pattern_; }

  const int* element_dofs(int e) const {
    return &element_dofs_[static_cast<std::size_t>(e) * stride_];
  }

  /// `block(e)` must return a column-major stride x stride matrix expression.
  template <typename BlockFn>
  SparseMatrix assemble(BlockFn&& block) const {
    SparseMatrix m = pattern_;
    double* values = m.valuePtr();
    std::fill(values, values + m.nonZeros(), 0.0);
    const int nel = num_elements();
    for (int e = 0; e < nel; ++e) {
      const auto& b = block(e);
      const int* s = &scatter_[static_cast<std::size_t>(e) * stride_ * stride_];
      for (int c = 0; c < stride_; ++c)
        for (int r = 0; r < stride_; ++r) values[s[c * stride_ + r]] += b(r, c);
    }
    return m;
  }

 private:
  int size_ = 0;
  int stride_ = 0;
  std::vector<int> element_dofs_;
  SparseMatrix pattern_;
  std::vector<int> scatter_;
};

/// Solves A x = b with some entries of x prescribed. Known values are folded
/// into the right-hand side and the free block A_ff is factorized with a
/// sparse LDL^T. The symbolic analysis is done once per pattern.
class ReducedSystem {
 public:
  using Factorization = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

  ReducedSystem() = default;
  ReducedSystem(ReducedSystem&&) noexcept = default;
  ReducedSystem& operator=(ReducedSystem&&) noexcept = default;

  ReducedSystem(const SparseMatrix& pattern, const std::vector<bool>& fixed) : fixed_(fixed) {
    const int n = static_cast<int>(pattern.rows());
    if (static_cast<int>(fixed.size()) != n) throw InvalidArgument("fixed mask has wrong length");
    free_index_.assign(n, -1);
    for (int i = 0; i < n; ++i) {
      if (!fixed[i]) {
        free_index_[i] = static_cast<int>(free_dofs_.size());
        free_dofs_.push_back(i);
      }
    }
    if (free_dofs_.empty()) throw InvalidArgument("every degree of freedom is prescribed");

    std::vector<Eigen::Triplet<double, int>> triplets;
    for (int c = 0; c < n; ++c) {
      if (fixed[c]) continue;
      for (SparseMatrix::InnerIterator it(pattern, c); it; ++it) {
        if (!fixed[it.row()]) triplets.emplace_back(free_index_[it.row()], free_index_[c], 0.0);
      }
    }
    const int nf = num_free();
    reduced_.resize(nf, nf);
    reduced_.setFromTriplets(triplets.begin(), triplets.end());
    reduced_.makeCompressed();

    // Map each stored entry of the full pattern to the reduced value array.
    full_to_reduced_.assign(pattern.nonZeros(), -1);
    const int* outer = reduced_.outerIndexPtr();
    const int* inner = reduced_.innerIndexPtr();
    const int* p_outer = pattern.outerIndexPtr();
    const int* p_inner = pattern.innerIndexPtr();
    for (int c = 0; c < n; ++c) {
      if (fixed[c]) continue;
      const int rc = free_index_[c];
      for (int k = p_outer[c]; k < p_outer[c + 1]; ++k) {
        const int r = p_inner[k];
        if (fixed[r]) continue;
        const int* pos = std::lower_bound(inner + outer[rc], inner + outer[rc + 1], free_index_[r]);
        full_to_reduced_[k] = static_cast<int>(pos - inner);
      }
    }
    solver_ = std::make_unique<Factorization>();
    solver_->analyzePattern(reduced_);
  }

  int num_free() const { return static_cast<int>(free_dofs_.size()); }
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  const std::vector<bool>& fixed_mask() const { return fixed_; }

  /// Extracts A_ff from a matrix sharing the construction pattern and factorizes it.
  void factorize(const SparseMatrix& full) {
    if (full.nonZeros() != static_cast<Eigen::Index>(full_to_reduced_.size())) {
      throw InvalidArgument("matrix pattern differs from the analysed pattern");
    }
    double* rv = reduced_.valuePtr();
    std::fill(rv, rv + reduced_.nonZeros(), 0.0);
    const double* fv = full.valuePtr();
    for (std::size_t k = 0; k < full_to_reduced_.size(); ++k) {
      if (full_to_reduced_[k] >= 0) rv[full_to_reduced_[k]] += fv[k];
    }
    factorized_ = false;
    solver_->factorize(reduced_);
    if (solver_->info() != Eigen::Success) {
      throw SolverError("sparse LDL^T factorization failed");
    }
    const VectorXd d = solver_->vectorD();
    const double pivot_floor = 1e-14 * d.cwiseAbs().maxCoeff();
    std::vector<int> bad;
    for (int i = 0; i < d.size(); ++i) {
      if (!(d[i] > pivot_floor)) bad.push_back(free_dofs_[solver_->permutationPinv().indices()[i]]);
    }
    if (!bad.empty()) {
      std::ostringstream msg;
      msg << "matrix is not positive definite after elimination; " << bad.size()
          << " non-positive pivot(s) at unknowns";
      for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 12); ++i) msg << ' ' << bad[i];
      if (bad.size() > 12) msg << " ...";
      singular_unknowns_ = bad;
      throw SolverError(msg.str());
    }
    factorized_ = true;
    stamp_ = next_stamp();
  }

  bool factorized() const { return factorized_; }
  /// Changes on every successful factorization; states record it to detect
  /// that a shared factorization was overwritten by a later solve.
  std::uint64_t stamp() const { return stamp_; }
  const SparseMatrix& reduced_matrix() const { return reduced_; }
  const std::vector<int>& singular_unknowns() const { return singular_unknowns_; }

  struct Result {
    VectorXd x;               // full-length solution
    double residual = 0.0;    // ||A_ff x_f - b_f||
    double rhs_norm = 0.0;    // ||b_f||
  };

  /// Solves with the current factorization. `prescribed` supplies values on
  /// fixed entries (ignored elsewhere); `full` is the matrix that was factorized.
  Result solve(const SparseMatrix& full, const VectorXd& rhs, const VectorXd& prescribed) const {
    if (!factorized_) throw SolverError("solve requested before factorization");
    const int n = static_cast<int>(fixed_.size());
    if (rhs.size() != n || prescribed.size() != n) throw InvalidArgument("vector length mismatch");

    VectorXd known = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
      if (fixed_[i]) known[i] = prescribed[i];
    const VectorXd coupling = full * known;

    VectorXd b(num_free());
    for (int k = 0; k < num_free(); ++k) b[k] = rhs[free_dofs_[k]] - coupling[free_dofs_[k]];
    VectorXd xf = solver_->solve(b);
    if (solver_->info() != Eigen::Success || !xf.allFinite()) {
      throw SolverError("sparse triangular solve failed");
    }
    // Two steps of iterative refinement with the residual accumulated in
    // extended precision; the high-contrast systems lose several digits in
    // the plain solve and the compliance inherits that noise.
    for (int step = 0; step < 2; ++step) xf += solver_->solve(extended_residual(b, xf));
    Result out;
    out.x = known;
    for (int k = 0; k < num_free(); ++k) out.x[free_dofs_[k]] = xf[k];
    out.residual = (reduced_ * xf - b).norm();
    out.rhs_norm = b.norm();
    return out;
  }

 private:
  std::vector<bool> fixed_;
  std::vector<int> free_index_;
  std::vector<int> free_dofs_;
  SparseMatrix reduced_;
  std::vector<int> full_to_reduced_;
  std::unique_ptr<Factorization> solver_;
  std::vector<int> singular_unknowns_;
  bool factorized_ = false;
  std::uint64_t stamp_ = 0;

  // b - A_ff x, summed in long double; A_ff holds both triangles.
  VectorXd extended_residual(const VectorXd& b, const VectorXd& x) const {
    std::vector<long double> acc(b.data(), b.data() + b.size());
    const int* outer = reduced_.outerIndexPtr();
    const int* inner = reduced_.innerIndexPtr();
    const double* v = reduced_.valuePtr();
    for (int c = 0; c < reduced_.outerSize(); ++c) {
      const long double xc = x[c];
      for (int k = outer[c]; k < outer[c + 1]; ++k) acc[inner[k]] -= v[k] * xc;
    }
    VectorXd r(b.size());
    for (int i = 0; i < r.size(); ++i) r[i] = static_cast<double>(acc[i]);
    return r;
  }

  static std::uint64_t next_stamp() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
  }
};

}  // namespace presstopo

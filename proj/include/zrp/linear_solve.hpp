#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <memory>
#include <string>
#include <vector>

#include "zrp/errors.hpp"

namespace zrp::linalg {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;
using Vector = Eigen::VectorXd;

/// Systems up to this many unknowns are factorized directly.
inline constexpr Eigen::Index kDirectSolveLimit = 50'000;
/// Relative residual target of the iterative fallback.
inline constexpr double kIterativeTolerance = 1e-11;

enum class Structure { general, spd };

/// Factorizes once, solves for any number of right-hand sides.
class Solver {
public:
    Solver(const SparseMatrix& a, Structure structure) : structure_(structure), n_(a.rows()) {
        if (a.rows() != a.cols()) throw SolverError("system matrix is not square");
        direct_ = n_ <= kDirectSolveLimit;
        if (n_ == 0) return;
        if (structure_ == Structure::spd) {
            if (direct_) {
                ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(a);
                if (ldlt_->info() != Eigen::Success) throw SolverError("LDLT factorization failed");
            } else {
                cg_ = std::make_unique<CG>();
                cg_->setTolerance(kIterativeTolerance);
                cg_->setMaxIterations(20 * static_cast<int>(n_));
                cg_->compute(a);
                if (cg_->info() != Eigen::Success) throw SolverError("incomplete Cholesky failed");
            }
        } else {
            if (direct_) {
                lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
                lu_->analyzePattern(a);
                lu_->factorize(a);
                if (lu_->info() != Eigen::Success)
                    throw SolverError("sparse LU factorization failed: " + lu_->lastErrorMessage());
            } else {
                bicg_ = std::make_unique<BiCG>();
                bicg_->setTolerance(kIterativeTolerance);
                bicg_->setMaxIterations(20 * static_cast<int>(n_));
                bicg_->preconditioner().setDroptol(1e-6);
                bicg_->preconditioner().setFillfactor(20);
                bicg_->compute(a);
                if (bicg_->info() != Eigen::Success) throw SolverError("ILUT preconditioner failed");
            }
        }
    }

    bool direct() const noexcept { return direct_; }

    Vector solve(const Vector& b) const {
        if (b.size() != n_) throw SolverError("right-hand side has wrong size");
        if (n_ == 0) return Vector();
        Vector x;
        if (ldlt_) {
            x = ldlt_->solve(b);
        } else if (lu_) {
            x = lu_->solve(b);
        } else if (cg_) {
            x = cg_->solve(b);
            if (cg_->info() != Eigen::Success) throw SolverError("conjugate gradient did not converge");
        } else {
            x = bicg_->solve(b);
            if (bicg_->info() != Eigen::Success) throw SolverError("BiCGSTAB did not converge");
        }
        if (!x.allFinite()) throw SolverError("linear solve produced non-finite values");
        return x;
    }

private:
    using CG = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                        Eigen::IncompleteCholesky<double>>;
    using BiCG = Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>>;

    Structure structure_;
    Eigen::Index n_;
    bool direct_ = true;
    std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
    std::unique_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
    std::unique_ptr<CG> cg_;
    std::unique_ptr<BiCG> bicg_;
};

inline SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& t) {
    SparseMatrix a(rows, cols);
    a.setFromTriplets(t.begin(), t.end());
    a.makeCompressed();
    return a;
}

}  // namespace zrp::linalg

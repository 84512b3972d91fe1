#pragma once

#include "bilearn/errors.hpp"
#include "bilearn/operators.hpp"

#include <Eigen/SparseCholesky>
#ifdef BILEARN_WITH_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include <string>

namespace bilearn::detail {

// Solves K x = b for sparse SPD K. Supernodal CHOLMOD when available, with
// Eigen's simplicial LDL^T as the fallback for builds without it or for
// matrices CHOLMOD rejects as numerically indefinite.
inline Eigen::VectorXd spd_solve(const SpMat& k, const Eigen::VectorXd& b, const char* what) {
#ifdef BILEARN_WITH_CHOLMOD
  {
    Eigen::CholmodSupernodalLLT<SpMat> llt(k);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd x = llt.solve(b);
      if (x.allFinite()) return x;
    }
  }
#endif
  Eigen::SimplicialLDLT<SpMat> ldlt(k);
  if (ldlt.info() != Eigen::Success) throw LinearSolveFailure(std::string(what) + ": factorisation failed");
  Eigen::VectorXd x = ldlt.solve(b);
  if (!x.allFinite()) throw LinearSolveFailure(std::string(what) + ": solution is not finite");
  return x;
}

}  // namespace bilearn::detail

#pragma once

#include <Eigen/Dense>

namespace phonoloc::linalg {

struct Eigensystem {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // columns match values
};

/// Full eigendecomposition of a real symmetric matrix with a reproducible
/// ordering and gauge.
///
/// Eigenpairs are sorted by descending eigenvalue. Every eigenvector is
/// signed so that its largest-magnitude entry is positive (ties go to the
/// lowest site index). Inside a degenerate cluster of a mirror-symmetric
/// matrix (invariant under j -> N-1-j) the cluster is rotated onto parity
/// eigenvectors, even ones first.
Eigensystem symmetric_eigensystem(const Eigen::MatrixXd& m);

/// Sign convention used by symmetric_eigensystem, exposed for reuse.
void fix_gauge(Eigen::Ref<Eigen::VectorXd> v);

/// +1 / -1 for even / odd vectors under site reversal, 0 otherwise.
int mirror_parity(const Eigen::Ref<const Eigen::VectorXd>& v, double tol = 1e-8);

bool is_mirror_symmetric(const Eigen::MatrixXd& m, double tol = 1e-13);

}  // namespace phonoloc::linalg

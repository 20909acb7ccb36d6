#include "phonoloc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace phonoloc::linalg {

namespace {

Eigen::MatrixXd reversed_rows(const Eigen::MatrixXd& m) {
    return m.colwise().reverse();
}

// Orthonormal basis of the column span of `block`, dropping directions whose
// singular value falls below `tol`.
Eigen::MatrixXd column_basis(const Eigen::MatrixXd& block, double tol) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > tol) ++rank;
    }
    return svd.matrixU().leftCols(rank);
}

void resolve_parity(Eigen::MatrixXd& vectors, Eigen::Index begin, Eigen::Index end) {
    const Eigen::Index k = end - begin;
    const Eigen::MatrixXd cluster = vectors.middleCols(begin, k);
    const Eigen::MatrixXd mirrored = reversed_rows(cluster);
    const Eigen::MatrixXd even = column_basis(0.5 * (cluster + mirrored), 1e-6);
    const Eigen::MatrixXd odd = column_basis(0.5 * (cluster - mirrored), 1e-6);
    if (even.cols() + odd.cols() != k) return;
    vectors.middleCols(begin, even.cols()) = even;
    vectors.middleCols(begin + even.cols(), odd.cols()) = odd;
}

}  // namespace

void fix_gauge(Eigen::Ref<Eigen::VectorXd> v) {
    if (v.size() == 0) return;
    const double peak = v.cwiseAbs().maxCoeff();
    const double tie = 1e-12 * std::max(peak, 1e-300);
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (std::abs(v(j)) >= peak - tie) {
            if (v(j) < 0.0) v = -v;
            return;
        }
    }
}

int mirror_parity(const Eigen::Ref<const Eigen::VectorXd>& v, double tol) {
    const Eigen::VectorXd r = v.reverse();
    if ((r - v).cwiseAbs().maxCoeff() <= tol) return 1;
    if ((r + v).cwiseAbs().maxCoeff() <= tol) return -1;
    return 0;
}

bool is_mirror_symmetric(const Eigen::MatrixXd& m, double tol) {
    const Eigen::MatrixXd r = m.reverse();
    return (r - m).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

Eigensystem symmetric_eigensystem(const Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    Eigensystem out;
    if (n == 0) return out;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();

    const double scale = std::max(1.0, out.values.cwiseAbs().maxCoeff());
    if (is_mirror_symmetric(m)) {
        Eigen::Index begin = 0;
        while (begin < n) {
            Eigen::Index end = begin + 1;
            while (end < n && std::abs(out.values(end - 1) - out.values(end)) <= 1e-10 * scale) ++end;
            if (end - begin > 1) resolve_parity(out.vectors, begin, end);
            begin = end;
        }
    }

    for (Eigen::Index c = 0; c < n; ++c) fix_gauge(out.vectors.col(c));
    return out;
}

}  // namespace phonoloc::linalg

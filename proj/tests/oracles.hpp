// Dense reference computations used as independent oracles in the tests.
// Nothing here calls into the Gram-Schmidt kernels under test.
#ifndef LOWSYNC_TESTS_ORACLES_HPP
#define LOWSYNC_TESTS_ORACLES_HPP

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lowsync/qr.hpp"
#include "lowsync/vector.hpp"

namespace lowsync::testing {

inline Eigen::MatrixXd to_matrix(std::span<const DistVector> cols)
{
    if (cols.empty()) {
        return {};
    }
    Eigen::MatrixXd a(static_cast<Eigen::Index>(cols[0].size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t i = 0; i < cols[j].size(); ++i) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
        }
    }
    return a;
}

inline Eigen::MatrixXd r_matrix(const QRFactorization& fac)
{
    const auto k = static_cast<Eigen::Index>(fac.active());
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = i; j < k; ++j) {
            r(i, j) = fac.r(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
    }
    return r;
}

struct DenseQR {
    Eigen::MatrixXd q;
    Eigen::MatrixXd r;
};

/// Thin Householder QR with R's diagonal made positive.
inline DenseQR householder_qr(const Eigen::MatrixXd& a)
{
    const Eigen::Index n = a.rows();
    const Eigen::Index k = a.cols();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    DenseQR out;
    out.q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
    out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < k; ++j) {
        if (out.r(j, j) < 0.0) {
            out.r.row(j) *= -1.0;
            out.q.col(j) *= -1.0;
        }
    }
    return out;
}

inline double condition_number(const Eigen::MatrixXd& a)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    return s(0) / s(s.size() - 1);
}

/// Least-squares weights from the normal equations (FᵀF)γ = Fᵀf, formed
/// and solved in extended precision.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& f_window, const Eigen::VectorXd& f)
{
    using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const MatrixL a = f_window.cast<long double>();
    const MatrixL gram = a.transpose() * a;
    const VectorL rhs = a.transpose() * f.cast<long double>();
    const VectorL gamma = gram.ldlt().solve(rhs);
    return gamma.cast<double>();
}

inline DistVector random_vector(const LayoutPtr& layout, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    DistVector v(layout);
    for (auto& x : v.values()) {
        x = normal(rng);
    }
    return v;
}

inline Eigen::VectorXd to_eigen(const DistVector& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.values().data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace lowsync::testing

#endif

#include "lowsync/qr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace lowsync {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_layout(const QRFactorization& fac, const DistVector& v, const char* kernel)
{
    if (!(*fac.layout() == *v.layout())) {
        throw LayoutMismatch(std::string(kernel) + ": vector layout differs from factorization");
    }
}

void require_room(const QRFactorization& fac, const char* kernel)
{
    if (fac.empty()) {
        throw std::logic_error(std::string(kernel) + ": factorization has no columns, use qr_init");
    }
    if (fac.full()) {
        throw std::logic_error(std::string(kernel) + ": factorization is full");
    }
}

// Breakdown when the projected norm falls below 10·ε·√n times the norm of
// the incoming vector. The incoming norm is recovered from the coefficients
// (‖v‖² = ‖r‖² + ρ² for orthonormal Q), so the test costs no reduction.
void check_breakdown(double projected, std::span<const double> coeffs, std::size_t n, const char* kernel)
{
    double sq = projected * projected;
    for (double c : coeffs) {
        sq += c * c;
    }
    const double threshold = 10.0 * kEps * std::sqrt(static_cast<double>(n)) * std::sqrt(sq);
    if (!(projected > threshold) || !std::isfinite(projected)) {
        throw QRBreakdown(std::string(kernel) + ": new column is numerically dependent on the window");
    }
}

} // namespace

std::string_view to_string(OrthoMethod method) noexcept
{
    switch (method) {
    case OrthoMethod::mgs: return "mgs";
    case OrthoMethod::icwy: return "icwy";
    case OrthoMethod::cgs2: return "cgs2";
    case OrthoMethod::dcgs2: return "dcgs2";
    }
    return "unknown";
}

std::optional<OrthoMethod> parse_ortho_method(std::string_view name) noexcept
{
    for (auto m : kAllMethods) {
        if (to_string(m) == name) {
            return m;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// QRFactorization

QRFactorization::QRFactorization(LayoutPtr layout, std::size_t capacity, bool with_correction)
    : layout_(std::move(layout)), capacity_(capacity)
{
    if (!layout_) {
        throw std::invalid_argument("QRFactorization: null layout");
    }
    if (capacity_ == 0) {
        throw std::invalid_argument("QRFactorization: capacity must be at least 1");
    }
    q_.reserve(capacity_);
    r_.assign(capacity_ * capacity_, 0.0);
    if (with_correction) {
        t_.assign(capacity_ * capacity_, 0.0);
    }
}

std::vector<double> QRFactorization::r_column(std::size_t j) const
{
    std::vector<double> col(active_);
    for (std::size_t i = 0; i < active_; ++i) {
        col[i] = r(i, j);
    }
    return col;
}

void QRFactorization::clear() noexcept
{
    q_.clear();
    active_ = 0;
    std::fill(r_.begin(), r_.end(), 0.0);
    std::fill(t_.begin(), t_.end(), 0.0);
}

void QRFactorization::append_column(DistVector v, std::span<const double> coeffs, double norm)
{
    const std::size_t k = active_;
    for (std::size_t i = 0; i < k; ++i) {
        r(i, k) = coeffs[i];
    }
    r(k, k) = norm;
    if (has_correction()) {
        t(k, k) = 1.0;
    }
    scale(v, 1.0 / norm);
    q_.push_back(std::move(v));
    ++active_;
}

void QRFactorization::drop_last() noexcept
{
    if (active_ == 0) {
        return;
    }
    --active_;
    q_.pop_back();
    for (std::size_t i = 0; i < capacity_; ++i) {
        r(i, active_) = 0.0;
        r(active_, i) = 0.0;
        if (has_correction()) {
            t(i, active_) = 0.0;
            t(active_, i) = 0.0;
        }
    }
}

// ---------------------------------------------------------------------------
// QRAdd kernels

void qr_init(QRFactorization& fac, DistVector v, ReductionLedger& ledger)
{
    require_layout(fac, v, "qr_init");
    if (!fac.empty()) {
        throw std::logic_error("qr_init: factorization already has columns");
    }
    const double norm = norm2(v, ledger, Phase::qradd);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw QRBreakdown("qr_init: zero or non-finite first column");
    }
    fac.append_column(std::move(v), {}, norm);
}

void qradd_mgs(QRFactorization& fac, DistVector v, ReductionLedger& ledger)
{
    require_layout(fac, v, "qradd_mgs");
    require_room(fac, "qradd_mgs");
    const auto q = fac.q();
    std::vector<double> coeffs(q.size());
    for (std::size_t j = 0; j < q.size(); ++j) {
        coeffs[j] = dot(q[j], v, ledger, Phase::qradd);
        axpy(-coeffs[j], q[j], v);
    }
    const double norm = norm2(v, ledger, Phase::qradd);
    check_breakdown(norm, coeffs, v.size(), "qradd_mgs");
    fac.append_column(std::move(v), coeffs, norm);
}

void qradd_icwy(QRFactorization& fac, DistVector v, ReductionLedger& ledger)
{
    require_layout(fac, v, "qradd_icwy");
    require_room(fac, "qradd_icwy");
    if (!fac.has_correction()) {
        throw std::logic_error("qradd_icwy: factorization was built without the correction matrix");
    }
    const auto q = fac.q();
    const std::size_t k = q.size();
    const std::size_t last = k - 1;

    // T row of the newest existing column (delayed) merged with Qᵀv.
    auto pending = begin_delayed_multi_dot(q, q[last], Phase::qradd);
    pending.append(q, v);
    const auto sums = pending.finalize(ledger);

    for (std::size_t j = 0; j < last; ++j) {
        fac.t(last, j) = sums[j];
    }
    fac.t(last, last) = 1.0;

    std::vector<double> coeffs(sums.begin() + static_cast<std::ptrdiff_t>(k), sums.end());
    // coeffs ← T⁻¹ coeffs, T unit lower triangular
    for (std::size_t i = 1; i < k; ++i) {
        double acc = coeffs[i];
        for (std::size_t j = 0; j < i; ++j) {
            acc -= fac.t(i, j) * coeffs[j];
        }
        coeffs[i] = acc;
    }

    gemv_update(v, q, coeffs);
    const double norm = norm2(v, ledger, Phase::qradd);
    check_breakdown(norm, coeffs, v.size(), "qradd_icwy");
    fac.append_column(std::move(v), coeffs, norm);
}

void qradd_cgs2(QRFactorization& fac, DistVector v, ReductionLedger& ledger)
{
    require_layout(fac, v, "qradd_cgs2");
    require_room(fac, "qradd_cgs2");
    const auto q = fac.q();

    auto coeffs = fused_multi_dot(q, v, ledger, Phase::qradd);
    gemv_update(v, q, coeffs);
    const auto z = fused_multi_dot(q, v, ledger, Phase::qradd);
    gemv_update(v, q, z);
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        coeffs[j] += z[j];
    }

    const double norm = norm2(v, ledger, Phase::qradd);
    check_breakdown(norm, coeffs, v.size(), "qradd_cgs2");
    fac.append_column(std::move(v), coeffs, norm);
}

void qradd_dcgs2(QRFactorization& fac, DistVector v, ReductionLedger& ledger)
{
    require_layout(fac, v, "qradd_dcgs2");
    require_room(fac, "qradd_dcgs2");
    auto q = fac.q();
    const std::size_t k = q.size();
    const std::size_t last = k - 1;
    // The new column count is k + 1; the delayed reorthogonalization of the
    // previous column only runs once that count exceeds 3.
    const bool reorthogonalize = k + 1 > 3;

    auto pending = begin_delayed_multi_dot(q, v, Phase::qradd);
    if (reorthogonalize) {
        pending.append(q.first(last), q[last]);
    }
    const auto sums = pending.finalize(ledger);
    std::vector<double> coeffs(sums.begin(), sums.begin() + static_cast<std::ptrdiff_t>(k));

    if (reorthogonalize) {
        const std::span<const double> s(sums.data() + k, last);
        gemv_update(q[last], q.first(last), s);
        // Q_{:,last} is already normalized, so its R column absorbs ρ·s.
        const double rho = fac.r(last, last);
        for (std::size_t j = 0; j < last; ++j) {
            fac.r(j, last) += rho * s[j];
        }
    }

    gemv_update(v, q, coeffs);
    const double norm = norm2(v, ledger, Phase::qradd);
    check_breakdown(norm, coeffs, v.size(), "qradd_dcgs2");
    fac.append_column(std::move(v), coeffs, norm);
}

void qradd(OrthoMethod method, QRFactorization& fac, DistVector v, ReductionLedger& ledger)
{
    if (fac.empty()) {
        qr_init(fac, std::move(v), ledger);
        return;
    }
    switch (method) {
    case OrthoMethod::mgs: qradd_mgs(fac, std::move(v), ledger); return;
    case OrthoMethod::icwy: qradd_icwy(fac, std::move(v), ledger); return;
    case OrthoMethod::cgs2: qradd_cgs2(fac, std::move(v), ledger); return;
    case OrthoMethod::dcgs2: qradd_dcgs2(fac, std::move(v), ledger); return;
    }
    throw std::invalid_argument("qradd: unknown method");
}

// ---------------------------------------------------------------------------
// QRDelete

void qrdelete_givens(QRFactorization& fac)
{
    const std::size_t k = fac.active();
    if (k < 2) {
        throw std::logic_error("qrdelete_givens: need at least two active columns");
    }
    const std::size_t cols = k - 1;
    // H = R_{:,1:k}, a k×(k−1) upper Hessenberg block
    std::vector<double> h(k * cols);
    auto H = [&h, cols](std::size_t i, std::size_t j) -> double& { return h[i * cols + j]; };
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            H(i, j) = fac.r(i, j + 1);
        }
    }

    auto q = fac.q();
    for (std::size_t j = 0; j < cols; ++j) {
        const double a = H(j, j);
        const double b = H(j + 1, j);
        const double rho = std::hypot(a, b);
        if (rho == 0.0) {
            continue;
        }
        const double c = a / rho;
        const double s = b / rho;
        H(j, j) = rho;
        H(j + 1, j) = 0.0;
        for (std::size_t jj = j + 1; jj < cols; ++jj) {
            const double x = H(j, jj);
            const double y = H(j + 1, jj);
            H(j, jj) = c * x + s * y;
            H(j + 1, jj) = -s * x + c * y;
        }
        auto qa = q[j].values();
        auto qb = q[j + 1].values();
        for (std::size_t i = 0; i < qa.size(); ++i) {
            const double x = qa[i];
            const double y = qb[i];
            qa[i] = c * x + s * y;
            qb[i] = -s * x + c * y;
        }
    }

    fac.drop_last();
    for (std::size_t i = 0; i < cols; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            fac.r(i, j) = H(i, j);
        }
    }
}

void qrdelete_icwy(QRFactorization& fac, ReductionLedger& ledger)
{
    if (!fac.has_correction()) {
        throw std::logic_error("qrdelete_icwy: factorization was built without the correction matrix");
    }
    qrdelete_givens(fac);
    const auto q = fac.q();
    const std::size_t k = q.size();

    // strict lower triangle of QᵀQ, row by row, in one reduction
    auto pending = begin_delayed_multi_dot(q.first(0), q[0], Phase::qrdelete);
    for (std::size_t i = 1; i < k; ++i) {
        pending.append(q.first(i), q[i]);
    }
    const auto sums = pending.finalize(ledger);

    std::size_t idx = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            fac.t(i, j) = sums[idx++];
        }
        fac.t(i, i) = 1.0;
        for (std::size_t j = i + 1; j < fac.capacity(); ++j) {
            fac.t(i, j) = 0.0;
        }
    }
}

void qrdelete(OrthoMethod method, QRFactorization& fac, ReductionLedger& ledger)
{
    if (method == OrthoMethod::icwy) {
        qrdelete_icwy(fac, ledger);
    } else {
        qrdelete_givens(fac);
    }
}

void qr_push(OrthoMethod method, QRFactorization& fac, DistVector v, ReductionLedger& ledger)
{
    if (fac.full()) {
        if (fac.active() == 1) {
            // depth-one window: nothing survives the delete
            fac.clear();
        } else {
            qrdelete(method, fac, ledger);
        }
    }
    qradd(method, fac, std::move(v), ledger);
}

std::vector<double> solve_upper(const QRFactorization& fac, std::span<const double> rhs)
{
    const std::size_t k = fac.active();
    if (rhs.size() != k) {
        throw std::invalid_argument("solve_upper: right-hand side length differs from active columns");
    }
    std::vector<double> x(rhs.begin(), rhs.end());
    for (std::size_t ii = k; ii-- > 0;) {
        const double d = fac.r(ii, ii);
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw QRBreakdown("solve_upper: singular R diagonal");
        }
        double acc = x[ii];
        for (std::size_t j = ii + 1; j < k; ++j) {
            acc -= fac.r(ii, j) * x[j];
        }
        x[ii] = acc / d;
    }
    return x;
}

double loss_of_orthogonality(std::span<const DistVector> cols)
{
    double sq = 0.0;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double g = exact_dot(cols[i].values(), cols[j].values());
            const double d = (i == j ? 1.0 : 0.0) - g;
            sq += d * d;
        }
    }
    return std::sqrt(sq);
}

std::vector<DistVector> make_ortho_test_matrix(const OrthoTestMatrix& spec, std::uint64_t seed, std::size_t shards)
{
    if (spec.m > spec.n) {
        throw std::invalid_argument("make_ortho_test_matrix: more columns than rows");
    }
    if (spec.m == 0) {
        throw std::invalid_argument("make_ortho_test_matrix: need at least one column");
    }
    if (!(spec.kappa_target >= 1.0)) {
        throw std::invalid_argument("make_ortho_test_matrix: kappa_target must be at least 1");
    }
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto m = static_cast<Eigen::Index>(spec.m);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    auto gaussian = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd g(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (Eigen::Index i = 0; i < rows; ++i) {
                g(i, j) = normal(rng);
            }
        }
        return g;
    };
    const Eigen::MatrixXd u = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(n, m)).householderQ()
                              * Eigen::MatrixXd::Identity(n, m);
    const Eigen::MatrixXd v = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(m, m)).householderQ()
                              * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd sigma(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double t = m > 1 ? static_cast<double>(j) / static_cast<double>(m - 1) : 0.0;
        sigma(j) = std::pow(spec.kappa_target, -t);
    }
    const Eigen::MatrixXd a = u * sigma.asDiagonal() * v.transpose();

    const auto layout = ShardLayout::make(spec.n, shards);
    std::vector<DistVector> out;
    out.reserve(spec.m);
    for (Eigen::Index j = 0; j < m; ++j) {
        std::vector<double> col(a.col(j).data(), a.col(j).data() + n);
        out.emplace_back(layout, std::move(col));
    }
    return out;
}

} // namespace lowsync

#ifndef LOWSYNC_QR_HPP
#define LOWSYNC_QR_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "lowsync/vector.hpp"

namespace lowsync {

/// Orthogonalization kernel used to append a column to the QR factorization.
enum class OrthoMethod : std::uint8_t { mgs, icwy, cgs2, dcgs2 };

inline constexpr std::array<OrthoMethod, 4> kAllMethods = {
    OrthoMethod::mgs, OrthoMethod::icwy, OrthoMethod::cgs2, OrthoMethod::dcgs2};

std::string_view to_string(OrthoMethod method) noexcept;
std::optional<OrthoMethod> parse_ortho_method(std::string_view name) noexcept;

/// The appended column is numerically dependent on the existing ones.
class QRBreakdown : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incremental thin QR factorization of a sliding window of at most
/// capacity() columns.
///
/// Q holds the active columns; R is upper triangular with a positive
/// diagonal. When the correction is enabled, T stores I + L with L the
/// strictly lower triangle of QᵀQ, so that T⁻¹ is the inverse compact WY
/// correction applied by the ICWY kernel.
class QRFactorization {
public:
    QRFactorization(LayoutPtr layout, std::size_t capacity, bool with_correction = false);

    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] std::size_t active() const noexcept { return active_; }
    [[nodiscard]] bool full() const noexcept { return active_ == capacity_; }
    [[nodiscard]] bool empty() const noexcept { return active_ == 0; }
    [[nodiscard]] bool has_correction() const noexcept { return !t_.empty(); }
    [[nodiscard]] const LayoutPtr& layout() const noexcept { return layout_; }

    /// Active columns of Q.
    [[nodiscard]] std::span<const DistVector> q() const noexcept { return {q_.data(), active_}; }
    [[nodiscard]] std::span<DistVector> q() noexcept { return {q_.data(), active_}; }

    [[nodiscard]] double r(std::size_t i, std::size_t j) const noexcept { return r_[i * capacity_ + j]; }
    double& r(std::size_t i, std::size_t j) noexcept { return r_[i * capacity_ + j]; }
    [[nodiscard]] double t(std::size_t i, std::size_t j) const noexcept { return t_[i * capacity_ + j]; }
    double& t(std::size_t i, std::size_t j) noexcept { return t_[i * capacity_ + j]; }

    /// Column j of R restricted to the active rows.
    [[nodiscard]] std::vector<double> r_column(std::size_t j) const;

    void clear() noexcept;

    /// Writes Q's next column as v/norm with R column coeffs (norm on the
    /// diagonal) and increments the active count.
    void append_column(DistVector v, std::span<const double> coeffs, double norm);

    /// Drops Q's last active column after a downdate.
    void drop_last() noexcept;

private:
    LayoutPtr layout_;
    std::size_t capacity_;
    std::size_t active_ = 0;
    std::vector<DistVector> q_;
    std::vector<double> r_;
    std::vector<double> t_;
};

/// First column: Q₀ = v/‖v‖, R₀₀ = ‖v‖. One reduction (qradd).
void qr_init(QRFactorization& fac, DistVector v, ReductionLedger& ledger);

/// Modified Gram-Schmidt: one reduction per existing column plus the norm.
void qradd_mgs(QRFactorization& fac, DistVector v, ReductionLedger& ledger);
/// Inverse compact WY MGS: the T row of the previous column is merged with
/// Qᵀv into one reduction, then the norm. Two reductions.
void qradd_icwy(QRFactorization& fac, DistVector v, ReductionLedger& ledger);
/// Classical Gram-Schmidt with reorthogonalization. Three reductions.
void qradd_cgs2(QRFactorization& fac, DistVector v, ReductionLedger& ledger);
/// Classical Gram-Schmidt with the previous column's reorthogonalization
/// delayed into the current reduction. Two reductions.
void qradd_dcgs2(QRFactorization& fac, DistVector v, ReductionLedger& ledger);

/// Dispatches to qr_init when empty, otherwise to the method's kernel.
void qradd(OrthoMethod method, QRFactorization& fac, DistVector v, ReductionLedger& ledger);

/// Removes the oldest column via Givens rotations; no reductions.
void qrdelete_givens(QRFactorization& fac);
/// qrdelete_givens followed by a one-reduction rebuild of T (qrdelete).
void qrdelete_icwy(QRFactorization& fac, ReductionLedger& ledger);
void qrdelete(OrthoMethod method, QRFactorization& fac, ReductionLedger& ledger);

/// Sliding-window append: deletes the oldest column when full, then adds v.
void qr_push(OrthoMethod method, QRFactorization& fac, DistVector v, ReductionLedger& ledger);

/// Solves R γ = rhs over the active block by back substitution.
std::vector<double> solve_upper(const QRFactorization& fac, std::span<const double> rhs);

/// ‖I − QᵀQ‖_F over the given columns.
double loss_of_orthogonality(std::span<const DistVector> cols);

/// Parameters of a synthetic column block with prescribed conditioning.
struct OrthoTestMatrix {
    std::size_t n = 500;
    std::size_t m = 20;
    double kappa_target = 1.0;
    double eps = std::numeric_limits<double>::epsilon();
};

/// Columns of U·Σ·Vᵀ with Haar-like random U (n×m), V (m×m) and singular
/// values geometrically spaced from 1 down to 1/kappa_target.
std::vector<DistVector> make_ortho_test_matrix(const OrthoTestMatrix& spec, std::uint64_t seed,
                                               std::size_t shards = 1);

} // namespace lowsync

#endif

#ifndef LOWSYNC_PCG_HPP
#define LOWSYNC_PCG_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "lowsync/vector.hpp"

namespace lowsync {

class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    [[nodiscard]] virtual LayoutPtr layout() const = 0;
    /// y ← A x
    virtual void apply(const DistVector& x, DistVector& y) const = 0;
    /// Main diagonal of A, used by the Jacobi preconditioner.
    [[nodiscard]] virtual DistVector diagonal() const = 0;

    [[nodiscard]] std::size_t dimension() const { return layout()->size(); }
};

enum class Preconditioner { none, jacobi };

struct PCGConfig {
    double rel_tol = 1e-10;
    std::size_t max_iters = 20000;
    Preconditioner preconditioner = Preconditioner::jacobi;
};

/// pᵀAp ≤ 0 was encountered.
class IndefiniteOperator : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PCGResult {
    explicit PCGResult(DistVector x0) : x(std::move(x0)) {}

    DistVector x;
    std::size_t iterations = 0;
    bool converged = false;
    /// ‖b − Ax‖₂ / ‖b‖₂ of the returned x.
    double relative_residual = 0.0;
    /// rᵀM⁻¹r at the start of each iteration and at exit.
    std::vector<double> precond_residual;
};

/// Preconditioned conjugate gradients for SPD A, started from x0. Converged
/// means ‖b − Ax‖₂ ≤ rel_tol·‖b‖₂ for the true residual; reductions are
/// counted in `phase`.
PCGResult pcg_solve(const LinearOperator& a, const DistVector& b, const PCGConfig& config, DistVector x0,
                    ReductionLedger& ledger, Phase phase = Phase::other);

/// z = D⁻¹ r. Throws std::invalid_argument on a zero diagonal entry.
DistVector jacobi_apply(const DistVector& diagonal, const DistVector& r);

} // namespace lowsync

#endif

#include "lowsync/pcg.hpp"

#include <cmath>

namespace lowsync {

DistVector jacobi_apply(const DistVector& diagonal, const DistVector& r)
{
    if (!same_layout(diagonal, r)) {
        throw LayoutMismatch("jacobi_apply: diagonal and residual layouts differ");
    }
    DistVector z(r.layout());
    const auto d = diagonal.values();
    const auto rv = r.values();
    auto zv = z.values();
    for (std::size_t i = 0; i < zv.size(); ++i) {
        if (d[i] == 0.0) {
            throw std::invalid_argument("jacobi_apply: zero diagonal entry");
        }
        zv[i] = rv[i] / d[i];
    }
    return z;
}

PCGResult pcg_solve(const LinearOperator& a, const DistVector& b, const PCGConfig& config, DistVector x0,
                    ReductionLedger& ledger, Phase phase)
{
    if (!(config.rel_tol > 0.0)) {
        throw std::invalid_argument("pcg_solve: rel_tol must be positive");
    }
    if (!(*a.layout() == *b.layout()) || !same_layout(b, x0)) {
        throw LayoutMismatch("pcg_solve: operator, right-hand side and guess layouts differ");
    }
    const auto layout = b.layout();
    const bool jacobi = config.preconditioner == Preconditioner::jacobi;
    const DistVector diag = jacobi ? a.diagonal() : DistVector(layout);

    auto precondition = [&](const DistVector& r) { return jacobi ? jacobi_apply(diag, r) : r; };

    PCGResult result(std::move(x0));
    auto& x = result.x;

    const double b_norm = norm2(b, ledger, phase);
    if (b_norm == 0.0) {
        x.fill(0.0);
        result.converged = true;
        return result;
    }
    const double target = config.rel_tol * b_norm;

    DistVector r(layout);
    DistVector ap(layout);
    auto true_residual = [&]() {
        a.apply(x, ap);
        linear_sum(1.0, b, -1.0, ap, r);
        return norm2(r, ledger, phase);
    };

    double r_norm = true_residual();
    DistVector z = precondition(r);
    DistVector p = z;
    double rz = dot(r, z, ledger, phase);
    result.precond_residual.push_back(rz);

    std::size_t it = 0;
    while (true) {
        if (r_norm <= target) {
            // confirm against the true residual before accepting
            r_norm = true_residual();
            if (r_norm <= target) {
                result.converged = true;
                break;
            }
            z = precondition(r);
            p = z;
            rz = dot(r, z, ledger, phase);
        }
        if (it == config.max_iters) {
            break;
        }
        a.apply(p, ap);
        const double pap = dot(p, ap, ledger, phase);
        if (!(pap > 0.0)) {
            throw IndefiniteOperator("pcg_solve: operator is not positive definite (pᵀAp ≤ 0)");
        }
        const double alpha = rz / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        z = precondition(r);
        // r·r and r·z share one fused reduction
        auto pending = begin_delayed_multi_dot(std::span<const DistVector>(&r, 1), r, phase);
        pending.append(std::span<const DistVector>(&z, 1), r);
        const auto sums = pending.finalize(ledger);
        r_norm = std::sqrt(sums[0]);
        const double rz_next = sums[1];
        const double beta = rz_next / rz;
        rz = rz_next;
        result.precond_residual.push_back(rz);
        linear_sum(1.0, z, beta, p, p);
        ++it;
    }
    result.iterations = it;
    result.relative_residual = r_norm / b_norm;
    return result;
}

} // namespace lowsync

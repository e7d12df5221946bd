#include "lowsync/anderson.hpp"

#include <cmath>
#include <stdexcept>

namespace lowsync {

void validate(const AAConfig& config)
{
    if (config.m < 1) {
        throw std::invalid_argument("AAConfig: window depth m must be at least 1");
    }
    if (!(config.tol > 0.0)) {
        throw std::invalid_argument("AAConfig: tol must be positive");
    }
    if (config.max_iters < 1) {
        throw std::invalid_argument("AAConfig: max_iters must be at least 1");
    }
}

AAState::AAState(LayoutPtr layout, const AAConfig& config)
    : method_(config.orth_method), fac_(layout, config.m, config.orth_method == OrthoMethod::icwy)
{
    dg_.reserve(config.m);
}

const DistVector& AAState::delta_g(std::size_t j) const
{
    if (j >= dg_.size()) {
        throw std::out_of_range("AAState::delta_g: column outside the window");
    }
    return dg_[(dg_head_ + j) % dg_.size()];
}

void AAState::push_delta_g(DistVector dg)
{
    if (dg_.size() < fac_.capacity()) {
        dg_.push_back(std::move(dg));
        return;
    }
    dg_[dg_head_] = std::move(dg);
    dg_head_ = (dg_head_ + 1) % dg_.size();
}

void AAState::clear()
{
    fac_.clear();
    dg_.clear();
    dg_head_ = 0;
    gamma_.clear();
}

std::vector<double> lsp_solve(AAState& state, DistVector delta_f, const DistVector& f, ReductionLedger& ledger)
{
    auto& fac = state.fac_;
    qr_push(state.method_, fac, std::move(delta_f), ledger);
    const auto rhs = fused_multi_dot(fac.q(), f, ledger, Phase::lsp_rhs);
    state.gamma_ = solve_upper(fac, rhs);
    ++state.iteration_;
    return state.gamma_;
}

namespace {

void require_problem_layout(const FixedPointProblem& problem, const DistVector& x0)
{
    if (!(*problem.layout() == *x0.layout())) {
        throw LayoutMismatch("solve: initial guess does not match the problem layout");
    }
}

} // namespace

SolveResult aa_solve(const FixedPointProblem& problem, const AAConfig& config, const DistVector& x0,
                     ReductionLedger& ledger, const SolveOptions& options)
{
    validate(config);
    require_problem_layout(problem, x0);
    const auto layout = x0.layout();

    AAState state(layout, config);
    DistVector x = x0;
    DistVector g(layout);
    problem.eval(x, g, ledger);
    DistVector f_prev(layout);
    linear_sum(1.0, g, -1.0, x, f_prev);
    DistVector g_prev = g;
    x = g;

    SolveResult result(x);
    bool previous_breakdown = false;
    DistVector f(layout);
    DistVector step(layout);

    for (std::size_t i = 1; i <= config.max_iters; ++i) {
        problem.eval(x, g, ledger);
        linear_sum(1.0, g, -1.0, x, f);

        DistVector delta_f(layout);
        linear_sum(1.0, f, -1.0, f_prev, delta_f);
        DistVector delta_g(layout);
        linear_sum(1.0, g, -1.0, g_prev, delta_g);

        DistVector x_next = g;
        try {
            const auto gamma = lsp_solve(state, std::move(delta_f), f, ledger);
            state.push_delta_g(std::move(delta_g));
            for (std::size_t j = 0; j < gamma.size(); ++j) {
                axpy(-gamma[j], state.delta_g(j), x_next);
            }
            previous_breakdown = false;
        } catch (const QRBreakdown&) {
            if (previous_breakdown) {
                throw;
            }
            // restart the window from the current iterate with a plain step
            previous_breakdown = true;
            ++result.restarts;
            state.clear();
        }

        linear_sum(1.0, x_next, -1.0, x, step);
        const double update = norm2(step, ledger, Phase::norm_check);

        std::swap(f_prev, f);
        copy(g, g_prev);
        x = std::move(x_next);

        result.history.push_back({i, update, state.window(), ledger.snapshot()});
        if (options.keep_iterates) {
            result.iterates.push_back(x);
        }
        result.iterations = i;
        if (update < config.tol) {
            result.converged = true;
            break;
        }
    }
    result.x = std::move(x);
    return result;
}

SolveResult fp_solve(const FixedPointProblem& problem, const AAConfig& config, const DistVector& x0,
                     ReductionLedger& ledger, const SolveOptions& options)
{
    if (!(config.tol > 0.0) || config.max_iters < 1) {
        throw std::invalid_argument("fp_solve: tol must be positive and max_iters at least 1");
    }
    require_problem_layout(problem, x0);
    const auto layout = x0.layout();

    DistVector x = x0;
    DistVector g(layout);
    DistVector step(layout);
    SolveResult result(x);
    for (std::size_t i = 1; i <= config.max_iters; ++i) {
        problem.eval(x, g, ledger);
        linear_sum(1.0, g, -1.0, x, step);
        const double update = norm2(step, ledger, Phase::norm_check);
        std::swap(x, g);
        result.history.push_back({i, update, 0, ledger.snapshot()});
        if (options.keep_iterates) {
            result.iterates.push_back(x);
        }
        result.iterations = i;
        if (update < config.tol) {
            result.converged = true;
            break;
        }
    }
    result.x = std::move(x);
    return result;
}

} // namespace lowsync

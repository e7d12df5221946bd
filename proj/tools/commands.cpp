#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "lowsync/anderson.hpp"
#include "lowsync/perf_model.hpp"
#include "lowsync/problems.hpp"
#include "lowsync/qr.hpp"
#include "svg_plot.hpp"

namespace lowsync::cli {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string num(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::string num(std::uint64_t v)
{
    return std::to_string(v);
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write(std::ostream& os) const
    {
        auto line = [&os](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                os << (i ? "," : "") << cells[i];
            }
            os << '\n';
        };
        line(header);
        for (const auto& r : rows) {
            line(r);
        }
    }
};

enum class Format { csv, svg };

/// Writes `content` to --out, else to $LOWSYNC_OUT_DIR/<default_name>, else to `out`.
void emit(const std::string& content, const std::string& out_path, const std::string& default_name, std::ostream& out,
          std::ostream& err)
{
    std::filesystem::path target;
    if (!out_path.empty()) {
        target = out_path;
    } else if (const char* dir = std::getenv(kOutDirEnv); dir != nullptr && *dir != '\0') {
        std::filesystem::create_directories(dir);
        target = std::filesystem::path(dir) / default_name;
    } else {
        out << content;
        return;
    }
    std::ofstream file(target, std::ios::binary);
    if (!file) {
        throw std::runtime_error("cannot open output file " + target.string());
    }
    file << content;
    if (!file) {
        throw std::runtime_error("failed writing " + target.string());
    }
    err << "wrote " << target.string() << '\n';
}

OrthoMethod method_of(const std::string& name)
{
    const auto m = parse_ortho_method(name);
    if (!m) {
        throw std::invalid_argument("unknown method " + name);
    }
    return *m;
}

std::vector<OrthoMethod> methods_of(const std::vector<std::string>& names)
{
    std::vector<OrthoMethod> out;
    for (const auto& n : names) {
        out.push_back(method_of(n));
    }
    return out;
}

std::vector<BenchPhase> phases_of(const std::vector<std::string>& names)
{
    std::vector<BenchPhase> out;
    for (const auto& n : names) {
        out.push_back(*parse_bench_phase(n));
    }
    return out;
}

const std::vector<std::string> kMethodNames{"mgs", "icwy", "cgs2", "dcgs2"};
const std::vector<std::string> kPhaseNames{"startup", "recycle"};
const std::map<std::string, Format> kFormats{{"csv", Format::csv}, {"svg", Format::svg}};

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
    std::string problem;
    std::string method = "mgs";
    std::size_t m = 5;
    double tol = 1e-10;
    std::size_t max_iters = 100;
    std::size_t grid = 64;
    double lambda = 6.7;
    std::size_t shards = 1;
    std::uint64_t seed = MixtureConfig{}.seed;
    double pcg_tol = 1e-10;
    std::string precond = "jacobi";
    std::size_t em_samples = MixtureConfig{}.samples;
    std::size_t em_replicas = MixtureConfig{}.replicas;
    std::vector<double> em_x0{0.2, 0.4, 0.6};
    std::string out;
    Format format = Format::csv;
};

std::unique_ptr<FixedPointProblem> make_problem(const SolveArgs& a, DistVector*& x0_holder, std::vector<DistVector>& keep)
{
    const PCGConfig pcg{.rel_tol = a.pcg_tol,
                        .preconditioner = a.precond == "none" ? Preconditioner::none : Preconditioner::jacobi};
    const Grid2D grid{a.grid, a.grid};
    std::unique_ptr<FixedPointProblem> problem;
    if (a.problem == "heat1" || a.problem == "heat2") {
        problem = std::make_unique<HeatProblem>(grid, a.problem == "heat1" ? HeatTerm::term1 : HeatTerm::term2,
                                                a.shards, pcg);
        keep.emplace_back(problem->layout());
    } else if (a.problem == "bratu") {
        problem = std::make_unique<BratuProblem>(grid, a.lambda, a.shards, pcg);
        keep.emplace_back(problem->layout());
    } else {
        MixtureConfig config;
        config.samples = a.em_samples;
        config.replicas = a.em_replicas;
        config.seed = a.seed;
        config.initial_means = {a.em_x0[0], a.em_x0[1], a.em_x0[2]};
        config.validate();
        auto em = std::make_unique<MixtureProblem>(config, a.shards);
        keep.push_back(em->initial_guess());
        problem = std::move(em);
    }
    x0_holder = &keep.back();
    return problem;
}

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err)
{
    std::vector<DistVector> keep;
    DistVector* x0 = nullptr;
    const auto problem = make_problem(a, x0, keep);

    ReductionLedger ledger;
    const AAConfig config{.m = std::max<std::size_t>(a.m, 1),
                          .tol = a.tol,
                          .max_iters = a.max_iters,
                          .orth_method = method_of(a.method)};
    const auto result = a.m == 0 ? fp_solve(*problem, config, *x0, ledger) : aa_solve(*problem, config, *x0, ledger);

    const std::string label = a.m == 0 ? "fp" : a.method;
    const std::string stem = "solve_" + a.problem + "_" + label + "_m" + std::to_string(a.m);

    if (a.format == Format::svg) {
        Series series{label, {}};
        for (const auto& rec : result.history) {
            series.points.emplace_back(static_cast<double>(rec.iteration), rec.update_norm);
        }
        const PlotSpec spec{"Convergence: " + a.problem, "iteration", "update norm", false, true};
        emit(render_svg(spec, {series}), a.out, stem + ".svg", out, err);
    } else {
        Table t;
        t.header = {"kind",   "iteration", "update_norm", "window", "qradd", "qrdelete", "lsp_rhs", "norm_check", "other",
                    "converged", "restarts", "x_norm", "x_min", "x_max", "x_0", "x_1", "x_2"};
        auto ledger_cells = [](std::vector<std::string>& row, const LedgerSnapshot& s) {
            for (auto phase : kAllPhases) {
                row.push_back(num(s[phase]));
            }
        };
        for (const auto& rec : result.history) {
            std::vector<std::string> row{"iter", num(std::uint64_t{rec.iteration}), num(rec.update_norm),
                                         num(std::uint64_t{rec.window})};
            ledger_cells(row, rec.ledger);
            row.resize(t.header.size());
            t.rows.push_back(std::move(row));
        }
        const auto xs = result.x.values();
        const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
        std::vector<std::string> row{"summary", num(std::uint64_t{result.iterations}),
                                     result.history.empty() ? "" : num(result.history.back().update_norm),
                                     result.history.empty() ? "" : num(std::uint64_t{result.history.back().window})};
        ledger_cells(row, ledger.snapshot());
        row.push_back(result.converged ? "1" : "0");
        row.push_back(num(std::uint64_t{result.restarts}));
        row.push_back(num(std::sqrt(exact_dot(xs, xs))));
        row.push_back(num(*lo));
        row.push_back(num(*hi));
        for (std::size_t i = 0; i < 3; ++i) {
            row.push_back(i < xs.size() ? num(xs[i]) : "");
        }
        t.rows.push_back(std::move(row));
        std::ostringstream os;
        t.write(os);
        emit(os.str(), a.out, stem + ".csv", out, err);
    }

    if (!result.converged) {
        err << "not converged after " << result.iterations << " iterations\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
    std::vector<std::string> methods = kMethodNames;
    std::vector<std::size_t> depths{2, 5, 10, 15, 20};
    std::vector<std::size_t> shards{1, 4, 8};
    std::vector<std::string> phases = kPhaseNames;
    std::size_t n = 4096;
    std::uint64_t seed = 1;
    std::string out;
    Format format = Format::csv;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err)
{
    if (a.format != Format::csv) {
        throw CLI::ValidationError("--format", "bench only writes csv");
    }
    const auto phases = phases_of(a.phases);
    CostParams params;
    params.n = a.n;

    Table t;
    t.header = {"method",         "m",           "p",           "phase",          "measured_qradd", "measured_qrdelete",
                "model_qradd", "model_qrdelete", "predicted_seconds", "match"};
    bool all_match = true;
    for (auto method : methods_of(a.methods)) {
        for (auto m : a.depths) {
            for (auto p : a.shards) {
                const auto layout = ShardLayout::make(a.n, p);
                std::mt19937_64 rng(a.seed);
                std::normal_distribution<double> normal;
                auto random_column = [&] {
                    DistVector v(layout);
                    for (auto& x : v.values()) {
                        x = normal(rng);
                    }
                    return v;
                };
                QRFactorization fac(layout, m, method == OrthoMethod::icwy);
                ReductionLedger ledger;
                for (std::size_t k = 0; k < m; ++k) {
                    qr_push(method, fac, random_column(), ledger);
                }
                const auto startup = ledger.snapshot();
                qr_push(method, fac, random_column(), ledger);
                const auto recycle = ledger.snapshot() - startup;

                for (auto phase : phases) {
                    const bool is_startup = phase == BenchPhase::startup;
                    const auto& measured = is_startup ? startup : recycle;
                    const std::uint64_t model_add =
                        is_startup ? startup_syncs(method, m) : recycle_syncs(method, m, false);
                    const std::uint64_t model_delete =
                        is_startup ? 0 : recycle_syncs(method, m, true) - recycle_syncs(method, m, false);
                    const bool match =
                        measured[Phase::qradd] == model_add && measured[Phase::qrdelete] == model_delete;
                    all_match = all_match && match;
                    t.rows.push_back({std::string(to_string(method)), num(std::uint64_t{m}), num(std::uint64_t{p}),
                                      std::string(to_string(phase)), num(measured[Phase::qradd]),
                                      num(measured[Phase::qrdelete]), num(model_add), num(model_delete),
                                      num(predict_time(params, p, method, m, phase, true)), match ? "1" : "0"});
                }
            }
        }
    }
    std::ostringstream os;
    t.write(os);
    emit(os.str(), a.out, "bench.csv", out, err);
    if (!all_match) {
        err << "measured reduction counts differ from the model\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// ortho

struct OrthoArgs {
    std::vector<std::string> methods = kMethodNames;
    std::vector<double> kappas{1e1, 1e3, 1e6, 1e9};
    std::size_t n = 500;
    std::size_t m = 20;
    std::size_t shards = 1;
    std::uint64_t seed = 1;
    std::string out;
    Format format = Format::csv;
};

double loo_bound(OrthoMethod method, double kappa)
{
    constexpr double c = 100.0;
    switch (method) {
    case OrthoMethod::mgs:
    case OrthoMethod::icwy: return c * kEps * kappa;
    case OrthoMethod::cgs2: return c * kEps;
    case OrthoMethod::dcgs2: return c * kEps * kappa * kappa;
    }
    return 0.0;
}

int cmd_ortho(const OrthoArgs& a, std::ostream& out, std::ostream& err)
{
    Table t;
    t.header = {"method", "kappa", "loo", "bound", "within_bound"};
    std::vector<Series> series;
    for (auto method : methods_of(a.methods)) {
        Series s{std::string(to_string(method)), {}};
        for (double kappa : a.kappas) {
            const auto cols = make_ortho_test_matrix({a.n, a.m, kappa, kEps}, a.seed, a.shards);
            QRFactorization fac(cols[0].layout(), a.m, method == OrthoMethod::icwy);
            ReductionLedger ledger;
            double loo = std::numeric_limits<double>::quiet_NaN();
            try {
                for (const auto& c : cols) {
                    qr_push(method, fac, c, ledger);
                }
                loo = loss_of_orthogonality(fac.q());
            } catch (const QRBreakdown& e) {
                err << to_string(method) << " kappa=" << num(kappa) << ": " << e.what() << '\n';
            }
            const double bound = loo_bound(method, kappa);
            t.rows.push_back({s.name, num(kappa), num(loo), num(bound), loo <= bound ? "1" : "0"});
            if (std::isfinite(loo)) {
                s.points.emplace_back(kappa, std::max(loo, kEps * kEps));
            }
        }
        series.push_back(std::move(s));
    }
    if (a.format == Format::svg) {
        emit(render_svg({"Loss of orthogonality", "condition number", "||I - QtQ||_F", true, true}, series), a.out,
             "ortho.svg", out, err);
    } else {
        std::ostringstream os;
        t.write(os);
        emit(os.str(), a.out, "ortho.csv", out, err);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// model

struct ModelArgs {
    std::vector<std::string> methods = kMethodNames;
    std::vector<std::size_t> depths{2, 3, 4, 5, 6, 8, 10, 15, 20};
    std::vector<std::size_t> shards{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192};
    std::vector<std::string> phases = kPhaseNames;
    CostParams params;
    bool include_delete = false;
    bool crossovers = false;
    std::string out;
    Format format = Format::csv;
};

int cmd_model(const ModelArgs& a, std::ostream& out, std::ostream& err)
{
    a.params.validate();
    const auto methods = methods_of(a.methods);
    const auto phases = phases_of(a.phases);
    auto usable = [](BenchPhase phase, std::size_t m) { return phase == BenchPhase::startup || m >= 2; };

    if (a.crossovers) {
        if (a.format != Format::csv) {
            throw CLI::ValidationError("--crossovers", "crossover tables are csv only");
        }
        Table t;
        t.header = {"method_a", "method_b", "p", "phase", "crossover_m"};
        for (auto phase : phases) {
            for (auto p : a.shards) {
                for (auto ma : methods) {
                    for (auto mb : methods) {
                        if (ma == mb) {
                            continue;
                        }
                        const auto m = crossover_m(a.params, p, ma, mb, phase, a.include_delete);
                        t.rows.push_back({std::string(to_string(ma)), std::string(to_string(mb)),
                                          num(std::uint64_t{p}), std::string(to_string(phase)),
                                          m ? num(std::uint64_t{*m}) : "none"});
                    }
                }
            }
        }
        std::ostringstream os;
        t.write(os);
        emit(os.str(), a.out, "crossovers.csv", out, err);
        return kExitOk;
    }

    if (a.format == Format::svg) {
        const auto phase = phases.front();
        const std::size_t m = a.depths.front();
        if (!usable(phase, m)) {
            throw CLI::ValidationError("--m", "recycle phase needs m >= 2");
        }
        std::vector<Series> series;
        for (auto method : methods) {
            Series s{std::string(to_string(method)), {}};
            for (auto p : a.shards) {
                s.points.emplace_back(static_cast<double>(p), predict_time(a.params, p, method, m, phase, a.include_delete));
            }
            series.push_back(std::move(s));
        }
        const PlotSpec spec{"Predicted " + std::string(to_string(phase)) + " time, m = " + std::to_string(m), "shards p",
                            "seconds", true, true};
        emit(render_svg(spec, series), a.out, "model.svg", out, err);
        return kExitOk;
    }

    Table t;
    t.header = {"method", "m", "p", "phase", "syncs", "predicted_seconds"};
    for (auto method : methods) {
        for (auto phase : phases) {
            for (auto m : a.depths) {
                if (!usable(phase, m)) {
                    continue;
                }
                const auto syncs =
                    phase == BenchPhase::startup ? startup_syncs(method, m) : recycle_syncs(method, m, a.include_delete);
                for (auto p : a.shards) {
                    t.rows.push_back({std::string(to_string(method)), num(std::uint64_t{m}), num(std::uint64_t{p}),
                                      std::string(to_string(phase)), num(syncs),
                                      num(predict_time(a.params, p, method, m, phase, a.include_delete))});
                }
            }
        }
    }
    std::ostringstream os;
    t.write(os);
    emit(os.str(), a.out, "model.csv", out, err);
    return kExitOk;
}

void add_output_options(CLI::App* sub, std::string& out, Format& format)
{
    sub->add_option("--out", out, "Output file (default: stdout, or $" + std::string(kOutDirEnv) + "/<name>)");
    sub->add_option_function<std::string>(
           "--format", [&format](const std::string& name) { format = kFormats.at(name); }, "Output format")
        ->check(CLI::IsMember({"csv", "svg"}))
        ->default_str("csv");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Anderson acceleration with low-synchronization orthogonalization", "lowsync"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    SolveArgs solve;
    auto* s = app.add_subcommand("solve", "Solve a benchmark fixed-point problem");
    s->add_option("problem", solve.problem, "heat1 | heat2 | bratu | em")
        ->required()
        ->check(CLI::IsMember({"heat1", "heat2", "bratu", "em"}));
    s->add_option("--method", solve.method, "Orthogonalization kernel")
        ->check(CLI::IsMember(kMethodNames))
        ->capture_default_str();
    s->add_option("--m", solve.m, "Window depth (0 = plain fixed-point iteration)")->capture_default_str();
    s->add_option("--tol", solve.tol, "Stop when ||x_{i+1} - x_i||_2 < tol")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--max-iters", solve.max_iters, "Iteration cap")->check(CLI::Range(1, 1000000))->capture_default_str();
    s->add_option("--grid", solve.grid, "Interior points per dimension (heat, bratu)")
        ->check(CLI::Range(2, 1 << 14))
        ->capture_default_str();
    s->add_option("--lambda", solve.lambda, "Bratu parameter")->check(CLI::NonNegativeNumber)->capture_default_str();
    s->add_option("--shards", solve.shards, "Simulated shard count")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--seed", solve.seed, "Sample seed (em)")->capture_default_str();
    s->add_option("--pcg-tol", solve.pcg_tol, "Inner PCG relative tolerance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--precond", solve.precond, "Inner preconditioner")
        ->check(CLI::IsMember({"jacobi", "none"}))
        ->capture_default_str();
    s->add_option("--em-samples", solve.em_samples, "Number of mixture samples")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--em-replicas", solve.em_replicas, "Copies of the mean triple in the iterate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--em-x0", solve.em_x0, "Initial means")->expected(3)->delimiter(',')->capture_default_str();
    add_output_options(s, solve.out, solve.format);

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Measure reduction counts of synthetic window fills against the model");
    b->add_option("--method", bench.methods, "Kernels")->delimiter(',')->check(CLI::IsMember(kMethodNames));
    b->add_option("--m", bench.depths, "Window depths")->delimiter(',')->check(CLI::Range(2, 64));
    b->add_option("--shards", bench.shards, "Shard counts")->delimiter(',')->check(CLI::PositiveNumber);
    b->add_option("--phase", bench.phases, "startup, recycle")->delimiter(',')->check(CLI::IsMember(kPhaseNames));
    b->add_option("--n", bench.n, "Vector length")->check(CLI::Range(2, 1 << 26))->capture_default_str();
    b->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
    add_output_options(b, bench.out, bench.format);

    OrthoArgs ortho;
    auto* o = app.add_subcommand("ortho", "Loss of orthogonality against the conditioning of the input block");
    o->add_option("--method", ortho.methods, "Kernels")->delimiter(',')->check(CLI::IsMember(kMethodNames));
    o->add_option("--kappa", ortho.kappas, "Target condition numbers")->delimiter(',')->check(CLI::Range(1.0, 1e15));
    o->add_option("--n", ortho.n, "Rows")->check(CLI::PositiveNumber)->capture_default_str();
    o->add_option("--m", ortho.m, "Columns")->check(CLI::PositiveNumber)->capture_default_str();
    o->add_option("--shards", ortho.shards, "Simulated shard count")->check(CLI::PositiveNumber)->capture_default_str();
    o->add_option("--seed", ortho.seed, "Random seed")->capture_default_str();
    add_output_options(o, ortho.out, ortho.format);

    ModelArgs model;
    auto* md = app.add_subcommand("model", "Tabulate the synchronization cost model");
    md->add_option("--method", model.methods, "Kernels")->delimiter(',')->check(CLI::IsMember(kMethodNames));
    md->add_option("--m", model.depths, "Window depths")->delimiter(',')->check(CLI::Range(1, 64));
    md->add_option("--shards", model.shards, "Shard counts")->delimiter(',')->check(CLI::PositiveNumber);
    md->add_option("--phase", model.phases, "startup, recycle")->delimiter(',')->check(CLI::IsMember(kPhaseNames));
    md->add_option("--latency-a", model.params.latency_per_level, "Seconds per log2(p) level")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    md->add_option("--latency-b", model.params.latency_base, "Base seconds per reduction")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    md->add_option("--flop-rate", model.params.flop_rate, "Flops per second per shard")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    md->add_option("--n", model.params.n, "Global vector length")->check(CLI::PositiveNumber)->capture_default_str();
    md->add_flag("--include-delete", model.include_delete, "Count the QRDelete reduction in recycle iterations");
    md->add_flag("--crossovers", model.crossovers, "Emit the smallest m where method_a beats method_b");
    add_output_options(md, model.out, model.format);

    std::vector<const char*> argv{"lowsync"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (s->parsed()) {
            if (solve.problem == "em" && solve.em_x0.size() != 3) {
                throw CLI::ValidationError("--em-x0", "expects three means");
            }
            return cmd_solve(solve, out, err);
        }
        if (b->parsed()) {
            return cmd_bench(bench, out, err);
        }
        if (o->parsed()) {
            return cmd_ortho(ortho, out, err);
        }
        return cmd_model(model, out, err);
    } catch (const CLI::Error& e) {
        err << e.what() << '\n' << app.help() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

} // namespace lowsync::cli

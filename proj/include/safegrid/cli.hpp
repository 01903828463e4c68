#pragma once
#include <safegrid/dataset.hpp>
#include <safegrid/report.hpp>
#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace safegrid {

struct CommonOptions
{
    std::string data;
    std::string format;    // libsvm | csv; inferred from the extension when empty
    std::string synthetic; // regression | classification
    Index n = 30;
    Index p = 150;
    std::uint64_t seed = 0;
    double noise = 1.0;
    std::string loss;      // lasso | logistic
    std::string reg;       // l1 | enet:<gamma>
    std::optional<double> eps;
    std::optional<double> eps_c;
    std::optional<double> lmin_ratio;
    int max_epochs = 100000;
    std::string out;
};

struct PathOptions
{
    std::string strategy = "unilateral";
    int T = 10;
    double delta = 3;
    std::size_t scan_points = 0;
    std::string csv;
};

struct ValidateOptions
{
    double val_frac = 0.3;
    std::vector<double> eps_v_ladder;
    std::optional<double> mu;
    int T = 200;
};

namespace detail {

inline Dataset acquire_data(const CommonOptions& o)
{
    if (!o.data.empty() && !o.synthetic.empty()) throw ConfigError("use either --data or --synthetic");
    if (!o.data.empty()) {
        std::string fmt = o.format;
        if (fmt.empty()) {
            const bool is_csv = o.data.size() >= 4 && o.data.substr(o.data.size() - 4) == ".csv";
            fmt = is_csv ? "csv" : "libsvm";
        }
        if (fmt != "csv" && fmt != "libsvm") throw ConfigError("unknown format '" + fmt + "'");
        return load_dataset(o.data, fmt == "csv" ? DataFormat::csv : DataFormat::libsvm);
    }
    const std::string kind = o.synthetic.empty() ? "regression" : o.synthetic;
    if (kind != "regression" && kind != "classification") {
        throw ConfigError("unknown synthetic kind '" + kind + "'");
    }
    return synthetic(kind == "regression" ? SyntheticKind::regression : SyntheticKind::classification,
                     o.n, o.p, o.seed, o.noise);
}

inline std::string loss_name(const CommonOptions& o)
{
    if (!o.loss.empty()) return o.loss;
    return o.synthetic == "classification" ? "logistic" : "lasso";
}

inline Loss make_loss(const std::string& name, const Vector& y)
{
    if (name == "lasso") return Loss::squared(y);
    if (name == "logistic") {
        // {-1,+1} labels are accepted and mapped to {0,1}
        if ((y.array() == -1 || y.array() == 1).all() && (y.array() == -1).any()) {
            return Loss::logistic(((y.array() + 1) / 2).matrix());
        }
        return Loss::logistic(y);
    }
    throw ConfigError("unknown loss '" + name + "'");
}

inline Regularizer make_regularizer(const std::string& spec)
{
    if (spec == "l1") return Regularizer::l1();
    if (spec.rfind("enet:", 0) == 0) {
        const std::string g = spec.substr(5);
        std::size_t used = 0;
        double gamma = 0;
        try {
            gamma = std::stod(g, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != g.size()) throw ConfigError("bad elastic net spec '" + spec + "'");
        return Regularizer::elastic_net(gamma);
    }
    throw ConfigError("unknown regularizer '" + spec + "' (use l1 or enet:<gamma>)");
}

// 1e-4 ||y||^2 for least squares, 1e-4 min(n0, n1) / n for logistic.
inline double default_eps(const Loss& loss)
{
    const Vector& y = loss.labels();
    if (loss.kind() == LossKind::squared) return 1e-4 * y.squaredNorm();
    const double n1 = y.sum();
    const double n0 = double(y.size()) - n1;
    return 1e-4 * std::max(std::min(n0, n1), 1.0) / double(y.size());
}

inline json common_echo(const CommonOptions& o, const std::string& loss, const std::string& reg,
                        double eps, double eps_c, double lmin_ratio)
{
    json j{{"loss", loss}, {"reg", reg}, {"eps", eps}, {"eps_c", eps_c}, {"lmin_ratio", lmin_ratio},
           {"max_epochs", o.max_epochs}};
    if (!o.data.empty()) {
        j["data"] = o.data;
    } else {
        j["synthetic"] = o.synthetic.empty() ? "regression" : o.synthetic;
        j["n"] = o.n;
        j["p"] = o.p;
        j["seed"] = o.seed;
        j["noise"] = o.noise;
    }
    return j;
}

inline void write_report(const RunReport& report, const std::string& path, std::ostream& out)
{
    const std::string text = json(report).dump(2) + "\n";
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << text;
}

inline std::string fmt17(double v)
{
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

// lambda, gap_bound_upper, gap_bound_lower, gap_actual over log-spaced lambdas,
// each bounded from the grid point immediately above it.
template <class Design>
void write_plot_csv(const Problem<Design>& problem, const PathResult& r, std::size_t points,
                    const std::string& path)
{
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << "lambda,gap_bound_upper,gap_bound_lower,gap_actual\n";
    const auto& certs = r.certificates;
    const std::size_t m = std::max<std::size_t>(points, 2);
    for (std::size_t k = 0; k < m; ++k) {
        const double lambda = r.lambda_max * std::pow(r.lambda_min / r.lambda_max, double(k) / double(m - 1));
        std::size_t t = 0;
        while (t + 1 < certs.size() && certs[t + 1].lambda >= lambda) ++t;
        const auto& c = certs[t];
        const double rho = 1 - lambda / c.lambda;
        f << fmt17(lambda) << ',' << fmt17(q_bound(c, rho, BoundSide::upper, problem.loss())) << ','
          << fmt17(q_bound(c, rho, BoundSide::lower, problem.loss())) << ','
          << fmt17(problem.duality_gap(c.beta, c.theta, lambda)) << '\n';
    }
}

template <class F>
auto with_design(const Dataset& d, F&& f)
{
    return std::visit([&](const auto& X) { return f(X); }, d.X);
}

inline RunReport run_path(const CommonOptions& o, const PathOptions& po)
{
    const Dataset data = acquire_data(o);
    const std::string loss_name = detail::loss_name(o);
    const std::string reg_spec = o.reg.empty() ? "l1" : o.reg;
    const Loss loss = make_loss(loss_name, data.y);
    const Regularizer reg = make_regularizer(reg_spec);
    const Strategy strategy = strategy_from_string(po.strategy);

    return with_design(data, [&](const auto& X) {
        Problem problem(X, loss, reg);
        PathConfig cfg;
        cfg.eps = o.eps.value_or(default_eps(loss));
        cfg.eps_c = o.eps_c.value_or(cfg.eps / 10);
        cfg.lambda_max = lambda_max(problem);
        cfg.lambda_min = cfg.lambda_max / o.lmin_ratio.value_or(50);
        cfg.strategy = strategy;
        cfg.default_size = po.T;
        cfg.default_decades = po.delta;
        SolverConfig solver;
        solver.max_epochs = o.max_epochs;
        const PathResult r = build_path(problem, cfg, solver);

        RunReport report;
        report.command = "path";
        report.config = common_echo(o, loss_name, reg_spec, cfg.eps, cfg.eps_c, o.lmin_ratio.value_or(50));
        report.config["strategy"] = to_string(strategy);
        if (strategy == Strategy::default_grid) {
            report.config["T"] = po.T;
            report.config["delta"] = po.delta;
        }
        report.config["scan_points"] = po.scan_points;
        report.n = problem.n();
        report.p = problem.p();
        PathRecord rec = record_path(r);
        if (po.scan_points > 0) {
            rec.scan_max_gap = dense_scan(problem, std::span<const Certificate>(r.certificates),
                                          r.lambda_min, r.lambda_max, po.scan_points);
        }
        report.paths.push_back(std::move(rec));
        report.timings[to_string(strategy)] = r.wall_time;
        if (!po.csv.empty()) write_plot_csv(problem, r, po.scan_points ? po.scan_points : 200, po.csv);
        return report;
    });
}

/*
 * Default grid of size T over [lambda_max / 10^delta, lambda_max]; its
 * certified error becomes the target of every adaptive strategy.
 */
inline RunReport run_bench(const CommonOptions& o, const PathOptions& po)
{
    const Dataset data = acquire_data(o);
    const std::string loss_name = detail::loss_name(o);
    const std::string reg_spec = o.reg.empty() ? "l1" : o.reg;
    const Loss loss = make_loss(loss_name, data.y);
    const Regularizer reg = make_regularizer(reg_spec);

    return with_design(data, [&](const auto& X) {
        Problem problem(X, loss, reg);
        SolverConfig solver;
        solver.max_epochs = o.max_epochs;
        const double lmax = lambda_max(problem);
        const auto grid = default_grid(lmax, po.T, po.delta);
        const double eps_c = o.eps_c.value_or(default_eps(loss) / 10);
        const PathResult base = solve_grid(problem, std::span<const double>(grid), eps_c, solver);

        // Q bounds can be infinite across wide logistic intervals; the target then
        // falls back to the measured accuracy of the default grid
        double target = base.certified_eps;
        const bool measured = !std::isfinite(target);
        if (measured) {
            target = dense_scan(problem, std::span<const Certificate>(base.certificates), grid.back(), lmax,
                                std::max<std::size_t>(po.scan_points, 1000));
        }

        RunReport report;
        report.command = "bench";
        report.config = common_echo(o, loss_name, reg_spec, target, eps_c, std::pow(10.0, po.delta));
        report.config["T"] = po.T;
        report.config["delta"] = po.delta;
        report.config["target"] = measured ? "dense_scan" : "grid_error";
        report.n = problem.n();
        report.p = problem.p();
        report.paths.push_back(record_path(base));
        if (measured) report.paths.back().scan_max_gap = target;
        report.timings["default"] = base.wall_time;

        for (auto s : {Strategy::unilateral, Strategy::bilateral, Strategy::uniform_unilateral,
                       Strategy::uniform_bilateral}) {
            PathConfig cfg;
            cfg.eps = target;
            cfg.eps_c = std::min(eps_c, cfg.eps / 10);
            cfg.lambda_max = lmax;
            cfg.lambda_min = grid.back();
            cfg.strategy = s;
            try {
                const PathResult r = build_path(problem, cfg, solver);
                report.paths.push_back(record_path(r));
                report.timings[to_string(s)] = r.wall_time;
            } catch (const ModulusUnavailable&) {
                // strategy needs moduli this loss lacks
            }
        }
        return report;
    });
}

// Spread of E_v over a default grid: the reference scale for the eps_v ladder.
template <class Design, class VDesign>
double validation_spread(const Problem<Design>& problem, const VDesign& Xv, const Vector& yv,
                         Task task, double lmax, double ratio, int T, const SolverConfig& solver)
{
    const auto grid = default_grid(lmax, T, std::log10(ratio));
    const auto r = solve_grid(problem, std::span<const double>(grid), solver.eps_c, solver);
    double lo = infinity, hi = -infinity;
    for (const auto& c : r.certificates) {
        const double e = validation_error(c.beta, Xv, yv, task);
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    return hi - lo;
}

inline RunReport run_validate(const CommonOptions& o, const ValidateOptions& vo)
{
    const Dataset data = acquire_data(o);
    const std::string loss_name = detail::loss_name(o);
    const std::string reg_spec = o.reg.empty() ? "enet:1" : o.reg;
    const Split split = train_validation_split(data, vo.val_frac, o.seed);
    const Loss loss = make_loss(loss_name, split.train.y);
    const Regularizer reg = make_regularizer(reg_spec);
    const Task task = loss.kind() == LossKind::squared ? Task::regression : Task::classification;
    const double ratio = o.lmin_ratio.value_or(100);

    return std::visit([&](const auto& X) {
        using Design = std::decay_t<decltype(X)>;
        const Design& Xv = std::get<Design>(split.validation.X);
        Problem problem(X, loss, reg);
        SolverConfig solver;
        solver.max_epochs = o.max_epochs;
        const double lmax = lambda_max(problem);

        std::vector<double> ladder = vo.eps_v_ladder;
        double spread = std::nan("");
        if (ladder.empty()) {
            spread = validation_spread(problem, Xv, split.validation.y, task, lmax, ratio, vo.T, solver);
            if (!(spread > 0)) throw std::runtime_error("validation error is flat over the default grid; pass --eps-v-ladder");
            ladder = {10 * spread, spread, spread / 10};
        }

        RunReport report;
        report.command = "validate";
        report.config = common_echo(o, loss_name, reg_spec, std::nan(""), solver.eps_c, ratio);
        report.config.erase("eps");
        report.config.erase("eps_c");
        report.config["val_frac"] = vo.val_frac;
        report.config["eps_v_ladder"] = ladder;
        if (vo.mu) report.config["mu"] = *vo.mu;
        if (!std::isnan(spread)) report.config["spread"] = spread;
        report.n = problem.n();
        report.p = problem.p();
        for (std::size_t k = 0; k < ladder.size(); ++k) {
            ValidationConfig cfg;
            cfg.eps_v = ladder[k];
            cfg.task = task;
            cfg.mu = vo.mu;
            cfg.lambda_max = lmax;
            cfg.lambda_min = lmax / ratio;
            const auto vr = validation_path(problem, Xv, split.validation.y, cfg, solver);
            report.validations.push_back(record_validation(vr));
            report.timings["eps_v[" + std::to_string(k) + "]"] = vr.wall_time;
        }
        return report;
    }, split.train.X);
}

inline void add_common(CLI::App* cmd, CommonOptions& o)
{
    cmd->add_option("--data", o.data, "input file (libsvm or csv with header, label last)");
    cmd->add_option("--format", o.format, "libsvm | csv (default: from extension)");
    cmd->add_option("--synthetic", o.synthetic, "regression | classification");
    cmd->add_option("--n", o.n, "synthetic observations")->check(CLI::PositiveNumber);
    cmd->add_option("--p", o.p, "synthetic features")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "seed for synthetic data and splits");
    cmd->add_option("--noise", o.noise, "synthetic noise level");
    cmd->add_option("--loss", o.loss, "lasso | logistic");
    cmd->add_option("--reg", o.reg, "l1 | enet:<gamma>");
    cmd->add_option("--eps", o.eps, "path accuracy");
    cmd->add_option("--eps-c", o.eps_c, "solver accuracy at each grid point");
    cmd->add_option("--lmin-ratio", o.lmin_ratio, "lambda_min = lambda_max / ratio");
    cmd->add_option("--max-epochs", o.max_epochs, "coordinate descent epoch cap");
    cmd->add_option("--out", o.out, "JSON report path (default: stdout)");
}

} // namespace detail

// Runs the command line; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr)
{
    CLI::App app{"Certified regularization paths and safe hyperparameter selection", "safegrid"};
    app.require_subcommand(1);
    CommonOptions common;
    PathOptions path_opts;
    ValidateOptions val_opts;

    auto* path = app.add_subcommand("path", "build one certified path");
    detail::add_common(path, common);
    path->add_option("--strategy", path_opts.strategy,
                     "unilateral | bilateral | uniform_unilateral | uniform_bilateral | default");
    path->add_option("--T", path_opts.T, "default grid size");
    path->add_option("--delta", path_opts.delta, "default grid decades");
    path->add_option("--scan-points", path_opts.scan_points, "dense certification scan size");
    path->add_option("--csv", path_opts.csv, "write gap curves to this csv");

    auto* bench = app.add_subcommand("bench", "default grid versus adaptive grids at its certified accuracy");
    detail::add_common(bench, common);
    bench->add_option("--T", path_opts.T, "default grid size");
    bench->add_option("--delta", path_opts.delta, "default grid decades");

    auto* validate = app.add_subcommand("validate", "safe selection on a holdout split");
    detail::add_common(validate, common);
    validate->add_option("--val-frac", val_opts.val_frac, "validation fraction");
    validate->add_option("--eps-v-ladder", val_opts.eps_v_ladder, "validation accuracies")->delimiter(',');
    validate->add_option("--mu", val_opts.mu, "fixed strong convexity constant");
    validate->add_option("--T", val_opts.T, "default grid size for the ladder reference");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        RunReport report;
        if (*path) report = detail::run_path(common, path_opts);
        else if (*bench) report = detail::run_bench(common, path_opts);
        else report = detail::run_validate(common, val_opts);
        detail::write_report(report, common.out, out);
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const LabelDomain& e) {
        err << "label error: " << e.what() << "\n";
        return 2;
    } catch (const ModulusUnavailable& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace safegrid

#pragma once
#include <safegrid/path.hpp>
#include <safegrid/validate.hpp>
#include <json.hpp>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace safegrid {

using json = nlohmann::json;

// beta stored as (index, value) pairs over its nonzero entries
struct SparseVector
{
    Index size = 0;
    std::vector<Index> index;
    std::vector<double> value;

    bool operator==(const SparseVector&) const = default;

    static SparseVector from_dense(const Vector& v)
    {
        SparseVector s;
        s.size = v.size();
        for (Index j = 0; j < v.size(); ++j) {
            if (v[j] != 0) {
                s.index.push_back(j);
                s.value.push_back(v[j]);
            }
        }
        return s;
    }

    Vector to_dense() const
    {
        Vector v = Vector::Zero(size);
        for (std::size_t k = 0; k < index.size(); ++k) v[index[k]] = value[k];
        return v;
    }
};

struct GridPointRecord
{
    double lambda = 0;
    double gap = 0;
    double delta = 0;
    double loss_value = 0;
    std::optional<double> rho_left;
    std::optional<double> rho_right;
    std::optional<double> rho_bilateral;
    SparseVector beta;
    std::vector<double> theta;

    bool operator==(const GridPointRecord&) const = default;
};

struct PathRecord
{
    std::string strategy;
    double lambda_min = 0;
    double lambda_max = 0;
    double certified_eps = 0;
    std::optional<double> complexity_bound;
    std::optional<double> scan_max_gap;
    std::vector<GridPointRecord> grid;

    bool operator==(const PathRecord&) const = default;
};

struct ValidationPointRecord
{
    double lambda = 0;
    double error = 0;
    double gap = 0;
    double eps_v_mu = 0;
    double mu = 0;
    double interval_lo = 0;
    double interval_hi = 0;
    double radius = 0;
    SparseVector beta;

    bool operator==(const ValidationPointRecord&) const = default;
};

struct ValidationRecord
{
    std::string task;
    double eps_v = 0;
    double lambda_min = 0;
    double lambda_max = 0;
    std::size_t selected_index = 0;
    double selected_lambda = 0;
    double selected_error = 0;
    double lower_bound = 0;
    std::vector<ValidationPointRecord> points;
    std::vector<std::pair<double, double>> uncovered;

    bool operator==(const ValidationRecord&) const = default;
};

/*
 * Everything except `timings` is a deterministic function of the inputs
 * and flags, so reports from identical runs compare equal byte for byte
 * once timings are dropped.
 */
struct RunReport
{
    int schema = 1;
    std::string command;
    json config = json::object();
    Index n = 0;
    Index p = 0;
    std::vector<PathRecord> paths;
    std::vector<ValidationRecord> validations;
    std::map<std::string, double> timings; // seconds

    bool operator==(const RunReport&) const = default;
};

inline PathRecord record_path(const PathResult& r)
{
    auto opt = [](double v) { return std::isnan(v) ? std::optional<double>{} : std::optional<double>{v}; };
    PathRecord rec;
    rec.strategy = to_string(r.strategy);
    rec.lambda_min = r.lambda_min;
    rec.lambda_max = r.lambda_max;
    rec.certified_eps = r.certified_eps;
    rec.complexity_bound = r.complexity_bound;
    for (std::size_t t = 0; t < r.size(); ++t) {
        const auto& c = r.certificates[t];
        GridPointRecord g;
        g.lambda = c.lambda;
        g.gap = c.gap;
        g.delta = c.delta;
        g.loss_value = c.loss_value;
        if (t < r.steps.size()) {
            g.rho_left = opt(r.steps[t].left);
            g.rho_right = opt(r.steps[t].right);
            g.rho_bilateral = opt(r.steps[t].bilateral);
        }
        g.beta = SparseVector::from_dense(c.beta);
        g.theta.assign(c.theta.data(), c.theta.data() + c.theta.size());
        rec.grid.push_back(std::move(g));
    }
    return rec;
}

inline ValidationRecord record_validation(const ValidationResult& vr)
{
    ValidationRecord rec;
    rec.task = to_string(vr.task);
    rec.eps_v = vr.eps_v;
    rec.lambda_min = vr.lambda_min;
    rec.lambda_max = vr.lambda_max;
    const auto best = select_best(vr);
    rec.selected_index = best.index;
    rec.selected_lambda = best.lambda;
    rec.selected_error = best.error;
    rec.lower_bound = best.lower_bound;
    for (const auto& pt : vr.points) {
        ValidationPointRecord p;
        p.lambda = pt.certificate.lambda;
        p.error = pt.error;
        p.gap = pt.certificate.gap;
        p.eps_v_mu = pt.eps_v_mu;
        p.mu = pt.mu;
        p.interval_lo = pt.interval.lo;
        p.interval_hi = pt.interval.hi;
        p.radius = pt.radius;
        p.beta = SparseVector::from_dense(pt.certificate.beta);
        rec.points.push_back(std::move(p));
    }
    for (const auto& u : vr.uncovered) rec.uncovered.emplace_back(u.lo, u.hi);
    return rec;
}

namespace detail {

// JSON has no infinity; non-finite reals are written as strings.
inline json real(double v)
{
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline double real(const json& j)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return infinity;
        if (s == "-inf") return -infinity;
        if (s == "nan") return std::nan("");
        throw std::runtime_error("bad real '" + s + "'");
    }
    return j.get<double>();
}

inline json optional_real(const std::optional<double>& v)
{
    return v ? real(*v) : json(nullptr);
}

inline std::optional<double> optional_real(const json& j)
{
    if (j.is_null()) return std::nullopt;
    return real(j);
}

} // namespace detail

inline void to_json(json& j, const SparseVector& v)
{
    j = json{{"size", v.size}, {"index", v.index}, {"value", v.value}};
}

inline void from_json(const json& j, SparseVector& v)
{
    j.at("size").get_to(v.size);
    j.at("index").get_to(v.index);
    j.at("value").get_to(v.value);
}

inline void to_json(json& j, const GridPointRecord& g)
{
    j = json{{"lambda", g.lambda},
             {"gap", detail::real(g.gap)},
             {"delta", detail::real(g.delta)},
             {"loss_value", g.loss_value},
             {"rho_left", detail::optional_real(g.rho_left)},
             {"rho_right", detail::optional_real(g.rho_right)},
             {"rho_bilateral", detail::optional_real(g.rho_bilateral)},
             {"beta", g.beta},
             {"theta", g.theta}};
}

inline void from_json(const json& j, GridPointRecord& g)
{
    g.lambda = j.at("lambda").get<double>();
    g.gap = detail::real(j.at("gap"));
    g.delta = detail::real(j.at("delta"));
    g.loss_value = j.at("loss_value").get<double>();
    g.rho_left = detail::optional_real(j.at("rho_left"));
    g.rho_right = detail::optional_real(j.at("rho_right"));
    g.rho_bilateral = detail::optional_real(j.at("rho_bilateral"));
    j.at("beta").get_to(g.beta);
    j.at("theta").get_to(g.theta);
}

inline void to_json(json& j, const PathRecord& r)
{
    j = json{{"strategy", r.strategy},
             {"lambda_min", r.lambda_min},
             {"lambda_max", r.lambda_max},
             {"size", r.grid.size()},
             {"certified_eps", detail::real(r.certified_eps)},
             {"complexity_bound", detail::optional_real(r.complexity_bound)},
             {"scan_max_gap", detail::optional_real(r.scan_max_gap)},
             {"grid", r.grid}};
}

inline void from_json(const json& j, PathRecord& r)
{
    j.at("strategy").get_to(r.strategy);
    j.at("lambda_min").get_to(r.lambda_min);
    j.at("lambda_max").get_to(r.lambda_max);
    r.certified_eps = detail::real(j.at("certified_eps"));
    r.complexity_bound = detail::optional_real(j.at("complexity_bound"));
    r.scan_max_gap = detail::optional_real(j.at("scan_max_gap"));
    j.at("grid").get_to(r.grid);
}

inline void to_json(json& j, const ValidationPointRecord& p)
{
    j = json{{"lambda", p.lambda},
             {"error", p.error},
             {"gap", detail::real(p.gap)},
             {"eps_v_mu", detail::real(p.eps_v_mu)},
             {"mu", p.mu},
             {"interval", {p.interval_lo, detail::real(p.interval_hi)}},
             {"radius", detail::real(p.radius)},
             {"beta", p.beta}};
}

inline void from_json(const json& j, ValidationPointRecord& p)
{
    j.at("lambda").get_to(p.lambda);
    j.at("error").get_to(p.error);
    p.gap = detail::real(j.at("gap"));
    p.eps_v_mu = detail::real(j.at("eps_v_mu"));
    j.at("mu").get_to(p.mu);
    p.interval_lo = j.at("interval").at(0).get<double>();
    p.interval_hi = detail::real(j.at("interval").at(1));
    p.radius = detail::real(j.at("radius"));
    j.at("beta").get_to(p.beta);
}

inline void to_json(json& j, const ValidationRecord& r)
{
    j = json{{"task", r.task},
             {"eps_v", r.eps_v},
             {"lambda_min", r.lambda_min},
             {"lambda_max", r.lambda_max},
             {"selected", {{"index", r.selected_index},
                           {"lambda", r.selected_lambda},
                           {"error", r.selected_error},
                           {"lower_bound", r.lower_bound}}},
             {"points", r.points},
             {"uncovered", r.uncovered}};
}

inline void from_json(const json& j, ValidationRecord& r)
{
    j.at("task").get_to(r.task);
    j.at("eps_v").get_to(r.eps_v);
    j.at("lambda_min").get_to(r.lambda_min);
    j.at("lambda_max").get_to(r.lambda_max);
    const auto& s = j.at("selected");
    s.at("index").get_to(r.selected_index);
    s.at("lambda").get_to(r.selected_lambda);
    s.at("error").get_to(r.selected_error);
    s.at("lower_bound").get_to(r.lower_bound);
    j.at("points").get_to(r.points);
    j.at("uncovered").get_to(r.uncovered);
}

inline void to_json(json& j, const RunReport& r)
{
    j = json{{"schema", r.schema},
             {"command", r.command},
             {"config", r.config},
             {"data", {{"n", r.n}, {"p", r.p}}},
             {"paths", r.paths},
             {"validations", r.validations},
             {"timings", r.timings}};
}

inline void from_json(const json& j, RunReport& r)
{
    j.at("schema").get_to(r.schema);
    if (r.schema != 1) throw std::runtime_error("unsupported report schema " + std::to_string(r.schema));
    j.at("command").get_to(r.command);
    r.config = j.at("config");
    j.at("data").at("n").get_to(r.n);
    j.at("data").at("p").get_to(r.p);
    j.at("paths").get_to(r.paths);
    j.at("validations").get_to(r.validations);
    j.at("timings").get_to(r.timings);
}

// The report without its timings.
inline json deterministic_section(const RunReport& r)
{
    json j = r;
    j.erase("timings");
    return j;
}

} // namespace safegrid

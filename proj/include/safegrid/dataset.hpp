#pragma once
#include <safegrid/errors.hpp>
#include <safegrid/numeric.hpp>
#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace safegrid {

enum class DataFormat { libsvm, csv };

struct Dataset
{
    std::variant<DenseMatrix, SparseMatrix> X;
    Vector y;

    Index n() const { return y.size(); }
    Index p() const
    {
        return std::visit([](const auto& m) { return Index(m.cols()); }, X);
    }
    bool sparse() const noexcept { return std::holds_alternative<SparseMatrix>(X); }
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_number(std::string_view tok, std::size_t line)
{
    tok = trim(tok);
    if (tok.empty()) throw ParseError("empty numeric field", line);
    // strtod accepts the leading '+' and forms like "1e5" uniformly across compilers
    std::string buf(tok);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size()) throw ParseError("invalid number '" + buf + "'", line);
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + buf + "'", line);
    return v;
}

inline long parse_index(std::string_view tok, std::size_t line)
{
    long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError("invalid feature index '" + std::string(tok) + "'", line);
    }
    return v;
}

inline Dataset parse_libsvm(std::istream& in)
{
    std::vector<Eigen::Triplet<double>> entries;
    std::vector<double> labels;
    long max_index = 0;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view s = raw;
        if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        std::istringstream tokens{std::string(s)};
        std::string tok;
        tokens >> tok;
        const Index row = Index(labels.size());
        labels.push_back(parse_number(tok, line));
        long prev = 0;
        while (tokens >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) throw ParseError("expected index:value, got '" + tok + "'", line);
            const long idx = parse_index(std::string_view(tok).substr(0, colon), line);
            if (idx < 1) throw ParseError("feature indices are 1-based", line);
            if (idx <= prev) throw ParseError("feature indices must increase within a line", line);
            prev = idx;
            const double v = parse_number(std::string_view(tok).substr(colon + 1), line);
            max_index = std::max(max_index, idx);
            if (v != 0) entries.emplace_back(row, Index(idx - 1), v);
        }
    }
    if (labels.empty()) throw ParseError("no observations in libsvm input", 0);
    SparseMatrix X(Index(labels.size()), Index(max_index));
    X.setFromTriplets(entries.begin(), entries.end());
    X.makeCompressed();
    return {std::move(X), Eigen::Map<const Vector>(labels.data(), Index(labels.size()))};
}

inline std::vector<std::string_view> split_commas(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        out.push_back(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Header row, then numeric rows; the last column is the label.
inline Dataset parse_csv(std::istream& in)
{
    std::string raw;
    std::size_t line = 0;
    std::size_t width = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (!trim(raw).empty()) {
            width = split_commas(trim(raw)).size();
            break;
        }
    }
    if (width == 0) throw ParseError("empty csv input", 0);
    if (width < 2) throw ParseError("csv needs at least one feature and a label column", line);
    std::vector<double> values;
    Index rows = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto s = trim(raw);
        if (s.empty()) continue;
        const auto fields = split_commas(s);
        if (fields.size() != width) {
            throw ParseError("expected " + std::to_string(width) + " fields, got "
                                 + std::to_string(fields.size()),
                             line);
        }
        for (auto f : fields) values.push_back(parse_number(f, line));
        ++rows;
    }
    if (rows == 0) throw ParseError("csv has a header but no rows", line);
    const Index p = Index(width) - 1;
    DenseMatrix X(rows, p);
    Vector y(rows);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < p; ++j) X(i, j) = values[std::size_t(i * Index(width) + j)];
        y[i] = values[std::size_t(i * Index(width) + p)];
    }
    return {std::move(X), std::move(y)};
}

} // namespace detail

inline Dataset parse_dataset(std::istream& in, DataFormat format)
{
    return format == DataFormat::libsvm ? detail::parse_libsvm(in) : detail::parse_csv(in);
}

inline Dataset load_dataset(const std::string& path, DataFormat format)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return parse_dataset(in, format);
}

template <class Design>
Design select_rows(const Design& X, const std::vector<Index>& rows)
{
    if constexpr (is_sparse_v<Design>) {
        std::vector<Index> position(X.rows(), -1);
        for (std::size_t k = 0; k < rows.size(); ++k) position[rows[k]] = Index(k);
        std::vector<Eigen::Triplet<double>> entries;
        for (Index j = 0; j < X.cols(); ++j) {
            for_each_in_column(X, j, [&](Index i, double v) {
                if (position[i] >= 0) entries.emplace_back(position[i], j, v);
            });
        }
        Design out(Index(rows.size()), X.cols());
        out.setFromTriplets(entries.begin(), entries.end());
        out.makeCompressed();
        return out;
    } else {
        Design out(Index(rows.size()), X.cols());
        for (std::size_t k = 0; k < rows.size(); ++k) out.row(Index(k)) = X.row(rows[k]);
        return out;
    }
}

inline Dataset select_rows(const Dataset& d, const std::vector<Index>& rows)
{
    Dataset out;
    out.X = std::visit([&](const auto& m) -> std::variant<DenseMatrix, SparseMatrix> {
        return select_rows(m, rows);
    }, d.X);
    out.y.resize(Index(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) out.y[Index(k)] = d.y[rows[k]];
    return out;
}

/*
 * Reproducible randomness: std::mt19937_64 has a fully specified output
 * sequence, while the standard distributions do not. Uniforms take the top
 * 53 bits, normals use Box-Muller, shuffles use Fisher-Yates with rejection.
 */
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0;
        while (u == 0) u = uniform();
        const double v = uniform();
        const double r = std::sqrt(-2 * std::log(u));
        spare_ = r * std::sin(2 * std::numbers::pi * v);
        has_spare_ = true;
        return r * std::cos(2 * std::numbers::pi * v);
    }

    // uniform integer in [0, bound)
    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max()
            - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x;
        do x = engine_(); while (x >= limit);
        return x % bound;
    }

    template <class T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0;
};

struct Split
{
    Dataset train;
    Dataset validation;
};

// Seeded holdout split; the validation part gets round(n * fraction) rows.
inline Split train_validation_split(const Dataset& d, double fraction, std::uint64_t seed)
{
    if (!(fraction > 0 && fraction < 1)) throw ConfigError("validation fraction must be in (0, 1)");
    const Index n = d.n();
    const auto n_val = static_cast<Index>(std::llround(double(n) * fraction));
    if (n_val < 1 || n_val >= n) throw ConfigError("split leaves an empty part");
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) order[std::size_t(i)] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<Index> val(order.begin(), order.begin() + n_val);
    std::vector<Index> train(order.begin() + n_val, order.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    return {select_rows(d, train), select_rows(d, val)};
}

enum class SyntheticKind { regression, classification };

/*
 * Gaussian design, sparse ground truth with min(10, p) nonzero coefficients
 * drawn from N(0, 1) scaled by 3, observation noise N(0, noise^2).
 * Classification labels are 1[X beta + noise > 0] in {0, 1}.
 */
inline Dataset synthetic(SyntheticKind kind, Index n, Index p, std::uint64_t seed, double noise = 1.0)
{
    if (n < 1 || p < 1) throw ConfigError("synthetic data needs n, p >= 1");
    Rng rng(seed);
    DenseMatrix X(n, p);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
    }
    Vector truth = Vector::Zero(p);
    const Index k = std::min<Index>(10, p);
    for (Index j = 0; j < k; ++j) truth[j] = 3 * rng.normal();
    Vector y = X * truth;
    for (Index i = 0; i < n; ++i) y[i] += noise * rng.normal();
    if (kind == SyntheticKind::classification) {
        for (Index i = 0; i < n; ++i) y[i] = y[i] > 0 ? 1.0 : 0.0;
    }
    return {std::move(X), std::move(y)};
}

} // namespace safegrid

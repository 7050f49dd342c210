#include "evoaaa/data.hpp"

#include "evoaaa/errors.hpp"
#include "evoaaa/seeding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace evoaaa {

std::string_view to_string(AttributeKind k) {
    switch (k) {
    case AttributeKind::real: return "real";
    case AttributeKind::integer: return "integer";
    case AttributeKind::binary: return "binary";
    }
    return "real";
}

Matrix Dataset::train_matrix() const {
    Matrix m(static_cast<Eigen::Index>(train_indices.size()), values.cols());
    for (std::size_t r = 0; r < train_indices.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = values.row(train_indices[r]);
    return m;
}

Matrix Dataset::test_matrix() const {
    Matrix m(static_cast<Eigen::Index>(test_indices.size()), values.cols());
    for (std::size_t r = 0; r < test_indices.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = values.row(test_indices[r]);
    return m;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t end = line.find(',', pos);
        if (end == std::string_view::npos) {
            fields.push_back(trim(line.substr(pos)));
            break;
        }
        fields.push_back(trim(line.substr(pos, end - pos)));
        pos = end + 1;
    }
    return fields;
}

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::size_t resolve_drop_column(const std::string& spec, const std::vector<std::string>& header, std::size_t width) {
    if (!header.empty()) {
        auto it = std::find(header.begin(), header.end(), spec);
        if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
    }
    long idx = 0;
    auto [ptr, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), idx);
    if (ec != std::errc() || ptr != spec.data() + spec.size()) {
        throw InvalidDataset("drop column \"" + spec + "\" is neither a header name nor an index");
    }
    const auto w = static_cast<long>(width);
    if (idx < 0) idx += w;
    if (idx < 0 || idx >= w) {
        throw InvalidDataset("drop column index " + spec + " outside [0, " + std::to_string(width) + ")");
    }
    return static_cast<std::size_t>(idx);
}

} // namespace

AttributeKind infer_attribute_kind(const Matrix& values) {
    bool binary = true;
    bool integral = true;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        double v = values.data()[i];
        if (v != 0.0 && v != 1.0) binary = false;
        if (v != std::floor(v)) {
            integral = false;
            break;
        }
    }
    if (binary) return AttributeKind::binary;
    return integral ? AttributeKind::integer : AttributeKind::real;
}

Matrix minmax_normalize(const Matrix& values) {
    Matrix out = values;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        const double lo = values.col(c).minCoeff();
        const double hi = values.col(c).maxCoeff();
        if (hi == lo) {
            out.col(c).setZero();
        } else {
            out.col(c) = ((values.col(c).array() - lo) / (hi - lo)).cwiseMax(0.0).cwiseMin(1.0).matrix();
        }
    }
    return out;
}

Dataset dataset_from_matrix(std::string name, Matrix values, Normalization normalize) {
    if (values.rows() == 0 || values.cols() == 0) throw InvalidDataset("dataset \"" + name + "\" is empty");
    if (!values.allFinite()) throw InvalidDataset("dataset \"" + name + "\" has non-finite values");
    Dataset d;
    d.name = std::move(name);
    d.attribute_kind = infer_attribute_kind(values);
    d.values = normalize == Normalization::minmax ? minmax_normalize(values) : std::move(values);
    return d;
}

Dataset load_csv(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw InvalidDataset("cannot open dataset " + path.string());

    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::optional<std::size_t> width;
    std::optional<std::size_t> drop;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = trim(line);
        if (view.empty()) continue;
        std::vector<std::string_view> fields = split_fields(view);
        if (options.has_header && line_no == 1) {
            for (auto f : fields) header.emplace_back(f);
            width = fields.size();
            continue;
        }
        if (!width) width = fields.size();
        if (fields.size() != *width) {
            throw ParseError(line_no, std::min(fields.size(), *width) + 1,
                             path.string() + ": row " + std::to_string(line_no) + " has " +
                                 std::to_string(fields.size()) + " columns, expected " + std::to_string(*width));
        }
        if (options.drop_column && !drop) drop = resolve_drop_column(*options.drop_column, header, *width);
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (drop && c == *drop) continue;
            std::optional<double> v = parse_number(fields[c]);
            if (!v) {
                throw ParseError(line_no, c + 1,
                                 path.string() + ": row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                                     " is not a finite number: \"" + std::string(fields[c]) + "\"");
            }
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(line_no, 0, path.string() + ": no data rows");
    if (rows.front().empty()) throw ParseError(1, 1, path.string() + ": no feature columns after drop");

    Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return dataset_from_matrix(path.stem().string(), std::move(values), options.normalize);
}

Dataset split(const Dataset& d, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw SplitError("test fraction must lie in (0, 1)");
    const Eigen::Index n = d.rows();
    if (n < 2) throw SplitError("split needs at least 2 rows, got " + std::to_string(n));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(derive_seed(seed, 0x5117));
    std::shuffle(order.begin(), order.end(), rng);
    const auto test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(n)));
    Dataset out = d;
    out.test_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test));
    out.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(test), order.end());
    return out;
}

std::optional<SyntheticShape> parse_synthetic_shape(std::string_view name) {
    if (name == "glass") return SyntheticShape::glass;
    if (name == "sonar") return SyntheticShape::sonar;
    if (name == "spect") return SyntheticShape::spect;
    return std::nullopt;
}

Dataset synthetic_dataset(SyntheticShape shape, std::uint64_t seed) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(shape) + 101));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    switch (shape) {
    case SyntheticShape::glass: {
        // Six clustered groups with a three-factor within-group structure and a squashing nonlinearity.
        const int n = 214, f = 9, groups = 6, factors = 3;
        Matrix prototypes(groups, f), loadings(factors, f);
        for (Eigen::Index i = 0; i < prototypes.size(); ++i) prototypes.data()[i] = 1.2 * normal(rng);
        for (Eigen::Index i = 0; i < loadings.size(); ++i) loadings.data()[i] = 0.6 * normal(rng);
        Matrix v(n, f);
        for (int r = 0; r < n; ++r) {
            const int g = static_cast<int>(unit(rng) * groups) % groups;
            Vector z(factors);
            for (int k = 0; k < factors; ++k) z(k) = normal(rng);
            for (int c = 0; c < f; ++c) {
                double x = prototypes(g, c) + z.dot(loadings.col(c)) + 0.05 * normal(rng);
                v(r, c) = std::tanh(0.7 * x);
            }
        }
        return dataset_from_matrix("glass_like", minmax_normalize(v));
    }
    case SyntheticShape::sonar: {
        // Smooth spectral-energy curves built from a few Gaussian bumps.
        const int n = 208, f = 60, bumps = 5;
        Matrix v(n, f);
        for (int r = 0; r < n; ++r) {
            std::vector<double> centre(bumps), width(bumps), height(bumps);
            for (int k = 0; k < bumps; ++k) {
                centre[static_cast<std::size_t>(k)] = (k + 0.5) * f / bumps + 4.0 * normal(rng);
                width[static_cast<std::size_t>(k)] = 3.0 + 3.0 * unit(rng);
                height[static_cast<std::size_t>(k)] = unit(rng);
            }
            for (int c = 0; c < f; ++c) {
                double x = 0.0;
                for (std::size_t k = 0; k < static_cast<std::size_t>(bumps); ++k) {
                    double d = (c - centre[k]) / width[k];
                    x += height[k] * std::exp(-0.5 * d * d);
                }
                v(r, c) = x + 0.02 * normal(rng);
            }
        }
        return dataset_from_matrix("sonar_like", minmax_normalize(v));
    }
    case SyntheticShape::spect: {
        const int n = 267, f = 22, factors = 2;
        Matrix loadings(factors, f);
        Vector offsets(f);
        for (Eigen::Index i = 0; i < loadings.size(); ++i) loadings.data()[i] = 2.0 * normal(rng);
        for (int c = 0; c < f; ++c) offsets(c) = normal(rng) - 0.5;
        Matrix v(n, f);
        for (int r = 0; r < n; ++r) {
            Vector z(factors);
            for (int k = 0; k < factors; ++k) z(k) = normal(rng);
            for (int c = 0; c < f; ++c) {
                double p = 1.0 / (1.0 + std::exp(-(z.dot(loadings.col(c)) + offsets(c))));
                v(r, c) = unit(rng) < p ? 1.0 : 0.0;
            }
        }
        return dataset_from_matrix("spect_like", v);
    }
    }
    throw InvalidDataset("unknown synthetic shape");
}

void write_csv(const Dataset& d, const std::filesystem::path& path, bool header) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    if (header) {
        for (int c = 0; c < d.feature_count(); ++c) out << (c ? "," : "") << "x" << (c + 1);
        out << '\n';
    }
    char buf[32];
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
        for (Eigen::Index c = 0; c < d.values.cols(); ++c) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d.values(r, c));
            if (c) out << ',';
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

} // namespace evoaaa

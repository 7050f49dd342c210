#include "evoaaa/analytics.hpp"

#include "evoaaa/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evoaaa {

namespace {

void check_rectangular(const ScoreTable& table) {
    if (table.empty() || table.front().empty()) throw IncompleteTable("score table is empty");
    const std::size_t k = table.front().size();
    for (std::size_t r = 0; r < table.size(); ++r) {
        if (table[r].size() != k) {
            throw IncompleteTable("row " + std::to_string(r) + " has " + std::to_string(table[r].size()) +
                                  " cells, expected " + std::to_string(k));
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (std::isnan(table[r][c])) {
                throw IncompleteTable("missing cell at row " + std::to_string(r) + ", column " + std::to_string(c));
            }
        }
    }
}

std::vector<double> rank_row(const std::vector<double>& row) {
    std::vector<std::size_t> order(row.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    std::vector<double> ranks(row.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && row[order[j + 1]] == row[order[i]]) ++j;
        const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
        i = j + 1;
    }
    return ranks;
}

} // namespace

Ranking rank_methods(const ScoreTable& table) {
    check_rectangular(table);
    Ranking out;
    const std::size_t k = table.front().size();
    out.average.assign(k, 0.0);
    for (const auto& row : table) {
        out.ranks.push_back(rank_row(row));
        for (std::size_t c = 0; c < k; ++c) out.average[c] += out.ranks.back()[c];
    }
    for (double& a : out.average) a /= static_cast<double>(table.size());
    return out;
}

double chi_square_survival(double statistic, int degrees_of_freedom) {
    if (degrees_of_freedom < 1) throw ConfigError("chi-square needs at least one degree of freedom");
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(degrees_of_freedom / 2.0, statistic / 2.0);
}

FriedmanResult friedman_test(const ScoreTable& table) {
    check_rectangular(table);
    const auto n = static_cast<double>(table.size());
    const std::size_t kk = table.front().size();
    const auto k = static_cast<double>(kk);
    if (table.size() < 2 || kk < 2) throw IncompleteTable("Friedman test needs >= 2 methods and >= 2 datasets");
    Ranking r = rank_methods(table);
    double sum_sq = 0.0;
    for (double a : r.average) sum_sq += a * a;
    FriedmanResult f;
    f.statistic = 12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0);
    // Rounding can leave a tiny negative value when all ranks tie.
    if (f.statistic < 0.0 && f.statistic > -1e-9) f.statistic = 0.0;
    f.degrees_of_freedom = static_cast<int>(kk) - 1;
    f.p_value = chi_square_survival(f.statistic, f.degrees_of_freedom);
    return f;
}

} // namespace evoaaa

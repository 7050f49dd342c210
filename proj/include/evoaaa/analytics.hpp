#pragma once

#include <string>
#include <vector>

namespace evoaaa {

// Rows are datasets (blocks), columns are methods. Lower values are better.
using ScoreTable = std::vector<std::vector<double>>;

struct Ranking {
    std::vector<std::vector<double>> ranks;  // same shape as the input; ties share average ranks
    std::vector<double> average;             // per method
};

// Throws IncompleteTable on ragged input or a missing (NaN) cell.
Ranking rank_methods(const ScoreTable& table);

struct FriedmanResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int degrees_of_freedom = 0;
};

// Chi-square approximation on within-row ranks; needs >= 2 methods and >= 2 rows.
FriedmanResult friedman_test(const ScoreTable& table);

// Upper tail of the chi-square distribution.
double chi_square_survival(double statistic, int degrees_of_freedom);

} // namespace evoaaa

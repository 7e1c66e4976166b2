#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace octwarp {

/// Rows are groups (original, modified); columns are verdicts
/// (labeled original, labeled modified).
///
///              labeled original   labeled modified
///   original          a                  b
///   modified          c                  d
struct ContingencyTable2x2 {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    std::uint64_t c = 0;
    std::uint64_t d = 0;

    std::uint64_t total() const noexcept { return a + b + c + d; }
    friend bool operator==(const ContingencyTable2x2&, const ContingencyTable2x2&) = default;
};

struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Pearson chi-square on a 2x2 table, one degree of freedom, two-sided.
///
///   chi2 = N (|ad - bc| - k)^2 / ((a+b)(c+d)(a+c)(b+d))
///
/// with k = min(N/2, |ad - bc|) under Yates' correction and k = 0 without.
/// Throws std::invalid_argument if any marginal is zero.
ChiSquareResult chi_square_2x2(const ContingencyTable2x2& t, bool yates = true);

/// Upper tail of the chi-square distribution with one degree of freedom.
double chi_square_1df_sf(double statistic);

/// Two-sided Fisher exact test, minimum-likelihood convention: the sum of
/// the hypergeometric probabilities of every table with the observed
/// margins whose probability does not exceed the observed one (relative
/// tolerance 1e-7). Point probabilities come from log-gamma.
double fisher_exact_2x2(const ContingencyTable2x2& t);

/// Smallest expected cell count under independence; 0 if N == 0.
double min_expected_count(const ContingencyTable2x2& t);

/// Standard normal quantile, Wichura's AS241 (PPND16). p must lie in (0, 1).
double normal_quantile(double p);

struct NoninferiorityDesign {
    double p_standard = 0.0;
    double p_test = 0.0;
    double margin = 0.0;
    double alpha = 0.05;  ///< one-sided
    double power = 0.80;
};

/// Per-group n for a two-proportion non-inferiority comparison with
/// unpooled variance:
///
///   n = ceil((z_{1-alpha} + z_{power})^2 (ps(1-ps) + pt(1-pt)) / (margin - (ps - pt))^2)
std::uint64_t noninferiority_sample_size(const NoninferiorityDesign& design);

/// Short display form: "1" for p = 1, two decimals down to 0.01,
/// one significant figure in e-notation below that ("3e-3"), and "<1e-4"
/// below 1e-4.
std::string format_p(double p);

/// True if `displayed` ("0.21", "3e-3", "<1e-3", ...) shows `p` at its own
/// precision, reading the display as either rounded or truncated.
bool agrees_at_display_precision(double p, std::string_view displayed);

} // namespace octwarp

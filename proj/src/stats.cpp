#include "octwarp/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace octwarp {

ChiSquareResult chi_square_2x2(const ContingencyTable2x2& t, bool yates) {
    const double a = static_cast<double>(t.a), b = static_cast<double>(t.b);
    const double c = static_cast<double>(t.c), d = static_cast<double>(t.d);
    const double r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
    if (r1 == 0.0 || r2 == 0.0 || c1 == 0.0 || c2 == 0.0)
        throw std::invalid_argument("chi-square needs all four marginals to be positive");
    const double n = r1 + r2;
    const double cross = std::abs(a * d - b * c);
    const double correction = yates ? std::min(0.5 * n, cross) : 0.0;
    const double diff = cross - correction;
    // Divide in stages; the marginal product overflows nothing but loses less this way.
    const double statistic = n * diff / r1 * diff / r2 / c1 / c2;
    return {statistic, chi_square_1df_sf(statistic)};
}

double chi_square_1df_sf(double statistic) {
    if (!(statistic > 0.0)) return 1.0;
    return std::clamp(std::erfc(std::sqrt(0.5 * statistic)), 0.0, 1.0);
}

namespace {

double log_choose(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

} // namespace

double fisher_exact_2x2(const ContingencyTable2x2& t) {
    const std::uint64_t r1 = t.a + t.b;
    const std::uint64_t r2 = t.c + t.d;
    const std::uint64_t c1 = t.a + t.c;
    const std::uint64_t lo = c1 > r2 ? c1 - r2 : 0;
    const std::uint64_t hi = std::min(r1, c1);
    if (lo == hi) return 1.0;

    // log P(X = x) up to the constant -log C(N, c1), which cancels below.
    const auto log_weight = [&](std::uint64_t x) {
        return log_choose(static_cast<double>(r1), static_cast<double>(x)) +
               log_choose(static_cast<double>(r2), static_cast<double>(c1 - x));
    };
    std::vector<double> logs;
    logs.reserve(static_cast<std::size_t>(hi - lo + 1));
    double peak = -std::numeric_limits<double>::infinity();
    for (std::uint64_t x = lo; x <= hi; ++x) {
        logs.push_back(log_weight(x));
        peak = std::max(peak, logs.back());
    }
    const double observed = log_weight(t.a);
    const double threshold = observed + std::log1p(1e-7);

    double total = 0.0, tail = 0.0;
    for (const double lw : logs) {
        const double w = std::exp(lw - peak);
        total += w;
        if (lw <= threshold) tail += w;
    }
    return std::clamp(tail / total, 0.0, 1.0);
}

double min_expected_count(const ContingencyTable2x2& t) {
    const double n = static_cast<double>(t.total());
    if (n == 0.0) return 0.0;
    const double r1 = static_cast<double>(t.a + t.b), r2 = static_cast<double>(t.c + t.d);
    const double c1 = static_cast<double>(t.a + t.c), c2 = static_cast<double>(t.b + t.d);
    return std::min(r1, r2) * std::min(c1, c2) / n;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal quantile needs 0 < p < 1");
    const double q = p - 0.5;
    double value;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        value = q *
                (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                     45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                  133.14166789178437745) * r + 3.387132872796366608) /
                (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                     21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                  42.313330701600911252) * r + 1.0);
        return value;
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                     1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                     0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                     0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                     7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

std::uint64_t noninferiority_sample_size(const NoninferiorityDesign& d) {
    const auto proportion = [](double v) { return v > 0.0 && v < 1.0; };
    if (!proportion(d.p_standard) || !proportion(d.p_test) || !proportion(d.margin))
        throw std::invalid_argument("proportions and margin must lie in (0, 1)");
    if (!proportion(d.alpha) || !proportion(d.power))
        throw std::invalid_argument("alpha and power must lie in (0, 1)");
    const double gap = d.margin - (d.p_standard - d.p_test);
    if (!(d.margin > std::abs(d.p_standard - d.p_test)) || !(gap > 0.0))
        throw std::invalid_argument("margin must exceed the assumed difference between proportions");

    const double z = normal_quantile(1.0 - d.alpha) + normal_quantile(d.power);
    const double variance = d.p_standard * (1.0 - d.p_standard) + d.p_test * (1.0 - d.p_test);
    const double n = z * z * variance / (gap * gap);
    return static_cast<std::uint64_t>(std::ceil(n));
}

std::string format_p(double p) {
    if (p >= 1.0) return "1";
    if (p >= 0.01) {
        const auto text = fmt::format("{:.2f}", p);
        return text == "1.00" ? "1" : text;
    }
    if (p < 1e-4) return "<1e-4";
    // One significant figure, e.g. 0.0031 -> "3e-3".
    auto text = fmt::format("{:.0e}", p);
    // fmt renders "3e-03"; drop the exponent's zero padding.
    const auto e = text.find('e');
    std::string exponent = text.substr(e + 1);
    const char sign = exponent[0];
    exponent.erase(0, 1);
    exponent.erase(0, std::min(exponent.find_first_not_of('0'), exponent.size() - 1));
    return text.substr(0, e) + "e" + (sign == '-' ? "-" : "") + exponent;
}

bool agrees_at_display_precision(double p, std::string_view displayed) {
    std::string text(displayed);
    text.erase(std::remove_if(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); }),
               text.end());
    if (text.empty()) throw std::invalid_argument("empty displayed value");

    if (text[0] == '<') return p < std::stod(text.substr(1));

    // Quantum = place value of the last displayed mantissa digit.
    const auto e = text.find_first_of("eE");
    const std::string mantissa = text.substr(0, e);
    const int exponent = e == std::string::npos ? 0 : std::stoi(text.substr(e + 1));
    const auto dot = mantissa.find('.');
    const int decimals = dot == std::string::npos ? 0 : static_cast<int>(mantissa.size() - dot - 1);
    const double quantum = std::pow(10.0, exponent - decimals);
    const double value = std::stod(text);

    const double slack = 1e-12 * std::max(1.0, std::abs(value));
    const bool rounds = std::abs(p - value) <= 0.5 * quantum + slack;
    const bool truncates = p >= value - slack && p < value + quantum;
    return rounds || truncates;
}

} // namespace octwarp

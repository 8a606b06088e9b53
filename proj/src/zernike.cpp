#include "cbir/zernike.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cbir {

namespace {

// Largest factorial argument: (2 p + 1)! at p = kMaxOrder.
constexpr int kMaxFactorialArg = 2 * kMaxOrder + 1;

const std::array<long double, kMaxFactorialArg + 1>& factorial_table() {
    static const auto table = [] {
        std::array<long double, kMaxFactorialArg + 1> t{};
        t[0] = 1.0L;
        for (int n = 1; n <= kMaxFactorialArg; ++n) {
            t[n] = t[n - 1] * n;
        }
        return t;
    }();
    return table;
}

void check_index(int order, int repetition) {
    if (order < 0 || order > kMaxOrder) {
        throw std::invalid_argument("moment order " + std::to_string(order) +
                                    " outside [0, " + std::to_string(kMaxOrder) + "]");
    }
    if (std::abs(repetition) > order) {
        throw std::invalid_argument("repetition " + std::to_string(repetition) +
                                    " exceeds order " + std::to_string(order));
    }
}

// Coefficients of the radial sum, c[s] multiplying rho^{order-s}.
struct RadialCoeffs {
    int order = 0;
    int abs_repetition = 0;
    std::array<long double, kMaxOrder + 1> c{};
    int count = 0;  // order - |repetition| + 1 terms

    long double eval(long double rho) const {
        long double acc = c[0];
        for (int s = 1; s < count; ++s) {
            acc = acc * rho + c[s];
        }
        for (int i = 0; i < abs_repetition; ++i) {
            acc *= rho;
        }
        return acc;
    }
};

RadialCoeffs radial_coeffs(int order, int repetition) {
    const auto& fact = factorial_table();
    const int aq = std::abs(repetition);
    RadialCoeffs rc;
    rc.order = order;
    rc.abs_repetition = aq;
    rc.count = order - aq + 1;
    for (int s = 0; s < rc.count; ++s) {
        const long double num = fact[2 * order + 1 - s];
        const long double den =
            fact[s] * fact[order + aq + 1 - s] * fact[order - aq - s];
        rc.c[s] = (s % 2 == 0 ? num : -num) / den;
    }
    return rc;
}

}  // namespace

PolarSample to_unit_disk(int col, int row, int width, int height) {
    const double d = std::min(width, height);
    const double x = (2.0 * col + 1.0 - width) / d;
    const double y = (height - 2.0 * row - 1.0) / d;
    return {std::sqrt(x * x + y * y), std::atan2(y, x)};
}

double radial_poly(int order, int repetition, double rho) {
    check_index(order, repetition);
    if (rho < 0.0) {
        throw std::invalid_argument("radial_poly: negative radius");
    }
    return static_cast<double>(radial_coeffs(order, repetition).eval(rho));
}

std::complex<double> basis_value(int order, int repetition, double rho, double theta) {
    const double r = radial_poly(order, repetition, rho);
    return {r * std::cos(repetition * theta), r * std::sin(repetition * theta)};
}

std::complex<double> moment(const GrayImage& image, int order, int repetition) {
    check_index(order, repetition);
    if (image.empty()) {
        throw std::invalid_argument("moment: empty image");
    }

    const RadialCoeffs rc = radial_coeffs(order, repetition);
    const int q = repetition;
    long double sum_re = 0.0L;
    long double sum_im = 0.0L;
    for (int row = 0; row < image.height; ++row) {
        for (int col = 0; col < image.width; ++col) {
            const double f = image.at(col, row);
            if (f == 0.0) {
                continue;
            }
            const auto [rho, theta] = to_unit_disk(col, row, image.width, image.height);
            if (rho > 1.0) {
                continue;
            }
            const long double radial = rc.eval(rho);
            // f * conj(V) = f * R * e^{-i q theta}
            const long double angle = static_cast<long double>(q) * theta;
            sum_re += f * radial * std::cos(angle);
            sum_im -= f * radial * std::sin(angle);
        }
    }

    const double d = std::min(image.width, image.height);
    const long double pixel_area = (2.0L / d) * (2.0L / d);
    const long double scale = (order + 1) / std::numbers::pi_v<long double> * pixel_area;
    return {static_cast<double>(sum_re * scale), static_cast<double>(sum_im * scale)};
}

FeatureVector extract_features(const GrayImage& image,
                               std::span<const MomentIndex> indices) {
    FeatureVector fv;
    fv.indices.assign(indices.begin(), indices.end());
    fv.values.reserve(indices.size());
    for (const MomentIndex& idx : indices) {
        fv.values.push_back(std::abs(moment(image, idx.order, idx.repetition)));
    }
    return fv;
}

std::vector<MomentIndex> default_feature_set() {
    return {{0, 0}, {2, 0}, {2, 2}};
}

std::complex<double> MomentTable::at(int order, int repetition) const {
    if (order < 0 || order > max_order || std::abs(repetition) > order) {
        throw std::invalid_argument("MomentTable: no entry for order " +
                                    std::to_string(order) + ", repetition " +
                                    std::to_string(repetition));
    }
    return coefficients[static_cast<std::size_t>(order) * order + order + repetition];
}

MomentTable compute_moment_table(const GrayImage& image, int max_order) {
    if (max_order < 0 || max_order > kMaxOrder) {
        throw std::invalid_argument("compute_moment_table: bad max order " +
                                    std::to_string(max_order));
    }
    MomentTable table;
    table.max_order = max_order;
    table.coefficients.reserve(static_cast<std::size_t>(max_order + 1) * (max_order + 1));
    for (int p = 0; p <= max_order; ++p) {
        for (int q = -p; q <= p; ++q) {
            table.coefficients.push_back(moment(image, p, q));
        }
    }
    return table;
}

std::complex<double> reconstruct(const MomentTable& table, double rho, double theta) {
    const std::size_t expected =
        static_cast<std::size_t>(table.max_order + 1) * (table.max_order + 1);
    if (table.coefficients.size() != expected) {
        throw std::invalid_argument("reconstruct: incomplete coefficient table");
    }
    std::complex<double> sum = 0.0;
    for (int p = 0; p <= table.max_order; ++p) {
        for (int q = -p; q <= p; ++q) {
            sum += table.at(p, q) * basis_value(p, q, rho, theta);
        }
    }
    return sum;
}

}  // namespace cbir

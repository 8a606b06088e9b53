#pragma once

#include <complex>
#include <span>
#include <vector>

#include "cbir/image.hpp"

namespace cbir {

/// Basis index of a pseudo-Zernike function: order p >= 0 and repetition q
/// with |q| <= p. The repetition drives the angular frequency e^{i q theta}.
struct MomentIndex {
    int order = 0;
    int repetition = 0;

    friend bool operator==(const MomentIndex&, const MomentIndex&) = default;
};

// Orders above this would need arbitrary-precision factorials.
inline constexpr int kMaxOrder = 20;

struct PolarSample {
    double rho = 0;    // [0, sqrt(2)] for square rasters
    double theta = 0;  // (-pi, pi]
};

// Maps the center of pixel (col, row) so that the inscribed disk of the
// raster becomes the unit disk:
//   x = (2 col + 1 - width) / D,  y = (height - 2 row - 1) / D,
//   D = min(width, height).
// Samples with rho > 1 fall outside the integration domain.
PolarSample to_unit_disk(int col, int row, int width, int height);

// Pseudo-Zernike radial polynomial
//   R_pq(rho) = sum_{s=0}^{p-|q|} (-1)^s (2p+1-s)! rho^{p-s}
//               / [ s! (p+|q|+1-s)! (p-|q|-s)! ]
// Factorials are precomputed in extended precision for p <= kMaxOrder.
double radial_poly(int order, int repetition, double rho);

// V_pq(rho, theta) = R_pq(rho) e^{i q theta}
std::complex<double> basis_value(int order, int repetition, double rho, double theta);

// Moment coefficient over the unit disk,
//   A_pq = (p+1)/pi * sum_{pixels, rho <= 1} f * conj(V_pq) * dA,
// with dA = (2/D)^2 the mapped pixel area.
std::complex<double> moment(const GrayImage& image, int order, int repetition);

/// Per-image descriptor: |A_pq| for an ordered list of basis indices.
struct FeatureVector {
    std::vector<MomentIndex> indices;
    std::vector<double> values;  // parallel to indices, each >= 0 and finite
};

FeatureVector extract_features(const GrayImage& image,
                               std::span<const MomentIndex> indices);

// {A00, A20, A22}
std::vector<MomentIndex> default_feature_set();

/// Complete coefficient table for all |q| <= p <= max_order, as needed by
/// reconstruct(). Slot layout: (p, q) -> p^2 + p + q.
struct MomentTable {
    int max_order = 0;
    std::vector<std::complex<double>> coefficients;

    std::complex<double> at(int order, int repetition) const;
};

MomentTable compute_moment_table(const GrayImage& image, int max_order);

// Truncated synthesis sum_p sum_{|q|<=p} A_pq V_pq at one sample point.
// Callers take the real part; the imaginary part is the numerical residue.
std::complex<double> reconstruct(const MomentTable& table, double rho, double theta);

}  // namespace cbir

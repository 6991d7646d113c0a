// SPDX-License-Identifier: Apache-2.0
//
// Antenna-array geometries, steering vectors and their azimuth derivatives,
// and grid response matrices.

#ifndef AEMMP_ARRAY_GEOMETRY_HPP
#define AEMMP_ARRAY_GEOMETRY_HPP

#include <optional>
#include <variant>
#include <vector>

#include "aemmp/complex_matrix.hpp"

namespace aemmp {

// Uniform linear array: element n at distance (n-1)*d from the first, phase
// reference 1/sqrt(N).
struct Ula {
    int n_antennas = 0;
    double spacing_over_wavelength = 0.5;  // d / wavelength
};

// Lens antenna array: sinc-response elements on the focal arc. Not unit-norm
// by construction.
struct Lens {
    int n_antennas = 0;
    double aperture_over_wavelength = 0.0;  // D / wavelength
};

// Linear array with arbitrary element positions d_i (d_1 = 0, increasing).
struct ArbitraryLinear {
    std::vector<double> positions_over_wavelength;
};

// Uniform rectangular array, steering vector a_v (x) a_h (Kronecker),
// azimuth plus elevation.
struct Ura {
    int n_horizontal = 0;  // N1
    int n_vertical = 0;    // N2
    double spacing_over_wavelength = 0.5;
};

using ArrayGeometry = std::variant<Ula, Lens, ArbitraryLinear, Ura>;

int antenna_count(const ArrayGeometry& geom);
bool is_one_dimensional(const ArrayGeometry& geom);

// Half-width of the valid azimuth interval: pi/2 for linear geometries,
// pi for URA.
double azimuth_limit(const ArrayGeometry& geom);

// Throws std::invalid_argument on non-positive sizes/spacings or
// non-increasing positions.
void validate(const ArrayGeometry& geom);

// Angle-sampling grid. For URA each azimuth sample is paired with an
// elevation sample; elevation stays empty for linear geometries.
struct AngleGrid {
    std::vector<double> azimuth;    // radians
    std::vector<double> elevation;  // radians; empty or same length as azimuth

    std::size_t size() const { return azimuth.size(); }
    bool has_elevation() const { return !elevation.empty(); }

    // L uniform samples of (-limit, limit): -limit + 2*limit*(l - 1/2)/L.
    static AngleGrid uniform(std::size_t l_points, double limit);

    // L samples uniform in sin-space: asin(-1 + 2(l - 1/2)/L). Steering
    // vectors of linear arrays sampled this way stay near-orthogonal, which
    // angle-space sampling badly violates toward +-90 degrees.
    static AngleGrid sin_uniform(std::size_t l_points);

    // Flattened azimuth x elevation product grid for URA.
    static AngleGrid ura_product(const std::vector<double>& azimuths,
                                 const std::vector<double>& elevations);
};

// Steering vector a(theta) as an N x 1 column. Elevation must be supplied
// exactly when the geometry is a URA.
ComplexMatrix steering_vector(const ArrayGeometry& geom, double azimuth,
                              std::optional<double> elevation = std::nullopt);

// Element-wise analytic derivative of a(theta) w.r.t. azimuth; defined for
// one-dimensional geometries only.
ComplexMatrix steering_derivative(const ArrayGeometry& geom, double azimuth);

// N x L matrix whose column l is the steering vector at grid point l.
ComplexMatrix response_matrix(const ArrayGeometry& geom, const AngleGrid& grid);

}  // namespace aemmp

#endif

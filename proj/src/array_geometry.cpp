// SPDX-License-Identifier: Apache-2.0

#include "aemmp/array_geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aemmp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Normalized sinc and its derivative, series-expanded near zero.
double sinc(double x) {
    const double px = std::numbers::pi * x;
    if (std::abs(px) < 1e-6) return 1.0 - px * px / 6.0;
    return std::sin(px) / px;
}

double sinc_derivative(double x) {
    if (std::abs(x) < 1e-4) {
        const double pi2 = std::numbers::pi * std::numbers::pi;
        return -pi2 * x / 3.0 + pi2 * pi2 * x * x * x / 30.0;
    }
    return (std::cos(std::numbers::pi * x) - sinc(x)) / x;
}

cplx phase_exp(double arg) { return cplx(std::cos(arg), std::sin(arg)); }

}  // namespace

int antenna_count(const ArrayGeometry& geom) {
    return std::visit(
        [](const auto& g) -> int {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Ula>) return g.n_antennas;
            if constexpr (std::is_same_v<T, Lens>) return g.n_antennas;
            if constexpr (std::is_same_v<T, ArbitraryLinear>)
                return static_cast<int>(g.positions_over_wavelength.size());
            if constexpr (std::is_same_v<T, Ura>) return g.n_horizontal * g.n_vertical;
        },
        geom);
}

bool is_one_dimensional(const ArrayGeometry& geom) {
    return !std::holds_alternative<Ura>(geom);
}

double azimuth_limit(const ArrayGeometry& geom) {
    return is_one_dimensional(geom) ? std::numbers::pi / 2.0 : std::numbers::pi;
}

void validate(const ArrayGeometry& geom) {
    std::visit(
        [](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Ula>) {
                if (g.n_antennas < 1) throw std::invalid_argument("ULA: need at least one antenna");
                if (g.spacing_over_wavelength <= 0.0)
                    throw std::invalid_argument("ULA: spacing must be positive");
            } else if constexpr (std::is_same_v<T, Lens>) {
                if (g.n_antennas < 1) throw std::invalid_argument("Lens: need at least one antenna");
                if (g.aperture_over_wavelength <= 0.0)
                    throw std::invalid_argument("Lens: aperture must be positive");
            } else if constexpr (std::is_same_v<T, ArbitraryLinear>) {
                const auto& d = g.positions_over_wavelength;
                if (d.empty()) throw std::invalid_argument("linear array: no positions");
                if (d.front() != 0.0)
                    throw std::invalid_argument("linear array: first position must be 0");
                for (std::size_t i = 1; i < d.size(); ++i) {
                    if (d[i] <= d[i - 1])
                        throw std::invalid_argument("linear array: positions must be increasing");
                }
            } else if constexpr (std::is_same_v<T, Ura>) {
                if (g.n_horizontal < 1 || g.n_vertical < 1)
                    throw std::invalid_argument("URA: need at least one antenna per axis");
                if (g.spacing_over_wavelength <= 0.0)
                    throw std::invalid_argument("URA: spacing must be positive");
            }
        },
        geom);
}

AngleGrid AngleGrid::uniform(std::size_t l_points, double limit) {
    if (l_points < 1) throw std::invalid_argument("AngleGrid: need at least one point");
    AngleGrid grid;
    grid.azimuth.resize(l_points);
    for (std::size_t l = 0; l < l_points; ++l) {
        grid.azimuth[l] = -limit + 2.0 * limit * (static_cast<double>(l) + 0.5) /
                                        static_cast<double>(l_points);
    }
    return grid;
}

AngleGrid AngleGrid::sin_uniform(std::size_t l_points) {
    if (l_points < 1) throw std::invalid_argument("AngleGrid: need at least one point");
    AngleGrid grid;
    grid.azimuth.resize(l_points);
    for (std::size_t l = 0; l < l_points; ++l) {
        const double s = -1.0 + 2.0 * (static_cast<double>(l) + 0.5) /
                                    static_cast<double>(l_points);
        grid.azimuth[l] = std::asin(s);
    }
    return grid;
}

AngleGrid AngleGrid::ura_product(const std::vector<double>& azimuths,
                                 const std::vector<double>& elevations) {
    if (azimuths.empty() || elevations.empty())
        throw std::invalid_argument("AngleGrid: empty product axis");
    AngleGrid grid;
    grid.azimuth.reserve(azimuths.size() * elevations.size());
    grid.elevation.reserve(azimuths.size() * elevations.size());
    for (double el : elevations) {
        for (double az : azimuths) {
            grid.azimuth.push_back(az);
            grid.elevation.push_back(el);
        }
    }
    return grid;
}

ComplexMatrix steering_vector(const ArrayGeometry& geom, double azimuth,
                              std::optional<double> elevation) {
    if (std::holds_alternative<Ura>(geom)) {
        if (!elevation) throw std::invalid_argument("steering_vector: URA requires elevation");
    } else if (elevation) {
        throw std::invalid_argument("steering_vector: elevation given for 1-D geometry");
    }

    return std::visit(
        [&](const auto& g) -> ComplexMatrix {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Ula>) {
                const int n = g.n_antennas;
                const double norm = 1.0 / std::sqrt(static_cast<double>(n));
                const double step = -kTwoPi * g.spacing_over_wavelength * std::sin(azimuth);
                ComplexMatrix a(n, 1);
                for (int i = 0; i < n; ++i) a(i, 0) = norm * phase_exp(step * i);
                return a;
            } else if constexpr (std::is_same_v<T, Lens>) {
                const int n = g.n_antennas;
                const double shift = g.aperture_over_wavelength * std::sin(azimuth);
                ComplexMatrix a(n, 1);
                for (int i = 0; i < n; ++i) {
                    const double m = i - 0.5 * (n - 1);
                    a(i, 0) = cplx(sinc(m - shift), 0.0);
                }
                return a;
            } else if constexpr (std::is_same_v<T, ArbitraryLinear>) {
                const auto& d = g.positions_over_wavelength;
                const int n = static_cast<int>(d.size());
                const double norm = 1.0 / std::sqrt(static_cast<double>(n));
                const double factor = -kTwoPi * std::sin(azimuth);
                ComplexMatrix a(n, 1);
                for (int i = 0; i < n; ++i) a(i, 0) = norm * phase_exp(factor * d[i]);
                return a;
            } else {
                const double el = *elevation;
                const double base = kTwoPi * g.spacing_over_wavelength * std::cos(el);
                const double h_step = -base * std::sin(azimuth);
                const double v_step = base * std::cos(azimuth);
                const double h_norm = 1.0 / std::sqrt(static_cast<double>(g.n_horizontal));
                const double v_norm = 1.0 / std::sqrt(static_cast<double>(g.n_vertical));
                ComplexMatrix a(g.n_horizontal * g.n_vertical, 1);
                for (int v = 0; v < g.n_vertical; ++v) {
                    const cplx av = v_norm * phase_exp(v_step * v);
                    for (int h = 0; h < g.n_horizontal; ++h) {
                        a(v * g.n_horizontal + h, 0) = av * h_norm * phase_exp(h_step * h);
                    }
                }
                return a;
            }
        },
        geom);
}

ComplexMatrix steering_derivative(const ArrayGeometry& geom, double azimuth) {
    if (!is_one_dimensional(geom)) {
        throw std::invalid_argument("steering_derivative: unsupported geometry");
    }
    return std::visit(
        [&](const auto& g) -> ComplexMatrix {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Ula>) {
                ComplexMatrix a = steering_vector(geom, azimuth);
                const double chain = -kTwoPi * g.spacing_over_wavelength * std::cos(azimuth);
                for (int i = 0; i < g.n_antennas; ++i) {
                    a(i, 0) *= cplx(0.0, chain * i);
                }
                return a;
            } else if constexpr (std::is_same_v<T, Lens>) {
                const int n = g.n_antennas;
                const double shift = g.aperture_over_wavelength * std::sin(azimuth);
                const double chain = -g.aperture_over_wavelength * std::cos(azimuth);
                ComplexMatrix a(n, 1);
                for (int i = 0; i < n; ++i) {
                    const double m = i - 0.5 * (n - 1);
                    a(i, 0) = cplx(sinc_derivative(m - shift) * chain, 0.0);
                }
                return a;
            } else if constexpr (std::is_same_v<T, ArbitraryLinear>) {
                ComplexMatrix a = steering_vector(geom, azimuth);
                const auto& d = g.positions_over_wavelength;
                const double chain = -kTwoPi * std::cos(azimuth);
                for (std::size_t i = 0; i < d.size(); ++i) {
                    a(i, 0) *= cplx(0.0, chain * d[i]);
                }
                return a;
            } else {
                throw std::invalid_argument("steering_derivative: unsupported geometry");
            }
        },
        geom);
}

ComplexMatrix response_matrix(const ArrayGeometry& geom, const AngleGrid& grid) {
    const bool ura = std::holds_alternative<Ura>(geom);
    if (ura && !grid.has_elevation()) {
        throw std::invalid_argument("response_matrix: URA grid needs elevations");
    }
    if (!ura && grid.has_elevation()) {
        throw std::invalid_argument("response_matrix: elevation grid for 1-D geometry");
    }
    const int n = antenna_count(geom);
    ComplexMatrix a(n, grid.size());
    for (std::size_t l = 0; l < grid.size(); ++l) {
        const auto col = ura ? steering_vector(geom, grid.azimuth[l], grid.elevation[l])
                             : steering_vector(geom, grid.azimuth[l]);
        for (int i = 0; i < n; ++i) a(i, l) = col(i, 0);
    }
    return a;
}

}  // namespace aemmp

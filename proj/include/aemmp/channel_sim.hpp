// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth synthesis: clustered multipath scenes, user signals with a
// leading reference symbol, and noisy received matrices.

#ifndef AEMMP_CHANNEL_SIM_HPP
#define AEMMP_CHANNEL_SIM_HPP

#include "aemmp/array_geometry.hpp"
#include "aemmp/complex_matrix.hpp"
#include "aemmp/rng.hpp"

namespace aemmp {

// Per-user clustered multipath description. Paths of user k live in row k of
// the K x (Lc*Lp) matrices; cluster centers are stored user-major
// (K * Lc entries). Elevations are only populated for URA scenes.
struct ChannelScene {
    int n_clusters = 0;         // Lc
    int n_paths_per_cluster = 0;  // Lp
    std::vector<double> cluster_centers;  // radians, K*Lc, user-major
    double angular_spread = 0.0;          // total width, radians
    RealMatrix path_aoas;       // K x (Lc*Lp)
    RealMatrix path_elevations; // K x (Lc*Lp) for URA, otherwise empty
    ComplexMatrix path_gains;   // K x (Lc*Lp)
};

struct GroundTruth {
    ComplexMatrix H;   // N x K physical channel
    ComplexMatrix X;   // K x T signals, first column all x_ref
    ComplexMatrix Y;   // N x T received
    double noise_var = 0.0;
    cplx x_ref{1.0, 0.0};
};

// Cluster centers uniform over the geometry's azimuth range, per-path AoAs
// uniform within +-spread/2 around their center (clamped into the range),
// gains iid CN(0,1). URA scenes additionally draw a per-cluster elevation
// uniform in +-elevation_half_range.
ChannelScene draw_scene(int k_users, const ArrayGeometry& geom, int l_c, int l_p,
                        double spread, Rng& rng,
                        double elevation_half_range = 25.0 * 3.14159265358979323846 / 180.0);

// H column k = sum over paths of gain * steering vector.
ComplexMatrix synth_channel(const ArrayGeometry& geom, const ChannelScene& scene);

// K x T signals: column 1 pinned to x_ref, the rest iid CN(0,1). Requires
// t_len >= 2 (no data symbols otherwise).
ComplexMatrix generate_signals(int k_users, int t_len, cplx x_ref, Rng& rng);

// Y = H*X plus iid CN(0, noise_var) entries.
ComplexMatrix synth_rx(const ComplexMatrix& H, const ComplexMatrix& X, double noise_var,
                       Rng& rng);

GroundTruth synth_ground_truth(const ArrayGeometry& geom, const ChannelScene& scene,
                               int t_len, cplx x_ref, double noise_var, Rng& rng);

}  // namespace aemmp

#endif

// SPDX-License-Identifier: Apache-2.0

#include "aemmp/channel_sim.hpp"

#include <algorithm>
#include <stdexcept>

namespace aemmp {

ChannelScene draw_scene(int k_users, const ArrayGeometry& geom, int l_c, int l_p,
                        double spread, Rng& rng, double elevation_half_range) {
    if (k_users < 1) throw std::invalid_argument("draw_scene: need at least one user");
    if (l_c < 1 || l_p < 1) throw std::invalid_argument("draw_scene: need l_c, l_p >= 1");
    if (spread < 0.0) throw std::invalid_argument("draw_scene: negative spread");

    const bool ura = !is_one_dimensional(geom);
    const double limit = azimuth_limit(geom);
    const int paths = l_c * l_p;

    ChannelScene scene;
    scene.n_clusters = l_c;
    scene.n_paths_per_cluster = l_p;
    scene.angular_spread = spread;
    scene.cluster_centers.resize(static_cast<std::size_t>(k_users) * l_c);
    scene.path_aoas = RealMatrix(k_users, paths);
    scene.path_gains = ComplexMatrix(k_users, paths);
    if (ura) scene.path_elevations = RealMatrix(k_users, paths);

    for (int k = 0; k < k_users; ++k) {
        for (int c = 0; c < l_c; ++c) {
            const double center = rng.uniform(-limit, limit);
            scene.cluster_centers[static_cast<std::size_t>(k) * l_c + c] = center;
            const double elevation = ura ? rng.uniform(-elevation_half_range, elevation_half_range)
                                         : 0.0;
            for (int p = 0; p < l_p; ++p) {
                const int idx = c * l_p + p;
                double aoa = spread > 0.0 ? rng.uniform(center - spread / 2.0, center + spread / 2.0)
                                          : center;
                aoa = std::clamp(aoa, -limit + 1e-9, limit - 1e-9);
                scene.path_aoas(k, idx) = aoa;
                scene.path_gains(k, idx) = sample_cgaussian(cplx(0.0, 0.0), 1.0, rng);
                if (ura) scene.path_elevations(k, idx) = elevation;
            }
        }
    }
    return scene;
}

ComplexMatrix synth_channel(const ArrayGeometry& geom, const ChannelScene& scene) {
    const int n = antenna_count(geom);
    const int k_users = static_cast<int>(scene.path_aoas.rows());
    const int paths = static_cast<int>(scene.path_aoas.cols());
    const bool ura = !is_one_dimensional(geom);

    ComplexMatrix h(n, k_users);
    for (int k = 0; k < k_users; ++k) {
        for (int p = 0; p < paths; ++p) {
            const cplx gain = scene.path_gains(k, p);
            const auto a = ura ? steering_vector(geom, scene.path_aoas(k, p),
                                                 scene.path_elevations(k, p))
                               : steering_vector(geom, scene.path_aoas(k, p));
            for (int i = 0; i < n; ++i) h(i, k) += gain * a(i, 0);
        }
    }
    return h;
}

ComplexMatrix generate_signals(int k_users, int t_len, cplx x_ref, Rng& rng) {
    if (t_len < 2) throw std::invalid_argument("generate_signals: t_len must be >= 2");
    ComplexMatrix x(k_users, t_len);
    for (int k = 0; k < k_users; ++k) {
        x(k, 0) = x_ref;
        for (int t = 1; t < t_len; ++t) {
            x(k, t) = sample_cgaussian(cplx(0.0, 0.0), 1.0, rng);
        }
    }
    return x;
}

ComplexMatrix synth_rx(const ComplexMatrix& H, const ComplexMatrix& X, double noise_var,
                       Rng& rng) {
    if (noise_var < 0.0) throw std::invalid_argument("synth_rx: negative noise variance");
    ComplexMatrix y = matmul(H, X);
    if (noise_var > 0.0) {
        for (cplx& v : y.data()) v = sample_cgaussian(v, noise_var, rng);
    }
    return y;
}

GroundTruth synth_ground_truth(const ArrayGeometry& geom, const ChannelScene& scene,
                               int t_len, cplx x_ref, double noise_var, Rng& rng) {
    GroundTruth gt;
    gt.H = synth_channel(geom, scene);
    gt.X = generate_signals(static_cast<int>(scene.path_aoas.rows()), t_len, x_ref, rng);
    gt.Y = synth_rx(gt.H, gt.X, noise_var, rng);
    gt.noise_var = noise_var;
    gt.x_ref = x_ref;
    return gt;
}

}  // namespace aemmp

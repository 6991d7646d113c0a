// SPDX-License-Identifier: Apache-2.0
//
// The full blind channel-and-signal estimator: subspace projection, the EM
// loop (message-passing E-step, hyper-parameter/angle M-step), point
// estimation, reverse projection, and ambiguity handling.

#ifndef AEMMP_AEM_ESTIMATOR_HPP
#define AEMMP_AEM_ESTIMATOR_HPP

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "aemmp/amf_mp.hpp"
#include "aemmp/array_geometry.hpp"
#include "aemmp/channel_sim.hpp"
#include "aemmp/complex_matrix.hpp"
#include "aemmp/em_mstep.hpp"
#include "aemmp/mc_support.hpp"
#include "aemmp/priors.hpp"

namespace aemmp {

enum class SupportModel { kMarkov, kBernoulli };

struct EstimatorConfig {
    int max_em_iters = 14;        // J_max
    double stop_tol = 1e-4;       // delta_2 on the corrected X change
    int grid_size = 0;            // L (ignored when initial_grid is given)
    AmfConfig amf;
    AngleTuneConfig angle_tune;
    cplx x_ref{1.0, 0.0};
    SupportModel support = SupportModel::kMarkov;
    int mstep_rounds = 3;         // nested varphi/lambda/p01 refinements
    std::optional<AngleGrid> initial_grid;  // overrides the uniform grid
    std::vector<double> ura_elevations;     // URA grid elevation samples (radians)
    std::ostream* diagnostics = nullptr;    // JSON-lines per EM iteration
};

struct EmIterationRecord {
    int em_iter = 0;
    double sigma2 = 0.0;
    double lambda = 0.0;
    double p01 = 0.0;
    int inner_iters = 0;
    double residual = 0.0;
    std::vector<double> grid;
};

struct EstimationResult {
    ComplexMatrix X_hat;  // K x T, first column pinned to x_ref
    ComplexMatrix S_hat;  // L x K
    ComplexMatrix H_hat;  // N x K = A(grid) * S_hat
    HyperParams learned;
    RealMatrix support_posterior;  // omega, L x K
    std::vector<EmIterationRecord> diagnostics;
    bool converged = false;
    int em_iters_used = 0;
};

// Subspace projection: Y_bar = Y * V1 with V1 the k dominant right-singular
// vectors. Requires cols(Y) >= k.
std::pair<ComplexMatrix, ComplexMatrix> project(const ComplexMatrix& Y, int k_users);

// lambda = 0.1, p01 = 0.5, sigma^2 = ||Y||_F^2 / (100 N T), varphi = 1, and a
// uniform angle grid (or the configured one).
HyperParams initialize_hyperparams(const ComplexMatrix& Y, const ArrayGeometry& geom,
                                   const EstimatorConfig& cfg);

// Phase-ambiguity elimination via the reference symbol: scales each X row so
// its first entry equals x_ref and applies the inverse scale to the matching
// S column, leaving S*X unchanged. Throws when some first-column entry is 0.
void resolve_phase(ComplexMatrix& X_hat, ComplexMatrix& S_hat, cplx x_ref);

// Greedy bijective row assignment maximizing |row correlation|; perm[i] is
// the true-signal row matched to estimated row i.
std::vector<int> match_permutation(const ComplexMatrix& X_hat, const ComplexMatrix& X_true);

// Full estimation run; deterministic given (Y, geom, cfg, rng seed).
EstimationResult run(const ComplexMatrix& Y, const ArrayGeometry& geom, int k_users,
                     const EstimatorConfig& cfg, Rng& rng);

}  // namespace aemmp

#endif

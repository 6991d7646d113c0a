// SPDX-License-Identifier: Apache-2.0
//
// JSON (de)serialization: scenes and ground truth for reproducibility,
// hyper-parameter checkpoints, experiment spec files. Complex values are
// encoded as [re, im] pairs.

#ifndef AEMMP_JSON_IO_HPP
#define AEMMP_JSON_IO_HPP

#include <string>

#include "aemmp/channel_sim.hpp"
#include "aemmp/experiment.hpp"
#include "aemmp/priors.hpp"

namespace aemmp {

std::string to_json(const ComplexMatrix& m);
std::string to_json(const ChannelScene& scene);
std::string to_json(const GroundTruth& gt);
std::string to_json(const HyperParams& psi);

ChannelScene scene_from_json(const std::string& text);
HyperParams hyperparams_from_json(const std::string& text);

// Spec files are flat JSON objects; unknown keys are rejected.
ExperimentSpec experiment_spec_from_json(const std::string& text);
std::string to_json(const ExperimentSpec& spec);

}  // namespace aemmp

#endif

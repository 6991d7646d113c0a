// SPDX-License-Identifier: Apache-2.0

#include "aemmp/json_io.hpp"

#include <stdexcept>

#include <json.hpp>

namespace aemmp {

namespace {

using nlohmann::json;

json complex_to_json(const cplx& v) { return json::array({v.real(), v.imag()}); }

json matrix_to_json(const ComplexMatrix& m) {
    json entries = json::array();
    for (const cplx& v : m.data()) entries.push_back(complex_to_json(v));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries}};
}

json matrix_to_json(const RealMatrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", m.data()}};
}

ComplexMatrix complex_matrix_from_json(const json& j) {
    ComplexMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto& entries = j.at("entries");
    if (entries.size() != m.size()) throw std::invalid_argument("matrix: entry count mismatch");
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.data()[i] = cplx(entries[i][0].get<double>(), entries[i][1].get<double>());
    }
    return m;
}

RealMatrix real_matrix_from_json(const json& j) {
    RealMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto& entries = j.at("entries");
    if (entries.size() != m.size()) throw std::invalid_argument("matrix: entry count mismatch");
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = entries[i].get<double>();
    return m;
}

json grid_to_json(const AngleGrid& grid) {
    json j{{"azimuth", grid.azimuth}};
    if (grid.has_elevation()) j["elevation"] = grid.elevation;
    return j;
}

AngleGrid grid_from_json(const json& j) {
    AngleGrid grid;
    grid.azimuth = j.at("azimuth").get<std::vector<double>>();
    if (j.contains("elevation")) grid.elevation = j.at("elevation").get<std::vector<double>>();
    return grid;
}

}  // namespace

std::string to_json(const ComplexMatrix& m) { return matrix_to_json(m).dump(); }

std::string to_json(const ChannelScene& scene) {
    json j{{"n_clusters", scene.n_clusters},
           {"n_paths_per_cluster", scene.n_paths_per_cluster},
           {"cluster_centers", scene.cluster_centers},
           {"angular_spread", scene.angular_spread},
           {"path_aoas", matrix_to_json(scene.path_aoas)},
           {"path_gains", matrix_to_json(scene.path_gains)}};
    if (scene.path_elevations.size() > 0) {
        j["path_elevations"] = matrix_to_json(scene.path_elevations);
    }
    return j.dump();
}

std::string to_json(const GroundTruth& gt) {
    return json{{"H", matrix_to_json(gt.H)},
                {"X", matrix_to_json(gt.X)},
                {"Y", matrix_to_json(gt.Y)},
                {"noise_var", gt.noise_var},
                {"x_ref", complex_to_json(gt.x_ref)}}
        .dump();
}

std::string to_json(const HyperParams& psi) {
    return json{{"noise_var", psi.noise_var},
                {"lambda", psi.lambda},
                {"p01", psi.p01},
                {"varphi", psi.varphi},
                {"grid", grid_to_json(psi.grid)}}
        .dump();
}

ChannelScene scene_from_json(const std::string& text) {
    const json j = json::parse(text);
    ChannelScene scene;
    scene.n_clusters = j.at("n_clusters").get<int>();
    scene.n_paths_per_cluster = j.at("n_paths_per_cluster").get<int>();
    scene.cluster_centers = j.at("cluster_centers").get<std::vector<double>>();
    scene.angular_spread = j.at("angular_spread").get<double>();
    scene.path_aoas = real_matrix_from_json(j.at("path_aoas"));
    scene.path_gains = complex_matrix_from_json(j.at("path_gains"));
    if (j.contains("path_elevations")) {
        scene.path_elevations = real_matrix_from_json(j.at("path_elevations"));
    }
    return scene;
}

HyperParams hyperparams_from_json(const std::string& text) {
    const json j = json::parse(text);
    HyperParams psi;
    psi.noise_var = j.at("noise_var").get<double>();
    psi.lambda = j.at("lambda").get<double>();
    psi.p01 = j.at("p01").get<double>();
    psi.varphi = j.at("varphi").get<std::vector<double>>();
    psi.grid = grid_from_json(j.at("grid"));
    return psi;
}

ExperimentSpec experiment_spec_from_json(const std::string& text) {
    const json j = json::parse(text);
    ExperimentSpec spec;
    for (const auto& [key, value] : j.items()) {
        if (key == "geometry") {
            spec.geometry.kind = value.get<std::string>();
        } else if (key == "spacing_over_wavelength") {
            spec.geometry.spacing_over_wavelength = value.get<double>();
        } else if (key == "aperture_over_wavelength") {
            spec.geometry.aperture_over_wavelength = value.get<double>();
        } else if (key == "ura_n_horizontal") {
            spec.geometry.n_horizontal = value.get<int>();
        } else if (key == "ura_n_vertical") {
            spec.geometry.n_vertical = value.get<int>();
        } else if (key == "n_antennas") {
            spec.n_antennas = value.get<int>();
        } else if (key == "k_users") {
            spec.k_users = value.get<int>();
        } else if (key == "t_len") {
            spec.t_len = value.get<int>();
        } else if (key == "grid_size") {
            spec.grid_size = value.get<int>();
        } else if (key == "l_c") {
            spec.l_c = value.get<int>();
        } else if (key == "l_p") {
            spec.l_p = value.get<int>();
        } else if (key == "spread_deg") {
            spec.spread_deg = value.get<double>();
        } else if (key == "snr_db_list") {
            spec.snr_db_list = value.get<std::vector<double>>();
        } else if (key == "n_trials") {
            spec.n_trials = value.get<int>();
        } else if (key == "seed") {
            spec.seed = value.get<std::uint64_t>();
        } else if (key == "estimator_variant") {
            spec.estimator_variant = value.get<std::string>();
        } else if (key == "output_path") {
            spec.output_path = value.get<std::string>();
        } else if (key == "scene_type") {
            spec.scene_type = value.get<std::string>();
        } else if (key == "on_grid_lambda") {
            spec.on_grid_lambda = value.get<double>();
        } else if (key == "max_em_iters") {
            spec.max_em_iters = value.get<int>();
        } else if (key == "max_inner_iters") {
            spec.max_inner_iters = value.get<int>();
        } else if (key == "em_stop_tol") {
            spec.em_stop_tol = value.get<double>();
        } else if (key == "amf_stop_tol") {
            spec.amf_stop_tol = value.get<double>();
        } else if (key == "angle_updates_per_em_iter") {
            spec.angle_updates_per_em_iter = value.get<int>();
        } else if (key == "angle_step_integer_t") {
            spec.angle_step_integer_t = value.get<int>();
        } else if (key == "mstep_rounds") {
            spec.mstep_rounds = value.get<int>();
        } else if (key == "ura_elevations_deg") {
            spec.ura_elevations_deg = value.get<std::vector<double>>();
        } else {
            throw std::invalid_argument("experiment spec: unknown key " + key);
        }
    }
    return spec;
}

std::string to_json(const ExperimentSpec& spec) {
    json j{{"geometry", spec.geometry.kind},
           {"spacing_over_wavelength", spec.geometry.spacing_over_wavelength},
           {"n_antennas", spec.n_antennas},
           {"k_users", spec.k_users},
           {"t_len", spec.t_len},
           {"grid_size", spec.grid_size},
           {"l_c", spec.l_c},
           {"l_p", spec.l_p},
           {"spread_deg", spec.spread_deg},
           {"snr_db_list", spec.snr_db_list},
           {"n_trials", spec.n_trials},
           {"seed", spec.seed},
           {"estimator_variant", spec.estimator_variant},
           {"output_path", spec.output_path},
           {"scene_type", spec.scene_type},
           {"on_grid_lambda", spec.on_grid_lambda},
           {"max_em_iters", spec.max_em_iters},
           {"max_inner_iters", spec.max_inner_iters},
           {"em_stop_tol", spec.em_stop_tol},
           {"amf_stop_tol", spec.amf_stop_tol},
           {"angle_updates_per_em_iter", spec.angle_updates_per_em_iter},
           {"angle_step_integer_t", spec.angle_step_integer_t},
           {"mstep_rounds", spec.mstep_rounds}};
    if (spec.geometry.aperture_over_wavelength > 0.0) {
        j["aperture_over_wavelength"] = spec.geometry.aperture_over_wavelength;
    }
    if (spec.geometry.n_horizontal > 0) j["ura_n_horizontal"] = spec.geometry.n_horizontal;
    if (spec.geometry.n_vertical > 0) j["ura_n_vertical"] = spec.geometry.n_vertical;
    if (!spec.ura_elevations_deg.empty()) j["ura_elevations_deg"] = spec.ura_elevations_deg;
    return j.dump(2);
}

}  // namespace aemmp

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "mesh.hpp"
#include "reconstruction.hpp"
#include "studies.hpp"

namespace rct {

using json = nlohmann::json;

// Full run configuration. JSON with a versioned schema; unknown keys are
// rejected so typos fail fast.
struct RunConfig {
    int schema_version = 1;

    double width = 60.0, depth = 60.0, height = 10.0;  // mm
    ElectrodeLayout layout{4, 4.0, 15.0};
    GradientSpec gradient{1.0, 1.0, 0.0, 0.0};
    int shell_divisions = 45;
    std::array<int, 3> volume_divisions{30, 30, 5};

    double v_cc = 2.0;
    double contact_diameter = 4.0;  // mm

    ReconConfig recon{5000.0, 64};

    // Sweep axes and study inputs.
    int sigma_points = 11;
    double sigma_min = 0.001, sigma_max = 100.0;
    int contact_points = 9;
    double contact_min = 0.001, contact_max = 10.0;
    std::vector<std::pair<double, double>> pa_positions = default_pa_positions();
    std::vector<double> thicknesses{1.0, 2.0, 4.0, 8.0, 16.0};
    AdhesionConfig adhesion;

    std::vector<ContactSpec> contacts;     // for `simulate`
    std::vector<MaterialPoint> materials;  // for positioning plots

    std::string out_dir = "out";
    std::uint64_t seed = 1;
    int threads = 1;
    double grid_scale = 1.0;

    void validate() const {
        if (schema_version != 1) throw_config("config: unsupported schema_version");
        if (width <= 0 || depth <= 0 || height <= 0) throw_config("config: sensor dimensions must be positive");
        if (shell_divisions < 1) throw_config("config: shell_divisions must be >= 1");
        for (int d : volume_divisions)
            if (d < 1) throw_config("config: volume divisions must be >= 1");
        if (v_cc <= 0) throw_config("config: v_cc must be positive");
        if (contact_diameter <= 0) throw_config("config: contact_diameter must be positive");
        recon.validate();
        if (!(grid_scale > 0)) throw_config("config: grid_scale must be positive");
        if (threads < 1) throw_config("config: threads must be >= 1");
    }

    // Mesh resolutions scale with --grid-scale (rounded, floor 1); sweep axis
    // point counts floor-scale with minimums that keep the fit well posed.
    int scaled_shell_divisions() const {
        return std::max(1, static_cast<int>(std::lround(shell_divisions * grid_scale)));
    }
    std::array<int, 3> scaled_volume_divisions() const {
        std::array<int, 3> out{};
        for (int k = 0; k < 3; ++k)
            out[static_cast<std::size_t>(k)] =
                std::max(1, static_cast<int>(std::lround(volume_divisions[static_cast<std::size_t>(k)] * grid_scale)));
        return out;
    }
    int scaled_sigma_points() const {
        return std::max(2, static_cast<int>(std::floor(sigma_points * grid_scale)));
    }
    int scaled_contact_points() const {
        return std::max(4, static_cast<int>(std::floor(contact_points * grid_scale)));
    }

    StudySetup study_setup() const {
        StudySetup s;
        s.width = width;
        s.depth = depth;
        s.height = height;
        s.layout = layout;
        s.v_cc = v_cc;
        s.contact_diameter = contact_diameter;
        s.vol_div = scaled_volume_divisions();
        s.shell_div = scaled_shell_divisions();
        s.recon = recon;
        s.threads = threads;
        s.seed = seed;
        return s;
    }

    SweepGrid sweep_grid() const {
        return make_sweep_grid(scaled_sigma_points(), sigma_min, sigma_max, scaled_contact_points(),
                               contact_min, contact_max, pa_positions);
    }

    Mesh make_shell() const {
        return build_shell_mesh(width, depth, scaled_shell_divisions(), layout, 1.0);
    }

    Mesh make_volume() const {
        return build_volume_mesh(width, depth, height, scaled_volume_divisions(), gradient, layout);
    }

    std::uint64_t compat() const { return compat_fingerprint(width, depth, layout, v_cc); }
};

namespace detail {

inline void reject_unknown(const json& obj, const std::vector<std::string>& known,
                           const std::string& where) {
    if (!obj.is_object()) throw_config("config: " + where + " must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw_config("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception& e) {
            throw_config(std::string("config: bad value for '") + key + "': " + e.what());
        }
    }
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
    RunConfig cfg;
    detail::reject_unknown(
        j,
        {"schema_version", "sensor", "electrodes", "gradient", "mesh", "drive", "reconstruction",
         "sweep", "contacts", "materials", "out_dir", "seed", "threads", "grid_scale"},
        "top level");
    detail::get_if(j, "schema_version", cfg.schema_version);
    if (j.contains("sensor")) {
        const auto& s = j.at("sensor");
        detail::reject_unknown(s, {"width_mm", "depth_mm", "height_mm"}, "sensor");
        detail::get_if(s, "width_mm", cfg.width);
        detail::get_if(s, "depth_mm", cfg.depth);
        detail::get_if(s, "height_mm", cfg.height);
    }
    if (j.contains("electrodes")) {
        const auto& s = j.at("electrodes");
        detail::reject_unknown(s, {"per_side", "diameter_mm", "pitch_mm"}, "electrodes");
        detail::get_if(s, "per_side", cfg.layout.per_side);
        detail::get_if(s, "diameter_mm", cfg.layout.diameter);
        if (s.contains("pitch_mm"))
            cfg.layout.pitch = s.at("pitch_mm").get<double>();
        else
            cfg.layout.pitch = cfg.width / cfg.layout.per_side;
    } else {
        cfg.layout.pitch = cfg.width / cfg.layout.per_side;
    }
    if (j.contains("gradient")) {
        const auto& s = j.at("gradient");
        detail::reject_unknown(s, {"sigma_low", "sigma_up"}, "gradient");
        detail::get_if(s, "sigma_low", cfg.gradient.sigma_low);
        detail::get_if(s, "sigma_up", cfg.gradient.sigma_up);
    }
    if (j.contains("mesh")) {
        const auto& s = j.at("mesh");
        detail::reject_unknown(s, {"shell_divisions", "volume_divisions"}, "mesh");
        detail::get_if(s, "shell_divisions", cfg.shell_divisions);
        if (s.contains("volume_divisions")) {
            auto v = s.at("volume_divisions").get<std::vector<int>>();
            if (v.size() != 3) throw_config("config: volume_divisions must have 3 entries");
            cfg.volume_divisions = {v[0], v[1], v[2]};
        }
    }
    if (j.contains("drive")) {
        const auto& s = j.at("drive");
        detail::reject_unknown(s, {"v_cc", "contact_diameter_mm"}, "drive");
        detail::get_if(s, "v_cc", cfg.v_cc);
        detail::get_if(s, "contact_diameter_mm", cfg.contact_diameter);
    }
    if (j.contains("reconstruction")) {
        const auto& s = j.at("reconstruction");
        detail::reject_unknown(s, {"lambda_sq", "raster"}, "reconstruction");
        detail::get_if(s, "lambda_sq", cfg.recon.lambda_sq);
        detail::get_if(s, "raster", cfg.recon.raster);
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        detail::reject_unknown(s,
                               {"sigma_points", "sigma_min", "sigma_max", "contact_points",
                                "contact_min", "contact_max", "pa_positions", "thicknesses_mm",
                                "adhesion"},
                               "sweep");
        detail::get_if(s, "sigma_points", cfg.sigma_points);
        detail::get_if(s, "sigma_min", cfg.sigma_min);
        detail::get_if(s, "sigma_max", cfg.sigma_max);
        detail::get_if(s, "contact_points", cfg.contact_points);
        detail::get_if(s, "contact_min", cfg.contact_min);
        detail::get_if(s, "contact_max", cfg.contact_max);
        if (s.contains("pa_positions")) {
            cfg.pa_positions.clear();
            for (const auto& p : s.at("pa_positions")) {
                auto v = p.get<std::vector<double>>();
                if (v.size() != 2) throw_config("config: pa_positions entries must be [x, y]");
                cfg.pa_positions.emplace_back(v[0], v[1]);
            }
        }
        detail::get_if(s, "thicknesses_mm", cfg.thicknesses);
        if (s.contains("adhesion")) {
            const auto& a = s.at("adhesion");
            detail::reject_unknown(a,
                                   {"dot_grids", "diameters_mm", "position_diameters_mm",
                                    "in_dot_sigma", "out_dot_sigma", "layer_sigma", "contact_sigma",
                                    "block_voltage"},
                                   "sweep.adhesion");
            detail::get_if(a, "dot_grids", cfg.adhesion.dot_grids);
            detail::get_if(a, "diameters_mm", cfg.adhesion.diameters);
            detail::get_if(a, "position_diameters_mm", cfg.adhesion.position_diameters);
            detail::get_if(a, "in_dot_sigma", cfg.adhesion.in_dot_sigma);
            detail::get_if(a, "out_dot_sigma", cfg.adhesion.out_dot_sigma);
            detail::get_if(a, "layer_sigma", cfg.adhesion.layer_sigma);
            detail::get_if(a, "contact_sigma", cfg.adhesion.contact_sigma);
            detail::get_if(a, "block_voltage", cfg.adhesion.block_voltage);
        }
    }
    if (j.contains("contacts")) {
        for (const auto& c : j.at("contacts")) {
            detail::reject_unknown(c, {"x_mm", "y_mm", "diameter_mm", "sigma_drv"}, "contacts[]");
            ContactSpec spec;
            spec.diameter = cfg.contact_diameter;
            detail::get_if(c, "x_mm", spec.x);
            detail::get_if(c, "y_mm", spec.y);
            detail::get_if(c, "diameter_mm", spec.diameter);
            detail::get_if(c, "sigma_drv", spec.sigma_drv);
            cfg.contacts.push_back(spec);
        }
    }
    if (j.contains("materials")) {
        for (const auto& m : j.at("materials")) {
            detail::reject_unknown(m, {"label", "sigma", "sigma_low", "sigma_up"}, "materials[]");
            MaterialPoint pt;
            detail::get_if(m, "label", pt.label);
            if (m.contains("sigma")) {
                pt.sigma_low = pt.sigma_up = m.at("sigma").get<double>();
            } else {
                detail::get_if(m, "sigma_low", pt.sigma_low);
                detail::get_if(m, "sigma_up", pt.sigma_up);
            }
            if (pt.label.empty()) throw_config("config: material entries need a label");
            cfg.materials.push_back(pt);
        }
    }
    detail::get_if(j, "out_dir", cfg.out_dir);
    detail::get_if(j, "seed", cfg.seed);
    detail::get_if(j, "threads", cfg.threads);
    detail::get_if(j, "grid_scale", cfg.grid_scale);
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw_config("cannot open config file " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw_config("config parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

inline json config_to_json(const RunConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["sensor"] = {{"width_mm", cfg.width}, {"depth_mm", cfg.depth}, {"height_mm", cfg.height}};
    j["electrodes"] = {{"per_side", cfg.layout.per_side},
                       {"diameter_mm", cfg.layout.diameter},
                       {"pitch_mm", cfg.layout.pitch}};
    j["gradient"] = {{"sigma_low", cfg.gradient.sigma_low}, {"sigma_up", cfg.gradient.sigma_up}};
    j["mesh"] = {{"shell_divisions", cfg.shell_divisions},
                 {"volume_divisions", cfg.volume_divisions}};
    j["drive"] = {{"v_cc", cfg.v_cc}, {"contact_diameter_mm", cfg.contact_diameter}};
    j["reconstruction"] = {{"lambda_sq", cfg.recon.lambda_sq}, {"raster", cfg.recon.raster}};
    json sweep;
    sweep["sigma_points"] = cfg.sigma_points;
    sweep["sigma_min"] = cfg.sigma_min;
    sweep["sigma_max"] = cfg.sigma_max;
    sweep["contact_points"] = cfg.contact_points;
    sweep["contact_min"] = cfg.contact_min;
    sweep["contact_max"] = cfg.contact_max;
    json positions = json::array();
    for (const auto& p : cfg.pa_positions) positions.push_back({p.first, p.second});
    sweep["pa_positions"] = positions;
    sweep["thicknesses_mm"] = cfg.thicknesses;
    sweep["adhesion"] = {{"dot_grids", cfg.adhesion.dot_grids},
                         {"diameters_mm", cfg.adhesion.diameters},
                         {"position_diameters_mm", cfg.adhesion.position_diameters},
                         {"in_dot_sigma", cfg.adhesion.in_dot_sigma},
                         {"out_dot_sigma", cfg.adhesion.out_dot_sigma},
                         {"layer_sigma", cfg.adhesion.layer_sigma},
                         {"contact_sigma", cfg.adhesion.contact_sigma},
                         {"block_voltage", cfg.adhesion.block_voltage}};
    j["sweep"] = sweep;
    json contacts = json::array();
    for (const auto& c : cfg.contacts)
        contacts.push_back({{"x_mm", c.x}, {"y_mm", c.y}, {"diameter_mm", c.diameter}, {"sigma_drv", c.sigma_drv}});
    j["contacts"] = contacts;
    json materials = json::array();
    for (const auto& m : cfg.materials)
        materials.push_back({{"label", m.label}, {"sigma_low", m.sigma_low}, {"sigma_up", m.sigma_up}});
    j["materials"] = materials;
    j["out_dir"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["grid_scale"] = cfg.grid_scale;
    return j;
}

}  // namespace rct

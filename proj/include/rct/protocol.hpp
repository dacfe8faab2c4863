#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "fem.hpp"
#include "mesh.hpp"

namespace rct {

// One full grounding cycle: n_e^2 electrode potentials with layout
// index = ground * n_e + measure in the canonical electrode ordering.
struct PotentialFrame {
    int n_e = 0;
    Eigen::VectorXd values;  // V
    double v_cc = 0.0;
    std::uint64_t compat_fp = 0;  // sensor/electrode/drive compatibility fingerprint

    double at(int ground, int measure) const { return values[ground * n_e + measure]; }
};

// Fingerprint of the surfaces two artifacts must share to be combined:
// sensor plane size, electrode layout, drive voltage.
inline std::uint64_t compat_fingerprint(double width, double depth, const ElectrodeLayout& layout,
                                        double v_cc) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = hash_mix(h, width);
    h = hash_mix(h, depth);
    h = hash_mix(h, static_cast<std::int64_t>(layout.per_side));
    h = hash_mix(h, layout.diameter);
    h = hash_mix(h, layout.pitch);
    h = hash_mix(h, v_cc);
    return h;
}

// Sequential-grounding acquisition: for each ground electrode g, the drive
// nodes are held at v_cc and g's pad at 0 V; all other electrodes float
// (pure Neumann) and read the mean nodal potential of their pad.
inline PotentialFrame acquire_frame(const Mesh& mesh, double v_cc, int threads = 1) {
    if (mesh.drive_nodes.empty())
        throw_config("acquire_frame: mesh has no drive nodes (apply_regions not called?)");
    if (mesh.electrodes.size() < 2) throw_config("acquire_frame: need at least 2 electrodes");
    int n_e = static_cast<int>(mesh.electrodes.size());

    StiffnessSystem sys = assemble(mesh);

    PotentialFrame frame;
    frame.n_e = n_e;
    frame.v_cc = v_cc;
    frame.values = Eigen::VectorXd::Zero(n_e * n_e);

    parallel_for(n_e, threads, [&](int g) {
        std::vector<int> constrained = mesh.drive_nodes;
        for (int n : mesh.electrodes[static_cast<std::size_t>(g)]) constrained.push_back(n);
        {
            std::vector<int> check = constrained;
            std::sort(check.begin(), check.end());
            if (std::adjacent_find(check.begin(), check.end()) != check.end())
                throw_config("acquire_frame: drive nodes overlap electrode " + std::to_string(g));
        }
        ReducedSystem reduced(sys, constrained);
        std::vector<double> values(reduced.constrained_nodes().size(), 0.0);
        // Constrained set is sorted; drive nodes get v_cc, ground pad stays 0.
        for (int n : mesh.drive_nodes) {
            auto it = std::lower_bound(reduced.constrained_nodes().begin(),
                                       reduced.constrained_nodes().end(), n);
            values[static_cast<std::size_t>(it - reduced.constrained_nodes().begin())] = v_cc;
        }
        FieldSolution sol;
        try {
            sol = reduced.solve(values);
        } catch (const Error& err) {
            throw Error(err.kind(), "ground electrode " + std::to_string(g) + ": " + err.what());
        }
        for (int m = 0; m < n_e; ++m) {
            double mean = 0.0;
            const auto& pad = mesh.electrodes[static_cast<std::size_t>(m)];
            for (int n : pad) mean += sol.phi[n];
            frame.values[g * n_e + m] = mean / static_cast<double>(pad.size());
        }
        frame.values[g * n_e + g] = 0.0;  // exact by construction
    });
    return frame;
}

// ---- frame stream format ----------------------------------------------
// One frame per line, comma-separated decimal values in canonical layout,
// optionally prefixed by a timestamp field. '#' lines are comments.

inline void write_frame_line(const PotentialFrame& frame, std::ostream& os,
                             const std::optional<double>& timestamp = std::nullopt) {
    if (timestamp) os << fmt9(*timestamp) << ',';
    for (int i = 0; i < frame.values.size(); ++i) {
        if (i) os << ',';
        os << fmt9(frame.values[i]);
    }
    os << '\n';
}

struct FrameParseResult {
    bool ok = false;
    std::string error;
    Eigen::VectorXd values;
    std::optional<double> timestamp;
};

inline FrameParseResult parse_frame_line(const std::string& line, int n_e) {
    FrameParseResult out;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t pos = 0;
            double v = std::stod(tok, &pos);
            while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
            if (pos != tok.size()) throw std::invalid_argument(tok);
            fields.push_back(v);
        } catch (const std::exception&) {
            out.error = "unparseable field '" + tok + "'";
            return out;
        }
    }
    std::size_t expect = static_cast<std::size_t>(n_e) * static_cast<std::size_t>(n_e);
    if (fields.size() == expect + 1) {
        out.timestamp = fields.front();
        fields.erase(fields.begin());
    } else if (fields.size() != expect) {
        out.error = "expected " + std::to_string(expect) + " values, got " + std::to_string(fields.size());
        return out;
    }
    out.values = Eigen::Map<Eigen::VectorXd>(fields.data(), static_cast<Eigen::Index>(fields.size()));
    out.ok = true;
    return out;
}

inline void write_frames_csv(const std::vector<PotentialFrame>& frames, std::ostream& os,
                             std::uint64_t compat_fp) {
    os << "# rct frames v1\n";
    os << "# compat " << hex16(compat_fp) << '\n';
    for (const auto& f : frames) write_frame_line(f, os);
}

struct FramesFile {
    std::vector<Eigen::VectorXd> frames;
    std::uint64_t compat_fp = 0;
    bool has_fp = false;
};

inline FramesFile read_frames_csv(std::istream& is, int n_e) {
    FramesFile out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::stringstream ss(line);
            std::string hash, key, value;
            ss >> hash >> key >> value;
            if (key == "compat") {
                out.compat_fp = std::stoull(value, nullptr, 16);
                out.has_fp = true;
            }
            continue;
        }
        auto parsed = parse_frame_line(line, n_e);
        if (!parsed.ok)
            throw_config("frames file line " + std::to_string(lineno) + ": " + parsed.error);
        out.frames.push_back(parsed.values);
    }
    return out;
}

inline FramesFile read_frames_csv(const std::string& path, int n_e) {
    std::ifstream is(path);
    if (!is) throw_config("cannot open frames file " + path);
    return read_frames_csv(is, n_e);
}

}  // namespace rct

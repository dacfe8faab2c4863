#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"

namespace rct {

// Exponential through-thickness conductivity. z is the vertical (thickness)
// axis of the detector; (x, y) are the sensor-plane coordinates used by
// contacts, centroids and position metrics. A z_max <= z_min range means
// "span the full mesh height".
struct GradientSpec {
    double sigma_low = 1.0;  // S/m at the bottom surface
    double sigma_up = 1.0;   // S/m at the top surface
    double z_min = 0.0;      // mm
    double z_max = 0.0;      // mm

    double at(double z, double h_min, double h_max) const {
        double lo = z_min, hi = z_max;
        if (!(hi > lo)) {
            lo = h_min;
            hi = h_max;
        }
        double t = (z - lo) / (hi - lo);
        return sigma_low * std::pow(sigma_up / sigma_low, t);
    }
};

// Square electrode array on the bottom face. Ordering is row-major with x
// fastest: electrode e = iy * per_side + ix.
struct ElectrodeLayout {
    int per_side = 4;
    double diameter = 4.0;  // mm
    double pitch = 15.0;    // mm
};

struct ContactSpec {
    double x = 0.0;          // mm, sensor plane
    double y = 0.0;          // mm
    double diameter = 4.0;   // mm
    double sigma_drv = 1.0;  // S/m of the driven contact layer
};

// Conductive dot pattern on the stacked-layer interface.
struct AdhesionSpec {
    int dots_per_side = 5;
    double dot_diameter = 7.22;    // mm
    double in_dot_sigma = 1.0;     // S/m
    double out_dot_sigma = 1e-9;   // S/m, numerical zero between dots
};

enum class MeshFlavor { shell2d, volume3d };

// Structured mesh of the box detector. Shell meshes are triangulated grids in
// the z=0 plane; volume meshes are grids of axis-aligned hexahedra. Plain
// struct with public members; builders below enforce the invariants.
struct Mesh {
    MeshFlavor flavor = MeshFlavor::shell2d;
    double width = 0.0;   // mm, x extent
    double depth = 0.0;   // mm, y extent
    double height = 0.0;  // mm, z extent (0 for shell)
    int nx = 0, ny = 0, nz = 0;

    std::vector<std::array<double, 3>> nodes;  // mm
    std::vector<std::array<int, 3>> tris;      // shell connectivity
    std::vector<std::array<int, 8>> hexes;     // volume connectivity
    std::vector<double> sigma;                 // S/m per element

    std::vector<std::vector<int>> electrodes;  // node sets, canonical order
    std::vector<int> drive_nodes;              // Dirichlet v_cc nodes
    std::vector<int> contact_elements;         // sigma_drv layer
    std::vector<int> interface_elements;       // adhesion layer
    std::vector<int> in_dot_elements;
    std::vector<std::string> warnings;

    int element_count() const {
        return flavor == MeshFlavor::shell2d ? static_cast<int>(tris.size())
                                             : static_cast<int>(hexes.size());
    }
    int node_count() const { return static_cast<int>(nodes.size()); }

    // Signed area of a shell triangle (positive for the CCW builder output).
    double tri_area(int e) const {
        const auto& t = tris[static_cast<std::size_t>(e)];
        const auto& a = nodes[static_cast<std::size_t>(t[0])];
        const auto& b = nodes[static_cast<std::size_t>(t[1])];
        const auto& c = nodes[static_cast<std::size_t>(t[2])];
        return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    }

    double hex_volume(int e) const {
        const auto& h = hexes[static_cast<std::size_t>(e)];
        const auto& a = nodes[static_cast<std::size_t>(h[0])];
        const auto& g = nodes[static_cast<std::size_t>(h[6])];
        return (g[0] - a[0]) * (g[1] - a[1]) * (g[2] - a[2]);
    }

    double element_measure(int e) const {
        return flavor == MeshFlavor::shell2d ? tri_area(e) : hex_volume(e);
    }

    std::array<double, 3> element_centroid(int e) const {
        std::array<double, 3> c{0.0, 0.0, 0.0};
        if (flavor == MeshFlavor::shell2d) {
            const auto& t = tris[static_cast<std::size_t>(e)];
            for (int v : t)
                for (int k = 0; k < 3; ++k) c[static_cast<std::size_t>(k)] += nodes[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] / 3.0;
        } else {
            const auto& h = hexes[static_cast<std::size_t>(e)];
            for (int v : h)
                for (int k = 0; k < 3; ++k) c[static_cast<std::size_t>(k)] += nodes[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] / 8.0;
        }
        return c;
    }

    std::uint64_t fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        h = hash_mix(h, static_cast<std::int64_t>(flavor));
        h = hash_mix(h, width);
        h = hash_mix(h, depth);
        h = hash_mix(h, height);
        for (const auto& n : nodes)
            for (double v : n) h = hash_mix(h, v);
        for (const auto& t : tris)
            for (int v : t) h = hash_mix(h, static_cast<std::int64_t>(v));
        for (const auto& x : hexes)
            for (int v : x) h = hash_mix(h, static_cast<std::int64_t>(v));
        for (double s : sigma) h = hash_mix(h, s);
        for (const auto& e : electrodes) {
            h = hash_mix(h, static_cast<std::int64_t>(e.size()));
            for (int v : e) h = hash_mix(h, static_cast<std::int64_t>(v));
        }
        for (int v : drive_nodes) h = hash_mix(h, static_cast<std::int64_t>(v));
        for (int v : contact_elements) h = hash_mix(h, static_cast<std::int64_t>(v));
        for (int v : in_dot_elements) h = hash_mix(h, static_cast<std::int64_t>(v));
        return h;
    }
};

inline std::vector<std::array<double, 2>> electrode_centers(const ElectrodeLayout& layout) {
    std::vector<std::array<double, 2>> centers;
    double offset = -layout.pitch * (layout.per_side - 1) / 2.0;
    for (int iy = 0; iy < layout.per_side; ++iy)
        for (int ix = 0; ix < layout.per_side; ++ix)
            centers.push_back({offset + ix * layout.pitch, offset + iy * layout.pitch});
    return centers;
}

namespace detail {

inline void attach_electrodes(Mesh& mesh, const ElectrodeLayout& layout) {
    if (layout.per_side < 1) throw_config("electrode layout: per_side must be >= 1");
    if (layout.diameter <= 0.0) throw_config("electrode layout: diameter must be positive");
    auto centers = electrode_centers(layout);
    double r = layout.diameter / 2.0;
    double half_w = mesh.width / 2.0, half_d = mesh.depth / 2.0;
    for (std::size_t e = 0; e < centers.size(); ++e) {
        if (std::abs(centers[e][0]) + r >= half_w || std::abs(centers[e][1]) + r >= half_d)
            throw_config("electrode " + std::to_string(e) + " does not lie strictly inside the bottom face");
    }
    mesh.electrodes.assign(centers.size(), {});
    // Bottom-face nodes (all nodes for a shell) within each disc.
    for (int n = 0; n < mesh.node_count(); ++n) {
        const auto& p = mesh.nodes[static_cast<std::size_t>(n)];
        if (mesh.flavor == MeshFlavor::volume3d && p[2] != 0.0) continue;
        for (std::size_t e = 0; e < centers.size(); ++e) {
            double dx = p[0] - centers[e][0], dy = p[1] - centers[e][1];
            if (dx * dx + dy * dy <= r * r) {
                mesh.electrodes[e].push_back(n);
                break;  // discs are disjoint; a node belongs to at most one
            }
        }
    }
    for (std::size_t e = 0; e < mesh.electrodes.size(); ++e) {
        if (mesh.electrodes[e].empty())
            throw_config("electrode " + std::to_string(e) + " covers zero mesh nodes (diameter " +
                         fmt9(layout.diameter) + " mm on this grid)");
    }
    // Disjointness is structural given non-overlapping discs; verify anyway.
    std::set<int> seen;
    for (const auto& set : mesh.electrodes)
        for (int n : set)
            if (!seen.insert(n).second) throw_config("electrode node sets overlap");
}

}  // namespace detail

// Uniform-conductivity triangulated grid: divisions^2 squares, each split into
// two triangles along the (0,0)-(1,1) diagonal.
inline Mesh build_shell_mesh(double width, double depth, int divisions,
                             const ElectrodeLayout& layout, double sigma) {
    if (divisions < 1) throw_config("shell mesh: divisions must be >= 1");
    if (width <= 0.0 || depth <= 0.0) throw_config("shell mesh: width and depth must be positive");
    if (!(sigma > 0.0)) throw_config("shell mesh: conductivity must be positive");

    Mesh mesh;
    mesh.flavor = MeshFlavor::shell2d;
    mesh.width = width;
    mesh.depth = depth;
    mesh.nx = mesh.ny = divisions;

    double dx = width / divisions, dy = depth / divisions;
    for (int iy = 0; iy <= divisions; ++iy)
        for (int ix = 0; ix <= divisions; ++ix)
            mesh.nodes.push_back({-width / 2.0 + ix * dx, -depth / 2.0 + iy * dy, 0.0});

    auto node_id = [divisions](int ix, int iy) { return iy * (divisions + 1) + ix; };
    for (int iy = 0; iy < divisions; ++iy) {
        for (int ix = 0; ix < divisions; ++ix) {
            int n00 = node_id(ix, iy), n10 = node_id(ix + 1, iy);
            int n01 = node_id(ix, iy + 1), n11 = node_id(ix + 1, iy + 1);
            mesh.tris.push_back({n00, n10, n11});
            mesh.tris.push_back({n00, n11, n01});
        }
    }
    mesh.sigma.assign(mesh.tris.size(), sigma);
    detail::attach_electrodes(mesh, layout);
    return mesh;
}

// Structured hexahedral mesh with per-element conductivity sampled from the
// gradient at the element centroid height.
inline Mesh build_volume_mesh(double width, double depth, double height,
                              std::array<int, 3> divisions, const GradientSpec& grad,
                              const std::optional<ElectrodeLayout>& layout = std::nullopt) {
    auto [nx, ny, nz] = divisions;
    if (nx < 1 || ny < 1 || nz < 1) throw_config("volume mesh: all divisions must be >= 1");
    if (width <= 0.0 || depth <= 0.0 || height <= 0.0)
        throw_config("volume mesh: dimensions must be positive");
    if (!(grad.sigma_low > 0.0) || !(grad.sigma_up > 0.0))
        throw_config("volume mesh: gradient conductivities must be positive");

    Mesh mesh;
    mesh.flavor = MeshFlavor::volume3d;
    mesh.width = width;
    mesh.depth = depth;
    mesh.height = height;
    mesh.nx = nx;
    mesh.ny = ny;
    mesh.nz = nz;

    double dx = width / nx, dy = depth / ny, dz = height / nz;
    for (int iz = 0; iz <= nz; ++iz)
        for (int iy = 0; iy <= ny; ++iy)
            for (int ix = 0; ix <= nx; ++ix)
                mesh.nodes.push_back({-width / 2.0 + ix * dx, -depth / 2.0 + iy * dy, iz * dz});

    auto node_id = [nx, ny](int ix, int iy, int iz) {
        return (iz * (ny + 1) + iy) * (nx + 1) + ix;
    };
    for (int iz = 0; iz < nz; ++iz) {
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                mesh.hexes.push_back({node_id(ix, iy, iz), node_id(ix + 1, iy, iz),
                                      node_id(ix + 1, iy + 1, iz), node_id(ix, iy + 1, iz),
                                      node_id(ix, iy, iz + 1), node_id(ix + 1, iy, iz + 1),
                                      node_id(ix + 1, iy + 1, iz + 1), node_id(ix, iy + 1, iz + 1)});
                double zc = (iz + 0.5) * dz;
                double s = grad.at(zc, 0.0, height);
                if (!(s > 0.0) || !std::isfinite(s))
                    throw_config("volume mesh: non-positive conductivity at element height " + fmt9(zc));
                mesh.sigma.push_back(s);
            }
        }
    }
    if (layout) detail::attach_electrodes(mesh, *layout);
    return mesh;
}

namespace detail {

// Top-layer element ids of a volume mesh, in canonical order.
inline std::vector<int> top_layer_elements(const Mesh& mesh) {
    std::vector<int> out;
    int per_layer = mesh.nx * mesh.ny;
    int first = (mesh.nz - 1) * per_layer;
    for (int e = first; e < first + per_layer; ++e) out.push_back(e);
    return out;
}

}  // namespace detail

// Masks the stacked-layer interface (the middle element layer) with the
// conductive dot pattern: in-dot elements get the dot conductivity, the rest
// the near-zero gap conductivity.
inline Mesh apply_adhesion(const Mesh& input, const AdhesionSpec& ad) {
    if (input.flavor != MeshFlavor::volume3d) throw_config("adhesion: volume mesh required");
    if (ad.dots_per_side < 1) throw_config("adhesion: dots_per_side must be >= 1");
    if (ad.dot_diameter <= 0.0) throw_config("adhesion: dot diameter must be positive");
    if (input.nz < 3) throw_config("adhesion: mesh needs nz >= 3 for a distinct interface layer");
    Mesh mesh = input;
    int layer = mesh.nz / 2;
    int per_layer = mesh.nx * mesh.ny;
    double dot_pitch = mesh.width / ad.dots_per_side;
    double dot_r = ad.dot_diameter / 2.0;
    mesh.interface_elements.clear();
    mesh.in_dot_elements.clear();
    for (int e = layer * per_layer; e < (layer + 1) * per_layer; ++e) {
        mesh.interface_elements.push_back(e);
        auto c = mesh.element_centroid(e);
        double best = 1e300;
        for (int iy = 0; iy < ad.dots_per_side; ++iy) {
            for (int ix = 0; ix < ad.dots_per_side; ++ix) {
                double cx = -mesh.width / 2.0 + (ix + 0.5) * dot_pitch;
                double cy = -mesh.depth / 2.0 + (iy + 0.5) * dot_pitch;
                double dx = c[0] - cx, dy = c[1] - cy;
                best = std::min(best, dx * dx + dy * dy);
            }
        }
        bool in_dot = best <= dot_r * dot_r;
        mesh.sigma[static_cast<std::size_t>(e)] = in_dot ? ad.in_dot_sigma : ad.out_dot_sigma;
        if (in_dot) mesh.in_dot_elements.push_back(e);
    }
    if (mesh.in_dot_elements.empty())
        mesh.warnings.push_back("degenerate adhesion mask: no interface element lies inside any dot");
    return mesh;
}

// Tags the driven contact (and optionally the adhesion dot mask) on a copy of
// the mesh. Volume flavor: the contact disc selects top-layer elements by
// centroid; drive nodes are the top-face nodes of those elements plus any
// top-face node inside the disc, and every top-layer element touching a drive
// node joins the sigma_drv layer so that sigma_drv = 0 severs the contact
// completely. Shell flavor: only the centroid footprint is tagged (sources for
// the sensitivity model); conductivity is left untouched.
inline Mesh apply_regions(const Mesh& input, const ContactSpec& contact,
                          const std::optional<AdhesionSpec>& adhesion = std::nullopt) {
    if (contact.diameter <= 0.0) throw_config("contact: diameter must be positive");
    if (contact.sigma_drv < 0.0) throw_config("contact: sigma_drv must be >= 0");
    Mesh mesh = input;
    double r = contact.diameter / 2.0;
    if (std::abs(contact.x) + r > mesh.width / 2.0 || std::abs(contact.y) + r > mesh.depth / 2.0)
        throw_config("contact disc extends outside the top face");

    auto in_disc = [&](double x, double y) {
        double dx = x - contact.x, dy = y - contact.y;
        return dx * dx + dy * dy <= r * r;
    };

    if (mesh.flavor == MeshFlavor::shell2d) {
        mesh.contact_elements.clear();
        mesh.drive_nodes.clear();
        for (int e = 0; e < mesh.element_count(); ++e) {
            auto c = mesh.element_centroid(e);
            if (in_disc(c[0], c[1])) mesh.contact_elements.push_back(e);
        }
        for (int n = 0; n < mesh.node_count(); ++n)
            if (in_disc(mesh.nodes[static_cast<std::size_t>(n)][0], mesh.nodes[static_cast<std::size_t>(n)][1]))
                mesh.drive_nodes.push_back(n);
        if (mesh.contact_elements.empty())
            throw_config("contact disc covers zero shell elements at (" + fmt9(contact.x) + ", " +
                         fmt9(contact.y) + ")");
        return mesh;
    }

    // Volume: adhesion first (interface layer), then the contact layer.
    if (adhesion) mesh = apply_adhesion(mesh, *adhesion);

    int per_layer = mesh.nx * mesh.ny;
    int top_first = (mesh.nz - 1) * per_layer;
    std::set<int> drive;
    std::vector<int> seed_elements;
    for (int e = top_first; e < top_first + per_layer; ++e) {
        auto c = mesh.element_centroid(e);
        if (in_disc(c[0], c[1])) seed_elements.push_back(e);
    }
    for (int n = 0; n < mesh.node_count(); ++n) {
        const auto& p = mesh.nodes[static_cast<std::size_t>(n)];
        if (p[2] == mesh.height && in_disc(p[0], p[1])) drive.insert(n);
    }
    for (int e : seed_elements)
        for (int k = 4; k < 8; ++k)  // top-face corner nodes of the hex
            drive.insert(mesh.hexes[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)]);
    if (drive.empty())
        throw_config("contact disc covers zero nodes at (" + fmt9(contact.x) + ", " + fmt9(contact.y) + ")");

    std::set<int> contact_set(seed_elements.begin(), seed_elements.end());
    for (int e = top_first; e < top_first + per_layer; ++e) {
        const auto& h = mesh.hexes[static_cast<std::size_t>(e)];
        for (int k = 4; k < 8; ++k) {
            if (drive.count(h[static_cast<std::size_t>(k)])) {
                contact_set.insert(e);
                break;
            }
        }
    }
    mesh.drive_nodes.assign(drive.begin(), drive.end());
    mesh.contact_elements.assign(contact_set.begin(), contact_set.end());
    for (int e : mesh.contact_elements) mesh.sigma[static_cast<std::size_t>(e)] = contact.sigma_drv;
    return mesh;
}

// Debug CSV dump: NODES / ELEMENTS / ELECTRODES sections.
inline void dump_mesh_csv(const Mesh& mesh, std::ostream& os) {
    os << "NODES\n";
    for (int n = 0; n < mesh.node_count(); ++n) {
        const auto& p = mesh.nodes[static_cast<std::size_t>(n)];
        os << n << ',' << fmt9(p[0]) << ',' << fmt9(p[1]) << ',' << fmt9(p[2]) << '\n';
    }
    os << "ELEMENTS\n";
    for (int e = 0; e < mesh.element_count(); ++e) {
        os << e;
        if (mesh.flavor == MeshFlavor::shell2d)
            for (int v : mesh.tris[static_cast<std::size_t>(e)]) os << ',' << v;
        else
            for (int v : mesh.hexes[static_cast<std::size_t>(e)]) os << ',' << v;
        os << ',' << fmt9(mesh.sigma[static_cast<std::size_t>(e)]) << '\n';
    }
    os << "ELECTRODES\n";
    for (std::size_t e = 0; e < mesh.electrodes.size(); ++e) {
        os << e;
        for (int v : mesh.electrodes[e]) os << ',' << v;
        os << '\n';
    }
}

inline void dump_mesh_csv(const Mesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw_config("cannot open " + path + " for writing");
    dump_mesh_csv(mesh, os);
}

}  // namespace rct

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "rct/rct.hpp"
#include "test_util.hpp"

using namespace rct;

TEST_CASE("shell mesh counts match the target model size") {
    Mesh mesh = build_shell_mesh(60, 60, 45, testutil::default_layout(), 1.0);
    CHECK(mesh.element_count() == 4050);
    CHECK(mesh.node_count() == 2116);

    Mesh tiny = build_shell_mesh(60, 60, 1, testutil::default_layout(), 1.0);
    CHECK(tiny.element_count() == 2);
    CHECK(tiny.node_count() == 4);
}

TEST_CASE("shell electrodes: 16 disjoint non-empty node sets") {
    Mesh mesh = build_shell_mesh(60, 60, 45, testutil::default_layout(), 1.0);
    REQUIRE(mesh.electrodes.size() == 16);
    std::set<int> all;
    for (const auto& pad : mesh.electrodes) {
        CHECK(!pad.empty());
        for (int n : pad) CHECK(all.insert(n).second);
    }
}

TEST_CASE("volume mesh counts") {
    Mesh mesh = testutil::paper_volume();
    CHECK(mesh.element_count() == 4500);
    CHECK(mesh.node_count() == 5766);
}

TEST_CASE("degenerate gradient gives uniform conductivity") {
    Mesh mesh = testutil::paper_volume(1.0, 1.0);
    for (double s : mesh.sigma) CHECK(s == 1.0);
}

TEST_CASE("gradient conductivity at mid-height is the geometric mean") {
    Mesh mesh = testutil::paper_volume(0.001, 100.0);
    // Layer 2 of 5 has its centroid exactly at mid-height.
    int per_layer = mesh.nx * mesh.ny;
    double expected = std::sqrt(0.001 * 100.0);
    CHECK(mesh.sigma[static_cast<std::size_t>(2 * per_layer)] == Catch::Approx(expected).epsilon(1e-12));
    CHECK(mesh.sigma[static_cast<std::size_t>(2 * per_layer)] == Catch::Approx(0.31623).margin(1e-5));
}

TEST_CASE("gradient conductivity is strictly increasing with height when sigma_up > sigma_low") {
    Mesh mesh = testutil::paper_volume(0.01, 10.0);
    int per_layer = mesh.nx * mesh.ny;
    for (int iz = 0; iz + 1 < mesh.nz; ++iz)
        CHECK(mesh.sigma[static_cast<std::size_t>(iz * per_layer)] <
              mesh.sigma[static_cast<std::size_t>((iz + 1) * per_layer)]);

    Mesh flat = testutil::paper_volume(0.5, 0.5);
    for (double s : flat.sigma) CHECK(s == flat.sigma[0]);
}

TEST_CASE("element measures sum to the domain size") {
    Mesh vol = testutil::small_volume();
    double total = 0.0;
    for (int e = 0; e < vol.element_count(); ++e) total += vol.hex_volume(e);
    CHECK(total == Catch::Approx(60.0 * 60.0 * 10.0).epsilon(1e-9));

    Mesh shell = testutil::small_shell();
    double area = 0.0;
    for (int e = 0; e < shell.element_count(); ++e) area += shell.tri_area(e);
    CHECK(area == Catch::Approx(3600.0).epsilon(1e-9));
}

TEST_CASE("electrode node sets follow the square's symmetry group") {
    Mesh mesh = testutil::paper_volume();
    auto layout = testutil::default_layout();
    auto node_xy = [&](int n) {
        return std::make_pair(mesh.nodes[static_cast<std::size_t>(n)][0], mesh.nodes[static_cast<std::size_t>(n)][1]);
    };
    auto key = [](std::pair<double, double> p) {
        return std::make_pair(std::lround(p.first * 1e6), std::lround(p.second * 1e6));
    };
    for (const auto& op : testutil::dihedral_ops()) {
        auto perm = testutil::electrode_permutation(layout, op);
        for (std::size_t e = 0; e < mesh.electrodes.size(); ++e) {
            REQUIRE(perm[e] >= 0);
            std::set<std::pair<long, long>> transformed, target;
            for (int n : mesh.electrodes[e]) {
                auto [x, y] = node_xy(n);
                transformed.insert(key(op(x, y)));
            }
            for (int n : mesh.electrodes[static_cast<std::size_t>(perm[e])]) target.insert(key(node_xy(n)));
            CHECK(transformed == target);
        }
    }
}

TEST_CASE("centered contact tags a dihedral-symmetric drive node set") {
    Mesh mesh = apply_regions(testutil::paper_volume(), ContactSpec{0, 0, 4.0, 1.0});
    REQUIRE(!mesh.drive_nodes.empty());
    std::set<std::pair<long, long>> coords;
    for (int n : mesh.drive_nodes)
        coords.insert({std::lround(mesh.nodes[static_cast<std::size_t>(n)][0] * 1e6),
                       std::lround(mesh.nodes[static_cast<std::size_t>(n)][1] * 1e6)});
    for (const auto& op : testutil::dihedral_ops()) {
        for (const auto& [x, y] : coords) {
            auto [tx, ty] = op(static_cast<double>(x) / 1e6, static_cast<double>(y) / 1e6);
            CHECK(coords.count({std::lround(tx * 1e6), std::lround(ty * 1e6)}) == 1);
        }
    }
}

TEST_CASE("contact layer carries sigma_drv and sits in the top element layer") {
    Mesh base = testutil::paper_volume(0.01, 10.0);
    Mesh mesh = apply_regions(base, ContactSpec{0, 0, 4.0, 0.37});
    REQUIRE(!mesh.contact_elements.empty());
    int per_layer = mesh.nx * mesh.ny;
    for (int e : mesh.contact_elements) {
        CHECK(e >= (mesh.nz - 1) * per_layer);
        CHECK(mesh.sigma[static_cast<std::size_t>(e)] == 0.37);
    }
    // Every element touching a drive node is in the contact layer, so
    // sigma_drv = 0 severs the contact electrically.
    std::set<int> drive(mesh.drive_nodes.begin(), mesh.drive_nodes.end());
    std::set<int> contact(mesh.contact_elements.begin(), mesh.contact_elements.end());
    for (int e = (mesh.nz - 1) * per_layer; e < mesh.nz * per_layer; ++e) {
        bool touches = false;
        for (int k = 4; k < 8; ++k)
            if (drive.count(mesh.hexes[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)])) touches = true;
        if (touches) CHECK(contact.count(e) == 1);
    }
}

TEST_CASE("full-coverage adhesion marks every interface element in-dot") {
    Mesh base = testutil::paper_volume();
    for (int n : {5, 7}) {
        double d = full_coverage_diameter(base.width, n);
        Mesh masked = apply_adhesion(base, AdhesionSpec{n, d, 1.0, 1e-9});
        CHECK(masked.in_dot_elements.size() == masked.interface_elements.size());
        CHECK(masked.interface_elements.size() == static_cast<std::size_t>(base.nx * base.ny));
    }
    // Full coverage is the same mesh regardless of the dot count.
    Mesh m5 = apply_adhesion(base, AdhesionSpec{5, full_coverage_diameter(base.width, 5), 1.0, 1e-9});
    Mesh m7 = apply_adhesion(base, AdhesionSpec{7, full_coverage_diameter(base.width, 7), 1.0, 1e-9});
    CHECK(m5.sigma == m7.sigma);
}

TEST_CASE("vanishing dot diameter yields an empty mask and a warning") {
    Mesh base = testutil::paper_volume();
    Mesh masked = apply_adhesion(base, AdhesionSpec{5, 1e-6, 1.0, 1e-9});
    CHECK(masked.in_dot_elements.empty());
    REQUIRE(!masked.warnings.empty());
    CHECK(masked.warnings.front().find("degenerate") != std::string::npos);
}

TEST_CASE("electrode disc covering zero nodes is a configuration error naming the electrode") {
    // 6 mm node spacing leaves the default 4 mm discs empty.
    try {
        build_shell_mesh(60, 60, 10, testutil::default_layout(), 1.0);
        FAIL("expected configuration error");
    } catch (const Error& err) {
        CHECK(err.kind() == Error::Kind::config);
        CHECK(std::string(err.what()).find("electrode") != std::string::npos);
    }
}

TEST_CASE("contact disc covering nothing is a configuration error") {
    Mesh base = testutil::paper_volume();
    CHECK_THROWS_AS(apply_regions(base, ContactSpec{0.3, 0.2, 0.2, 1.0}), Error);
    CHECK_THROWS_AS(apply_regions(base, ContactSpec{29.0, 0.0, 4.0, 1.0}), Error);  // extends outside
}

TEST_CASE("mesh dump contains the three sections") {
    Mesh mesh = build_shell_mesh(60, 60, 2, ElectrodeLayout{1, 4.0, 0.0}, 1.0);
    std::ostringstream os;
    dump_mesh_csv(mesh, os);
    std::string text = os.str();
    CHECK(text.find("NODES\n") != std::string::npos);
    CHECK(text.find("ELEMENTS\n") != std::string::npos);
    CHECK(text.find("ELECTRODES\n") != std::string::npos);
}

TEST_CASE("mesh fingerprints are stable and sensitive") {
    Mesh a = testutil::small_volume();
    Mesh b = testutil::small_volume();
    CHECK(a.fingerprint() == b.fingerprint());
    Mesh c = testutil::small_volume(1.0, 2.0);
    CHECK(a.fingerprint() != c.fingerprint());
}

#include <catch_amalgamated.hpp>

#include "rct/rct.hpp"

using namespace rct;

TEST_CASE("default configuration is the paper-scale model") {
    RunConfig cfg;
    cfg.validate();
    CHECK(cfg.width == 60.0);
    CHECK(cfg.height == 10.0);
    CHECK(cfg.layout.per_side == 4);
    CHECK(cfg.layout.diameter == 4.0);
    CHECK(cfg.shell_divisions == 45);
    CHECK(cfg.volume_divisions == std::array<int, 3>{30, 30, 5});
    CHECK(cfg.v_cc == 2.0);
    CHECK(cfg.recon.lambda_sq == 5000.0);
    CHECK(cfg.sigma_points == 11);
    CHECK(cfg.sigma_min == 0.001);
    CHECK(cfg.sigma_max == 100.0);
    CHECK(cfg.contact_points == 9);
    CHECK(cfg.pa_positions.size() == 9);
    CHECK(cfg.thicknesses == std::vector<double>{1, 2, 4, 8, 16});
}

TEST_CASE("grid scaling: criterion-size resolutions at 0.5") {
    RunConfig cfg;
    cfg.grid_scale = 0.5;
    CHECK(cfg.scaled_volume_divisions() == std::array<int, 3>{15, 15, 3});
    CHECK(cfg.scaled_shell_divisions() == 23);
    CHECK(cfg.scaled_sigma_points() == 5);
    CHECK(cfg.scaled_contact_points() == 4);

    cfg.grid_scale = 1.0;
    CHECK(cfg.scaled_volume_divisions() == std::array<int, 3>{30, 30, 5});
    CHECK(cfg.scaled_shell_divisions() == 45);
    CHECK(cfg.scaled_sigma_points() == 11);
    CHECK(cfg.scaled_contact_points() == 9);
}

TEST_CASE("JSON parsing honors values and rejects unknown keys") {
    json j = json::parse(R"({
      "schema_version": 1,
      "sensor": {"width_mm": 50, "depth_mm": 50, "height_mm": 8},
      "electrodes": {"per_side": 4, "diameter_mm": 3},
      "gradient": {"sigma_low": 0.01, "sigma_up": 10},
      "mesh": {"shell_divisions": 20, "volume_divisions": [10, 10, 4]},
      "drive": {"v_cc": 1.5, "contact_diameter_mm": 5},
      "reconstruction": {"lambda_sq": 123.0, "raster": 32},
      "sweep": {"sigma_points": 5, "contact_points": 6, "pa_positions": [[0, 0], [10, -10]]},
      "contacts": [{"x_mm": 1, "y_mm": -2, "sigma_drv": 0.5}],
      "materials": [{"label": "A", "sigma": 0.2273}, {"label": "BC", "sigma_up": 0.5208, "sigma_low": 0.001667}],
      "out_dir": "artifacts",
      "seed": 17,
      "threads": 2
    })");
    RunConfig cfg = parse_config(j);
    CHECK(cfg.width == 50.0);
    CHECK(cfg.layout.diameter == 3.0);
    CHECK(cfg.layout.pitch == 12.5);  // defaults to width / per_side
    CHECK(cfg.gradient.sigma_up == 10.0);
    CHECK(cfg.volume_divisions == std::array<int, 3>{10, 10, 4});
    CHECK(cfg.v_cc == 1.5);
    CHECK(cfg.recon.lambda_sq == 123.0);
    CHECK(cfg.pa_positions.size() == 2);
    REQUIRE(cfg.contacts.size() == 1);
    CHECK(cfg.contacts[0].sigma_drv == 0.5);
    CHECK(cfg.contacts[0].diameter == 5.0);  // inherits the drive default
    REQUIRE(cfg.materials.size() == 2);
    CHECK(cfg.materials[0].sigma_low == cfg.materials[0].sigma_up);
    CHECK(cfg.materials[1].sigma_low == 0.001667);
    CHECK(cfg.out_dir == "artifacts");
    CHECK(cfg.seed == 17);

    CHECK_THROWS_AS(parse_config(json::parse(R"({"lambda": 1})")), Error);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"sensor": {"width": 60}})")), Error);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"sweep": {"sigma_pts": 3}})")), Error);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"mesh": {"volume_divisions": [2, 2]}})")), Error);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"schema_version": 2})")), Error);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"drive": {"v_cc": -1}})")), Error);
}

TEST_CASE("config round-trips through its JSON echo") {
    RunConfig cfg;
    cfg.gradient.sigma_up = 3.5;
    cfg.contacts.push_back(ContactSpec{1, 2, 4, 0.7});
    cfg.materials.push_back(MaterialPoint{"A", 0.2273, 0.2273});
    cfg.seed = 99;
    RunConfig back = parse_config(config_to_json(cfg));
    CHECK(config_to_json(back).dump() == config_to_json(cfg).dump());
}

TEST_CASE("compatibility fingerprints track the shared surfaces only") {
    RunConfig a, b;
    CHECK(a.compat() == b.compat());
    b.v_cc = 1.0;
    CHECK(a.compat() != b.compat());
    RunConfig c;
    c.recon.lambda_sq = 42.0;  // not part of the shared surface
    CHECK(a.compat() == c.compat());
}

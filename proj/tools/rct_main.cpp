// Command-line front end: forward simulation, Jacobian builds, reconstruction
// (batch and stream), the three design studies, and the metric report.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "rct/rct.hpp"

namespace fs = std::filesystem;
using rct::fmt9;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_override;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::optional<double> grid_scale;
};

rct::RunConfig resolve_config(const GlobalOpts& g) {
    rct::RunConfig cfg = g.config_path.empty() ? rct::RunConfig{} : rct::load_config(g.config_path);
    if (!g.out_override.empty()) cfg.out_dir = g.out_override;
    if (g.threads) cfg.threads = *g.threads;
    if (g.seed) cfg.seed = *g.seed;
    if (g.grid_scale) cfg.grid_scale = *g.grid_scale;
    cfg.validate();
    return cfg;
}

fs::path ensure_out_dir(const rct::RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) rct::throw_config("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) rct::throw_config("cannot open " + p.string() + " for writing");
    return os;
}

void write_manifest(const fs::path& dir, const rct::RunConfig& cfg, const std::string& command,
                    const std::map<std::string, double>& timings,
                    const std::vector<std::string>& failures,
                    const std::vector<std::string>& outputs) {
    rct::json manifest;
    manifest["command"] = command;
    manifest["config"] = rct::config_to_json(cfg);
    rct::json t;
    for (const auto& [k, v] : timings) t[k] = v;
    manifest["timings_s"] = t;
    manifest["failures"] = failures;
    manifest["outputs"] = outputs;
    auto os = open_out(dir / "manifest.json");
    os << manifest.dump(2) << '\n';
}

int cmd_simulate(const GlobalOpts& g) {
    rct::RunConfig cfg = resolve_config(g);
    fs::path dir = ensure_out_dir(cfg);
    fs::path out = dir / "frames.csv";
    if (cfg.contacts.empty()) {
        open_out(out);  // truncate to an empty file
        std::cerr << "warning: empty contact list, wrote empty " << out.string() << '\n';
        return 0;
    }
    rct::Mesh base = cfg.make_volume();
    std::vector<rct::PotentialFrame> frames;
    for (const auto& contact : cfg.contacts) {
        rct::Mesh mesh = rct::apply_regions(base, contact);
        rct::PotentialFrame frame = rct::acquire_frame(mesh, cfg.v_cc, cfg.threads);
        frame.compat_fp = cfg.compat();
        frames.push_back(std::move(frame));
    }
    auto os = open_out(out);
    rct::write_frames_csv(frames, os, cfg.compat());
    return 0;
}

int cmd_jacobian(const GlobalOpts& g, bool also_csv) {
    rct::RunConfig cfg = resolve_config(g);
    fs::path dir = ensure_out_dir(cfg);
    rct::Mesh shell = cfg.make_shell();
    rct::JacobianMatrix jac = rct::build_jacobian(shell, cfg.v_cc, cfg.threads, cfg.compat());
    rct::save_jacobian(jac, (dir / "jacobian.bin").string());
    if (also_csv) {
        auto os = open_out(dir / "jacobian.csv");
        rct::export_jacobian_csv(jac, os);
    }
    return 0;
}

int cmd_reconstruct(const GlobalOpts& g, const std::string& jac_path, const std::string& frames_path) {
    rct::RunConfig cfg = resolve_config(g);
    fs::path dir = ensure_out_dir(cfg);
    rct::JacobianMatrix jac = rct::load_jacobian(jac_path);
    rct::Mesh shell = cfg.make_shell();
    if (jac.shell_fp != shell.fingerprint())
        rct::throw_config("Jacobian was built for a different shell mesh: jacobian " +
                          rct::hex16(jac.shell_fp) + " vs config " + rct::hex16(shell.fingerprint()));
    auto frames = rct::read_frames_csv(frames_path, jac.n_e);
    if (frames.has_fp && jac.compat_fp != 0 && frames.compat_fp != jac.compat_fp)
        rct::throw_config("frames/Jacobian fingerprint mismatch: frames " +
                          rct::hex16(frames.compat_fp) + " vs jacobian " + rct::hex16(jac.compat_fp));
    rct::TikhonovSolver solver(jac, cfg.recon.lambda_sq);
    for (std::size_t i = 0; i < frames.frames.size(); ++i) {
        rct::ReconstructedImage img;
        img.element_values = solver.solve_values(frames.frames[i]);
        img.raster = rct::rasterize_shell(shell, img.element_values, cfg.recon.raster);
        img.width = shell.width;
        img.depth = shell.depth;
        char name[32];
        std::snprintf(name, sizeof(name), "recon_%03zu", i);
        {
            auto os = open_out(dir / (std::string(name) + ".csv"));
            rct::write_raster_csv(img.raster, os);
        }
        rct::write_pgm(img.raster, (dir / (std::string(name) + ".pgm")).string());
    }
    return 0;
}

int cmd_reconstruct_stream(const GlobalOpts& g, const std::string& jac_path, double lambda_sq) {
    rct::RunConfig cfg = resolve_config(g);
    rct::JacobianMatrix jac = rct::load_jacobian(jac_path);
    rct::Mesh shell = cfg.make_shell();
    if (jac.shell_fp != shell.fingerprint())
        rct::throw_config("Jacobian was built for a different shell mesh: jacobian " +
                          rct::hex16(jac.shell_fp) + " vs config " + rct::hex16(shell.fingerprint()));
    rct::TikhonovSolver solver(jac, lambda_sq);
    std::string line;
    long line_no = 0, skipped = 0;
    while (std::getline(std::cin, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto parsed = rct::parse_frame_line(line, jac.n_e);
        if (!parsed.ok) {
            ++skipped;
            std::cerr << "line " << line_no << " skipped: " << parsed.error << '\n';
            continue;
        }
        Eigen::VectorXd values = solver.solve_values(parsed.values);
        Eigen::MatrixXd raster = rct::rasterize_shell(shell, values, cfg.recon.raster);
        rct::write_raster_line(raster, std::cout);
    }
    if (skipped) std::cerr << skipped << " malformed line(s) skipped\n";
    return 0;
}

int cmd_sweep(const GlobalOpts& g, const std::string& study) {
    rct::RunConfig cfg = resolve_config(g);
    fs::path dir = ensure_out_dir(cfg);
    rct::StudySetup setup = cfg.study_setup();
    std::map<std::string, double> timings;
    std::vector<std::string> failures, outputs;
    auto t0 = std::chrono::steady_clock::now();

    if (study == "perfmap") {
        rct::SweepGrid grid = cfg.sweep_grid();
        rct::SweepResult sweep = rct::run_performance_map(grid, setup);
        failures = sweep.failures;
        {
            auto os = open_out(dir / "perfmap.csv");
            rct::write_perfmap_csv(sweep, os);
            outputs.push_back("perfmap.csv");
        }
        const std::pair<const char*, double rct::PerformanceRecord::*> maps[] = {
            {"map_sens.pgm", &rct::PerformanceRecord::sens_n},
            {"map_fmax.pgm", &rct::PerformanceRecord::fmax_n},
            {"map_sr.pgm", &rct::PerformanceRecord::sr_n},
            {"map_pa.pgm", &rct::PerformanceRecord::pa_n},
        };
        for (const auto& [name, field] : maps) {
            rct::write_pgm(rct::metric_map(sweep, field), (dir / name).string());
            outputs.push_back(name);
        }
        std::vector<std::pair<std::string, rct::PerformanceRecord>> labeled;
        for (const auto& m : cfg.materials)
            labeled.emplace_back(m.label, rct::interpolate_record(sweep, grid, m.sigma_low, m.sigma_up));
        rct::PositioningResult pos = rct::material_positioning(labeled, sweep);
        for (const auto& w : pos.warnings) std::cerr << "warning: " << w << '\n';
        {
            auto os = open_out(dir / "positioning.csv");
            rct::write_positioning_csv(pos, os);
            outputs.push_back("positioning.csv");
        }
        timings["perfmap"] = sweep.elapsed_s;
    } else if (study == "thickness") {
        auto rows = rct::run_thickness_study(cfg.thicknesses, setup);
        auto os = open_out(dir / "thickness.csv");
        rct::write_thickness_csv(rows, os);
        outputs.push_back("thickness.csv");
    } else if (study == "adhesion") {
        rct::AdhesionResult res = rct::run_adhesion_study(cfg.adhesion, setup, cfg.pa_positions);
        for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
        {
            auto os = open_out(dir / "adhesion_position.csv");
            rct::write_adhesion_position_csv(res.position_rows, os);
            outputs.push_back("adhesion_position.csv");
        }
        {
            auto os = open_out(dir / "adhesion_current.csv");
            rct::write_adhesion_current_csv(res.current_rows, os);
            outputs.push_back("adhesion_current.csv");
        }
    } else {
        rct::throw_config("unknown sweep study " + study);
    }
    timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(dir, cfg, "sweep " + study, timings, failures, outputs);
    return 0;
}

int cmd_metrics(const GlobalOpts& g, const std::string& data_path, std::optional<double> fh_override,
                const std::string& label) {
    rct::RunConfig cfg = resolve_config(g);
    fs::path dir = ensure_out_dir(cfg);
    std::ifstream is(data_path);
    if (!is) rct::throw_config("cannot open data file " + data_path);
    std::vector<std::pair<double, double>> samples;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) continue;
        try {
            samples.emplace_back(std::stod(a), std::stod(b));
        } catch (const std::exception&) {
            continue;  // header or malformed row
        }
    }
    rct::FitParams fit = rct::fit_output_model(samples, cfg.seed);
    double f_max = 0.0;
    for (const auto& [f, phi] : samples) f_max = std::max(f_max, f);
    double f_h = fh_override.value_or(f_max / 2.0);  // half the maximum applied force
    double sens = fit.converged ? rct::sensitivity_metric(fit, f_h) : std::nan("");
    double fmax = fit.converged ? rct::fmax_metric(fit) : std::nan("");

    auto os = open_out(dir / "metrics.csv");
    os << "label,p1,p2,p3,converged,f_h,sens,fmax,sr,pa\n";
    os << label << ',' << fmt9(fit.p1) << ',' << fmt9(fit.p2) << ',' << fmt9(fit.p3) << ','
       << (fit.converged ? 1 : 0) << ',' << fmt9(f_h) << ',' << fmt9(sens) << ',' << fmt9(fmax)
       << ",,\n";
    std::cout << "SENS " << fmt9(sens) << " at F_h " << fmt9(f_h) << ", FMAX " << fmt9(fmax)
              << ", converged " << (fit.converged ? 1 : 0) << '\n';
    return 0;
}

int cmd_mesh_dump(const GlobalOpts& g) {
    rct::RunConfig cfg = resolve_config(g);
    fs::path dir = ensure_out_dir(cfg);
    rct::dump_mesh_csv(cfg.make_shell(), (dir / "shell_mesh.csv").string());
    rct::dump_mesh_csv(cfg.make_volume(), (dir / "volume_mesh.csv").string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rct: resistive-coupling tomographic tactile sensor simulation toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", g.out_override, "output directory (overrides config)");
    app.add_option("--threads", g.threads, "worker threads");
    app.add_option("--seed", g.seed, "seed for multi-start fitting");
    app.add_option("--grid-scale", g.grid_scale, "uniform mesh/axis resolution scale factor");

    auto* sim = app.add_subcommand("simulate", "acquire frames for the configured contacts");

    bool jac_csv = false;
    auto* jac = app.add_subcommand("jacobian", "build and save the thin-shell Jacobian");
    jac->add_flag("--csv", jac_csv, "also export the Jacobian as CSV");

    std::string jac_path, frames_path;
    auto* rec = app.add_subcommand("reconstruct", "reconstruct frames from a file");
    rec->add_option("--jacobian", jac_path, "Jacobian binary dump")->required()->check(CLI::ExistingFile);
    rec->add_option("--frames", frames_path, "frames CSV")->required()->check(CLI::ExistingFile);

    std::string stream_jac;
    double stream_lambda = 5000.0;
    auto* stream = app.add_subcommand("reconstruct-stream", "stdin frames -> stdout rasters");
    stream->add_option("--jacobian", stream_jac, "Jacobian binary dump")->required()->check(CLI::ExistingFile);
    stream->add_option("--lambda-sq", stream_lambda, "Tikhonov weight");

    std::string study;
    auto* sweep = app.add_subcommand("sweep", "run a design study");
    sweep->add_option("study", study, "perfmap | thickness | adhesion")
        ->required()
        ->check(CLI::IsMember({"perfmap", "thickness", "adhesion"}));

    std::string data_path, metrics_label = "data";
    std::optional<double> fh_override;
    auto* met = app.add_subcommand("metrics", "fit the output model and report SENS/FMAX");
    met->add_option("--data", data_path, "CSV of force,output rows")->required()->check(CLI::ExistingFile);
    met->add_option("--fh", fh_override, "evaluation force (default: max force / 2)");
    met->add_option("--label", metrics_label, "report row label");

    auto* dump = app.add_subcommand("mesh-dump", "dump the configured meshes as CSV (debug)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(g);
        if (jac->parsed()) return cmd_jacobian(g, jac_csv);
        if (rec->parsed()) return cmd_reconstruct(g, jac_path, frames_path);
        if (stream->parsed()) return cmd_reconstruct_stream(g, stream_jac, stream_lambda);
        if (sweep->parsed()) return cmd_sweep(g, study);
        if (met->parsed()) return cmd_metrics(g, data_path, fh_override, metrics_label);
        if (dump->parsed()) return cmd_mesh_dump(g);
    } catch (const rct::Error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return err.kind() == rct::Error::Kind::numerical ? 2 : 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    }
    return 1;
}

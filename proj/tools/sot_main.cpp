// Command-line front end: configuration-driven transport solves, reflector
// construction, map recovery, verification suites and mesh export.
//
// Exit codes: 0 ok, 1 bad config, 2 infeasible masses, 3 no finite-cost
// plan, 4 non-convergence, 5 verification failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "sot/errors.hpp"
#include "sot/io.hpp"
#include "sot/oracle.hpp"
#include "sot/potential.hpp"
#include "sot/recover.hpp"
#include "sot/reflector.hpp"
#include "sot/solver.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Config {
    json raw;
    std::string hash;
    sot::CostKernel kernel = sot::log_kernel();
    std::size_t dimension = 2;
    std::uint64_t seed = 0;
    fs::path out_dir = "out";
    double tol_dual = 1e-9;
    double tol_reflector = 1e-3;
    double tol_monotonicity = 1e-9;
    double tie_tol = 1e-9;
    int max_iterations = 2000;
};

json tolerances_json(const Config& cfg) {
    return json{{"dual", cfg.tol_dual},
                {"reflector", cfg.tol_reflector},
                {"monotonicity", cfg.tol_monotonicity},
                {"tie", cfg.tie_tol}};
}

Config load_config(const std::string& path, const std::string& kernel_override,
                   std::optional<std::uint64_t> seed_override,
                   const std::string& out_dir_override) {
    Config cfg;
    cfg.raw = json::object();
    if (!path.empty()) cfg.raw = json::parse(sot::read_text_file(path));
    if (!kernel_override.empty()) cfg.raw["kernel"] = kernel_override;
    if (seed_override) cfg.raw["seed"] = *seed_override;
    if (!out_dir_override.empty()) cfg.raw["output_dir"] = out_dir_override;

    cfg.kernel = sot::parse_kernel(cfg.raw.value("kernel", "log"));
    cfg.dimension = cfg.raw.value("dimension", 2);
    if (cfg.dimension != 1 && cfg.dimension != 2)
        throw std::invalid_argument("config: dimension must be 1 or 2");
    cfg.seed = cfg.raw.value("seed", 0);
    cfg.out_dir = cfg.raw.value("output_dir", std::string("out"));
    cfg.max_iterations = cfg.raw.value("max_iterations", 2000);
    if (cfg.raw.contains("tolerances")) {
        const auto& t = cfg.raw.at("tolerances");
        cfg.tol_dual = t.value("dual", cfg.tol_dual);
        cfg.tol_reflector = t.value("reflector", cfg.tol_reflector);
        cfg.tol_monotonicity = t.value("monotonicity", cfg.tol_monotonicity);
        cfg.tie_tol = t.value("tie", cfg.tie_tol);
    }
    for (double t : {cfg.tol_dual, cfg.tol_reflector, cfg.tol_monotonicity, cfg.tie_tol})
        if (!(t > 0.0)) throw std::invalid_argument("config: tolerances must be positive");
    cfg.hash = sot::config_hash(cfg.raw);
    return cfg;
}

sot::QuadratureGrid grid_from_spec(const json& spec, const Config& cfg) {
    auto kind = sot::parse_grid_kind(spec.value("grid", "fibonacci"));
    std::size_t n = spec.value("n", 10000);
    return sot::make_grid(kind, n, cfg.seed, cfg.dimension);
}

std::vector<double> intensity_from_spec(const json& spec, const sot::QuadratureGrid& grid) {
    std::string name = spec.value("intensity", "uniform");
    if (name == "uniform") return std::vector<double>(grid.size(), 1.0);
    if (name == "cosine2") {
        // I(x) proportional to (1 + z)^2; a soft forward-biased beam.
        std::vector<double> out(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double z = grid.nodes[i].z();
            out[i] = (1.0 + z) * (1.0 + z);
        }
        return out;
    }
    throw std::invalid_argument("config: unknown intensity '" + name + "'");
}

// A measure spec is one of: a measure file, inline points/weights, random
// atoms, or a quadrature grid discretized to atoms.
sot::DiscreteMeasure measure_from_spec(const json& spec, const Config& cfg) {
    std::string kind = spec.value("kind", "file");
    if (kind == "file") {
        return sot::measure_from_json(json::parse(sot::read_text_file(spec.at("path"))));
    }
    if (kind == "inline") {
        std::vector<sot::UnitVector> pts;
        for (const auto& row : spec.at("points")) pts.push_back(sot::UnitVector(row.get<sot::Vec>()));
        return sot::DiscreteMeasure(pts, spec.at("weights").get<std::vector<double>>());
    }
    if (kind == "random_atoms") {
        std::size_t n = spec.value("n", 32);
        sot::Rng rng(cfg.seed + spec.value("seed_offset", 0));
        std::vector<sot::UnitVector> pts;
        for (std::size_t i = 0; i < n; ++i) pts.push_back(rng.sphere_point(cfg.dimension));
        return sot::DiscreteMeasure(pts, std::vector<double>(n, 1.0 / double(n)));
    }
    if (kind == "grid") {
        auto grid = grid_from_spec(spec, cfg);
        auto intensity = intensity_from_spec(spec, grid);
        std::vector<double> w(grid.size());
        double total = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            w[i] = intensity[i] * grid.weights[i];
            total += w[i];
        }
        for (double& x : w) x /= total;
        return sot::DiscreteMeasure(grid.nodes, w);
    }
    throw std::invalid_argument("config: unknown measure kind '" + kind + "'");
}

std::string csv_header(const Config& cfg) {
    std::ostringstream out;
    out << "# config_hash=" << cfg.hash << " tolerances=" << tolerances_json(cfg).dump() << "\n";
    return out.str();
}

void stamp(json& artifact, const Config& cfg) {
    artifact["config_hash"] = cfg.hash;
    artifact["tolerances"] = tolerances_json(cfg);
}

int cmd_solve(const Config& cfg) {
    // Weights are taken as configured; an imbalance is a contract violation
    // surfaced as exit code 2, not silently renormalized.
    auto mu = measure_from_spec(cfg.raw.at("source"), cfg);
    auto nu = measure_from_spec(cfg.raw.at("target"), cfg);
    auto res = sot::solve_kantorovich(cfg.kernel, mu, nu);

    fs::create_directories(cfg.out_dir);
    json plan = sot::plan_to_json(res.plan, res.duals, res.total_cost);
    stamp(plan, cfg);
    sot::write_text_file((cfg.out_dir / "plan.json").string(), plan.dump(2) + "\n");

    std::ostringstream duals;
    duals << csv_header(cfg) << "side,index,value\n";
    for (std::size_t i = 0; i < res.duals.u.size(); ++i)
        duals << "u," << i << "," << sot::format_full(res.duals.u[i]) << "\n";
    for (std::size_t j = 0; j < res.duals.v.size(); ++j)
        duals << "v," << j << "," << sot::format_full(res.duals.v[j]) << "\n";
    sot::write_text_file((cfg.out_dir / "duals.csv").string(), duals.str());

    auto rep = sot::check_cyclical_monotonicity(cfg.kernel, res.plan.support_pairs(), 4,
                                                cfg.tol_monotonicity, cfg.seed);
    json mono{{"monotone", rep.monotone},
              {"tuples_checked", rep.tuples_checked},
              {"sampled", rep.sampled},
              {"deficit", rep.deficit}};
    stamp(mono, cfg);
    sot::write_text_file((cfg.out_dir / "monotonicity.json").string(), mono.dump(2) + "\n");

    std::cout << "cost " << sot::format_full(res.total_cost) << ", " << res.plan.pairs().size()
              << " support pairs, monotone=" << (rep.monotone ? "yes" : "no") << "\n";
    return rep.monotone ? 0 : 5;
}

int cmd_reflector(const Config& cfg) {
    auto nu = measure_from_spec(cfg.raw.at("target"), cfg).normalized();
    auto grid = grid_from_spec(cfg.raw.at("source"), cfg);
    auto intensity = intensity_from_spec(cfg.raw.at("source"), grid);

    sot::WeakSolveOptions opt;
    opt.tol = cfg.tol_reflector;
    opt.max_iterations = cfg.max_iterations;
    opt.tie_tol = cfg.tie_tol;
    auto spec = sot::solve_weak_reflector(nu, grid, intensity, opt);

    fs::create_directories(cfg.out_dir);
    json rj = sot::reflector_to_json(spec);
    stamp(rj, cfg);
    sot::write_text_file((cfg.out_dir / "reflector.json").string(), rj.dump(2) + "\n");

    double total_energy = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) total_energy += intensity[i] * grid.weights[i];
    std::vector<double> scaled(intensity);
    for (double& v : scaled) v /= total_energy;
    auto cd = sot::energy_masses(spec, grid, scaled, cfg.tie_tol);
    std::ostringstream cells;
    cells << csv_header(cfg) << "i,p,G,nu,rel_err\n";
    for (std::size_t i = 0; i < spec.size(); ++i) {
        double rel = (cd.masses[i] - nu.weight(i)) / nu.weight(i);
        cells << i << "," << sot::format_full(spec.focal_params[i]) << ","
              << sot::format_full(cd.masses[i]) << "," << sot::format_full(nu.weight(i)) << ","
              << sot::format_full(rel) << "\n";
    }
    sot::write_text_file((cfg.out_dir / "cells.csv").string(), cells.str());

    auto mesh = sot::make_sphere_mesh(cfg.raw.value("mesh_lat", 64), cfg.raw.value("mesh_lon", 128));
    auto surface = sot::reflector_surface(spec, mesh);
    sot::write_text_file((cfg.out_dir / "reflector.obj").string(),
                         sot::surface_to_obj(surface, "config_hash=" + cfg.hash));

    sot::Rng rng(cfg.seed + 1);
    std::vector<sot::UnitVector> rays;
    for (int i = 0; i < 2000; ++i) rays.push_back(rng.sphere_point(cfg.dimension));
    auto trace = sot::ray_trace_verify(spec, rays, cfg.tie_tol);
    json tj{{"max_deviation", trace.max_deviation},
            {"traced", trace.traced},
            {"ties_skipped", trace.ties_skipped}};
    stamp(tj, cfg);
    sot::write_text_file((cfg.out_dir / "raytrace.json").string(), tj.dump(2) + "\n");

    std::cout << "reflector solved: " << spec.size() << " paraboloids, worst ray deviation "
              << sot::format_full(trace.max_deviation) << "\n";
    return 0;
}

int cmd_recover_map(const Config& cfg) {
    auto mu = measure_from_spec(cfg.raw.at("source"), cfg);
    auto nu = measure_from_spec(cfg.raw.at("target"), cfg);
    auto rep = sot::admissibility_report(cfg.kernel);
    if (!rep.g_monotone)
        throw std::invalid_argument("recover-map: kernel fails the monotonicity requirement");

    auto res = sot::solve_kantorovich(cfg.kernel, mu, nu);
    auto psi = sot::potential_from_duals(cfg.kernel, nu.points(), res.duals.v);
    auto rec = sot::recover_map(psi, mu.points(), cfg.tie_tol);
    auto psi_c = sot::potential_from_duals(cfg.kernel, mu.points(), res.duals.u);

    double max_comp = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!rec.differentiable[i]) continue;
        auto back = sot::recover_map(psi_c, {rec.images[i]}, cfg.tie_tol);
        if (back.differentiable[0])
            max_comp = std::max(max_comp, sot::chord(back.images[0], mu.point(i)));
    }
    auto push = sot::verify_pushforward(rec, mu, nu, cfg.tol_dual * 10);

    fs::create_directories(cfg.out_dir);
    std::ostringstream map_csv;
    map_csv << csv_header(cfg) << "x...,Tx...,argmin,differentiable\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (double c : mu.point(i).coords()) map_csv << sot::format_full(c) << ",";
        for (double c : rec.images[i].coords()) map_csv << sot::format_full(c) << ",";
        map_csv << rec.argmin_index[i] << "," << int(rec.differentiable[i]) << "\n";
    }
    sot::write_text_file((cfg.out_dir / "map.csv").string(), map_csv.str());

    json summary{{"delta", rec.delta},
                 {"flagged", rec.flagged.size()},
                 {"unmatched_mass", push.unmatched_mass},
                 {"excluded_mass", push.excluded_mass},
                 {"max_pushforward_deviation", push.max_deviation},
                 {"max_composition_error", max_comp},
                 {"kantorovich_cost", res.total_cost}};
    stamp(summary, cfg);
    sot::write_text_file((cfg.out_dir / "map_summary.json").string(), summary.dump(2) + "\n");

    std::cout << "map recovered on " << mu.size() << " atoms, delta "
              << sot::format_full(rec.delta) << ", " << rec.flagged.size() << " flagged\n";
    return 0;
}

int cmd_verify(const Config& cfg, const std::string& plan_path) {
    json suites = json::object();
    bool all_pass = true;
    sot::Rng rng(cfg.seed + 99);
    auto k = cfg.kernel;

    {  // kernel admissibility
        auto rep = sot::admissibility_report(k);
        suites["admissibility"] = {{"pass", rep.g_monotone},
                                   {"direction", rep.direction},
                                   {"failures", rep.failures.size()}};
        all_pass = all_pass && rep.g_monotone;
    }
    {  // inverse gradient map round trip
        double worst = 0.0;
        int done = 0;
        while (done < 2000) {
            auto x = rng.sphere_point(cfg.dimension);
            auto y = rng.sphere_point(cfg.dimension);
            double d = sot::chord(x, y);
            if (d < 0.1 || d > 1.9999) continue;
            auto a = sot::tangential_gradient(k, x, y);
            worst = std::max(worst, sot::chord(sot::inverse_map_M(k, a), y));
            ++done;
        }
        bool pass = worst <= 1e-10;
        suites["m_roundtrip"] = {{"pass", pass}, {"max_err", worst}};
        all_pass = all_pass && pass;
    }
    {  // double c-transform identity
        double worst = 0.0;
        std::vector<sot::UnitVector> anchors_pts;
        for (int j = 0; j < 6; ++j) anchors_pts.push_back(rng.sphere_point(cfg.dimension));
        std::vector<double> lambdas;
        for (int j = 0; j < 6; ++j) lambdas.push_back(rng.uniform(-0.5, 0.5));
        sot::PotentialFn psi(k, anchors_pts, lambdas);
        auto grid = sot::make_grid(sot::GridKind::fibonacci, 500, cfg.seed, cfg.dimension);
        auto psi_c = sot::c_transform(psi, grid.nodes);
        auto psi_cc = sot::c_transform(psi_c, psi.anchors());
        for (const auto& x : grid.nodes) worst = std::max(worst, std::abs(psi_cc(x) - psi(x)));
        bool pass = worst <= cfg.tol_dual;
        suites["psi_cc"] = {{"pass", pass}, {"max_err", worst}};
        all_pass = all_pass && pass;
    }
    {  // support monotonicity: from a stored plan, or a fresh random solve
        sot::MonotonicityReport rep;
        if (!plan_path.empty()) {
            auto mu = measure_from_spec(cfg.raw.at("source"), cfg);
            auto nu = measure_from_spec(cfg.raw.at("target"), cfg);
            json pj = json::parse(sot::read_text_file(plan_path));
            std::vector<std::pair<sot::UnitVector, sot::UnitVector>> support;
            for (const auto& row : pj.at("pairs"))
                support.emplace_back(mu.point(row[0].get<std::size_t>()),
                                     nu.point(row[1].get<std::size_t>()));
            rep = sot::check_cyclical_monotonicity(k, support, 4, cfg.tol_monotonicity, cfg.seed);
        } else {
            std::vector<sot::UnitVector> xs, ys;
            for (int i = 0; i < 12; ++i) xs.push_back(rng.sphere_point(cfg.dimension));
            for (int i = 0; i < 12; ++i) ys.push_back(rng.sphere_point(cfg.dimension));
            sot::DiscreteMeasure mu(xs, std::vector<double>(12, 1.0 / 12));
            sot::DiscreteMeasure nu(ys, std::vector<double>(12, 1.0 / 12));
            auto res = sot::solve_kantorovich(k, mu, nu);
            rep = sot::check_cyclical_monotonicity(k, res.plan.support_pairs(), 4,
                                                   cfg.tol_monotonicity, cfg.seed);
        }
        suites["monotonicity"] = {{"pass", rep.monotone},
                                  {"tuples_checked", rep.tuples_checked},
                                  {"deficit", rep.deficit}};
        all_pass = all_pass && rep.monotone;
    }
    {  // reflection law involution and norm preservation
        double worst = 0.0;
        for (int rep_i = 0; rep_i < 2000; ++rep_i) {
            auto v = rng.sphere_point(cfg.dimension);
            auto n = rng.sphere_point(cfg.dimension);
            auto r = sot::snell_reflect(v, n);
            worst = std::max(worst, std::abs(sot::norm(r.coords()) - 1.0));
            worst = std::max(worst, sot::chord(sot::snell_reflect(r, n), v));
        }
        bool pass = worst <= 1e-14;
        suites["snell"] = {{"pass", pass}, {"max_err", worst}};
        all_pass = all_pass && pass;
    }
    if (cfg.dimension == 2 && k.name == "log") {  // semi-discrete duality bridge
        double s = 1.0 / std::sqrt(3.0);
        std::vector<sot::UnitVector> dirs = {
            sot::UnitVector({s, s, s}), sot::UnitVector({s, -s, -s}),
            sot::UnitVector({-s, s, -s}), sot::UnitVector({-s, -s, s})};
        sot::DiscreteMeasure nu(dirs, std::vector<double>(4, 0.25));
        auto grid = sot::make_grid(sot::GridKind::fibonacci, 20000, cfg.seed, 2);
        std::vector<double> intensity(grid.size(), 1.0);
        sot::WeakSolveOptions opt;
        opt.tol = 2e-4;
        auto spec = sot::solve_weak_reflector(nu, grid, intensity, opt);

        auto atoms_grid = sot::make_grid(sot::GridKind::fibonacci, 4000, cfg.seed, 2);
        sot::DiscreteMeasure mu(atoms_grid.nodes,
                                std::vector<double>(atoms_grid.size(), 1.0 / atoms_grid.size()));
        auto res = sot::solve_kantorovich(k, mu, nu);
        double offset = 0.0;
        for (std::size_t j = 0; j < 4; ++j)
            offset += (res.duals.v[j] + std::log(spec.focal_params[j])) / 4.0;
        double worst = 0.0;
        for (std::size_t j = 0; j < 4; ++j)
            worst = std::max(worst,
                             std::abs(res.duals.v[j] + std::log(spec.focal_params[j]) - offset));
        bool pass = worst <= 5e-3;
        suites["duality_bridge"] = {{"pass", pass}, {"max_err", worst}};
        all_pass = all_pass && pass;
    }

    json out{{"suites", suites}, {"all_pass", all_pass}};
    stamp(out, cfg);
    fs::create_directories(cfg.out_dir);
    sot::write_text_file((cfg.out_dir / "verify.json").string(), out.dump(2) + "\n");
    for (const auto& [name, result] : suites.items())
        std::cout << (result.at("pass").get<bool>() ? "[PASS] " : "[FAIL] ") << name << "\n";
    return all_pass ? 0 : 5;
}

int cmd_export_mesh(const Config& cfg, const std::string& reflector_path, std::size_t lat,
                    std::size_t lon) {
    auto spec = sot::reflector_from_json(json::parse(sot::read_text_file(reflector_path)));
    auto mesh = sot::make_sphere_mesh(lat, lon);
    auto surface = sot::reflector_surface(spec, mesh);
    fs::create_directories(cfg.out_dir);
    sot::write_text_file((cfg.out_dir / "mesh.obj").string(),
                         sot::surface_to_obj(surface, "config_hash=" + cfg.hash));
    std::cout << "mesh exported: " << surface.vertices.size() << " vertices, "
              << surface.faces.size() << " faces\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal transport on the sphere and far-field reflector design"};
    app.require_subcommand(1);

    std::string config_path, kernel_override, out_dir_override, plan_path, reflector_path;
    std::optional<std::uint64_t> seed_override;
    std::size_t mesh_lat = 64, mesh_lon = 128;

    app.add_option("-c,--config", config_path, "Configuration JSON file");
    app.add_option("--kernel", kernel_override, "Kernel override: log or power:q");
    app.add_option("--seed", seed_override, "Seed override");
    app.add_option("--out-dir", out_dir_override, "Output directory override");

    auto* solve = app.add_subcommand("solve", "Exact discrete transport solve");
    auto* reflector = app.add_subcommand("reflector", "Semi-discrete reflector construction");
    auto* recover = app.add_subcommand("recover-map", "Optimal map from dual potentials");
    auto* verify = app.add_subcommand("verify", "Invariant verification suites");
    verify->add_option("--plan", plan_path, "Check a stored plan file instead of solving");
    auto* export_mesh = app.add_subcommand("export-mesh", "Reflector surface to OBJ");
    export_mesh->add_option("--reflector", reflector_path, "Reflector spec JSON")->required();
    export_mesh->add_option("--lat", mesh_lat, "Latitude rings");
    export_mesh->add_option("--lon", mesh_lon, "Longitude steps");

    CLI11_PARSE(app, argc, argv);

    try {
        Config cfg = load_config(config_path, kernel_override, seed_override, out_dir_override);
        if (solve->parsed()) return cmd_solve(cfg);
        if (reflector->parsed()) return cmd_reflector(cfg);
        if (recover->parsed()) return cmd_recover_map(cfg);
        if (verify->parsed()) return cmd_verify(cfg, plan_path);
        if (export_mesh->parsed()) return cmd_export_mesh(cfg, reflector_path, mesh_lat, mesh_lon);
        return 1;
    } catch (const sot::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const sot::NoFinitePlanError& e) {
        std::cerr << "no finite-cost plan: " << e.what() << "\n";
        return 3;
    } catch (const sot::NonConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

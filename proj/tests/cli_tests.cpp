// End-to-end checks of the command-line tool: exit codes, artifact
// schemas, and byte-level determinism of reruns.

#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sot/geometry.hpp"
#include "sot/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef SOT_CLI_PATH
#error "SOT_CLI_PATH must point at the CLI binary"
#endif

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("sot_cli_test_" + std::to_string(std::rand()) + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
    std::string cmd = std::string(SOT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    if (status < 0) return -1;
    return WEXITSTATUS(status);
}

void write_json(const fs::path& p, const json& j) {
    sot::write_text_file(p.string(), j.dump(2) + "\n");
}

json solve_config(const fs::path& dir, const std::string& out) {
    return json{
        {"kernel", "log"},
        {"dimension", 1},
        {"seed", 7},
        {"source", {{"kind", "inline"},
                    {"points", {{1.0, 0.0}, {0.0, 1.0}}},
                    {"weights", {0.5, 0.5}}}},
        {"target", {{"kind", "inline"},
                    {"points", {{-1.0, 0.0}, {0.0, -1.0}}},
                    {"weights", {0.5, 0.5}}}},
        {"output_dir", (dir / out).string()}};
}

}  // namespace

TEST_CASE("solve writes the expected plan and artifacts") {
    TempDir tmp;
    write_json(tmp.path / "cfg.json", solve_config(tmp.path, "out"));
    int rc = run_cli("-c " + (tmp.path / "cfg.json").string() + " solve");
    CHECK(rc == 0);

    json plan = json::parse(sot::read_text_file((tmp.path / "out/plan.json").string()));
    CHECK(plan.at("cost").get<double>() == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    REQUIRE(plan.at("pairs").size() == 2);
    // The crossing is antipodal: atom 0 to target 0, atom 1 to target 1.
    CHECK(plan["pairs"][0][0] == 0);
    CHECK(plan["pairs"][0][1] == 0);
    CHECK(plan.contains("config_hash"));
    CHECK(plan.contains("tolerances"));
    CHECK(fs::exists(tmp.path / "out/duals.csv"));
    CHECK(fs::exists(tmp.path / "out/monotonicity.json"));
}

TEST_CASE("solve is byte-identical across reruns") {
    TempDir tmp;
    write_json(tmp.path / "cfg.json", solve_config(tmp.path, "out_a"));
    REQUIRE(run_cli("-c " + (tmp.path / "cfg.json").string() + " solve") == 0);
    write_json(tmp.path / "cfg.json", solve_config(tmp.path, "out_b"));
    REQUIRE(run_cli("-c " + (tmp.path / "cfg.json").string() + " solve") == 0);
    // The config hash differs only through output_dir; compare the payloads.
    auto a = json::parse(sot::read_text_file((tmp.path / "out_a/plan.json").string()));
    auto b = json::parse(sot::read_text_file((tmp.path / "out_b/plan.json").string()));
    a.erase("config_hash");
    b.erase("config_hash");
    CHECK(a.dump() == b.dump());

    // Same output dir twice: whole files identical.
    write_json(tmp.path / "cfg.json", solve_config(tmp.path, "out_c"));
    REQUIRE(run_cli("-c " + (tmp.path / "cfg.json").string() + " solve") == 0);
    std::string first = sot::read_text_file((tmp.path / "out_c/plan.json").string());
    REQUIRE(run_cli("-c " + (tmp.path / "cfg.json").string() + " solve") == 0);
    CHECK(first == sot::read_text_file((tmp.path / "out_c/plan.json").string()));
}

TEST_CASE("exit codes: bad config, imbalance, shared Dirac, bad kernel") {
    TempDir tmp;
    CHECK(run_cli("-c " + (tmp.path / "missing.json").string() + " solve") == 1);

    json imbalanced = solve_config(tmp.path, "out_i");
    imbalanced["target"]["weights"] = {0.4, 0.4};
    write_json(tmp.path / "imb.json", imbalanced);
    CHECK(run_cli("-c " + (tmp.path / "imb.json").string() + " solve") == 2);

    json shared = solve_config(tmp.path, "out_s");
    shared["source"] = {{"kind", "inline"}, {"points", {{1.0, 0.0}}}, {"weights", {1.0}}};
    shared["target"] = {{"kind", "inline"}, {"points", {{1.0, 0.0}}}, {"weights", {1.0}}};
    write_json(tmp.path / "shared.json", shared);
    CHECK(run_cli("-c " + (tmp.path / "shared.json").string() + " solve") == 3);

    json badkernel = solve_config(tmp.path, "out_k");
    badkernel["kernel"] = "power:-2";
    write_json(tmp.path / "badk.json", badkernel);
    CHECK(run_cli("-c " + (tmp.path / "badk.json").string() + " solve") == 1);
}

TEST_CASE("reflector command produces spec, cells, mesh and ray report") {
    TempDir tmp;
    json cfg{{"kernel", "log"},
             {"dimension", 2},
             {"seed", 3},
             {"source", {{"kind", "grid"}, {"grid", "fibonacci"}, {"n", 20000},
                         {"intensity", "uniform"}}},
             {"target", {{"kind", "inline"},
                         {"points", {{0.0, 0.0, 1.0}, {0.0, 0.0, -1.0}}},
                         {"weights", {0.5, 0.5}}}},
             {"output_dir", (tmp.path / "out").string()},
             {"mesh_lat", 8},
             {"mesh_lon", 12}};
    write_json(tmp.path / "cfg.json", cfg);
    CHECK(run_cli("-c " + (tmp.path / "cfg.json").string() + " reflector") == 0);

    json spec = json::parse(sot::read_text_file((tmp.path / "out/reflector.json").string()));
    auto p = spec.at("focal_params").get<std::vector<double>>();
    REQUIRE(p.size() == 2);
    CHECK(p[0] == doctest::Approx(p[1]).epsilon(1e-9));

    json trace = json::parse(sot::read_text_file((tmp.path / "out/raytrace.json").string()));
    CHECK(trace.at("max_deviation").get<double>() <= 1e-8);

    // OBJ: one vertex line per mesh vertex, first line carries the hash.
    std::string obj = sot::read_text_file((tmp.path / "out/reflector.obj").string());
    CHECK(obj.rfind("# config_hash=", 0) == 0);
    std::size_t vcount = 0;
    for (std::size_t pos = 0; (pos = obj.find("\nv ", pos)) != std::string::npos; ++pos) ++vcount;
    CHECK(vcount == 2 + 7 * 12);

    // Non-convergence: thirds sit between the node quantization levels, so
    // a tolerance below the floor cannot be reached.
    cfg["tolerances"] = {{"reflector", 1e-13}};
    cfg["max_iterations"] = 50;
    cfg["target"] = {{"kind", "inline"},
                     {"points", {{0.0, 0.0, 1.0}, {0.0, 0.0, -1.0}}},
                     {"weights", {2.0 / 3.0, 1.0 / 3.0}}};
    write_json(tmp.path / "cfg.json", cfg);
    CHECK(run_cli("-c " + (tmp.path / "cfg.json").string() + " reflector") == 4);
}

TEST_CASE("verify passes on the default configuration and catches corruption") {
    TempDir tmp;
    json cfg{{"kernel", "log"}, {"dimension", 2}, {"seed", 11},
             {"output_dir", (tmp.path / "out").string()}};
    write_json(tmp.path / "cfg.json", cfg);
    CHECK(run_cli("-c " + (tmp.path / "cfg.json").string() + " verify") == 0);
    json rep = json::parse(sot::read_text_file((tmp.path / "out/verify.json").string()));
    CHECK(rep.at("all_pass").get<bool>());

    // Corrupt a plan: the crossed pairing on the circle, fed back through
    // --plan, must fail the monotonicity suite.
    json solve_cfg = solve_config(tmp.path, "out2");
    write_json(tmp.path / "solve.json", solve_cfg);
    REQUIRE(run_cli("-c " + (tmp.path / "solve.json").string() + " solve") == 0);
    json plan = json::parse(sot::read_text_file((tmp.path / "out2/plan.json").string()));
    for (auto& row : plan.at("pairs")) row[1] = 1 - row[1].get<int>();  // swap targets
    write_json(tmp.path / "out2/plan.json", plan);
    int rc = run_cli("-c " + (tmp.path / "solve.json").string() + " verify --plan " +
                     (tmp.path / "out2/plan.json").string());
    CHECK(rc == 5);
}

TEST_CASE("solve reads measure files written in the canonical format") {
    TempDir tmp;
    sot::Rng rng(77);
    std::vector<sot::UnitVector> xs, ys;
    for (int i = 0; i < 6; ++i) xs.push_back(rng.sphere_point(2));
    for (int i = 0; i < 6; ++i) ys.push_back(rng.sphere_point(2));
    sot::DiscreteMeasure mu(xs, std::vector<double>(6, 1.0 / 6));
    sot::DiscreteMeasure nu(ys, std::vector<double>(6, 1.0 / 6));
    sot::write_text_file((tmp.path / "mu.json").string(), sot::measure_to_json_text(mu));
    sot::write_text_file((tmp.path / "nu.json").string(), sot::measure_to_json_text(nu));
    json cfg{{"kernel", "log"},
             {"dimension", 2},
             {"source", {{"kind", "file"}, {"path", (tmp.path / "mu.json").string()}}},
             {"target", {{"kind", "file"}, {"path", (tmp.path / "nu.json").string()}}},
             {"output_dir", (tmp.path / "out").string()}};
    write_json(tmp.path / "cfg.json", cfg);
    CHECK(run_cli("-c " + (tmp.path / "cfg.json").string() + " solve") == 0);
    json plan = json::parse(sot::read_text_file((tmp.path / "out/plan.json").string()));
    CHECK(plan.at("pairs").size() >= 6);
}

TEST_CASE("export-mesh round trips a reflector spec") {
    TempDir tmp;
    json spec{{"directions", {{0.0, 0.0, 1.0}, {0.0, 0.0, -1.0}}},
              {"focal_params", {1.0, 0.8}}};
    write_json(tmp.path / "spec.json", spec);
    json cfg{{"output_dir", (tmp.path / "out").string()}};
    write_json(tmp.path / "cfg.json", cfg);
    CHECK(run_cli("-c " + (tmp.path / "cfg.json").string() + " export-mesh --reflector " +
                  (tmp.path / "spec.json").string() + " --lat 6 --lon 8") == 0);
    CHECK(fs::exists(tmp.path / "out/mesh.obj"));
}

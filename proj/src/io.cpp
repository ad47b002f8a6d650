#include "sot/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sot {

using nlohmann::json;

std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json measure_to_json(const DiscreteMeasure& m) {
    json points = json::array();
    for (const auto& p : m.points()) points.push_back(p.coords());
    return json{{"dim", m.dim()}, {"points", points}, {"weights", m.weights()}};
}

std::string measure_to_json_text(const DiscreteMeasure& m) {
    std::ostringstream out;
    out << "{\n  \"dim\": " << m.dim() << ",\n  \"points\": [\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << "    [";
        const auto& c = m.point(i).coords();
        for (std::size_t d = 0; d < c.size(); ++d)
            out << (d ? ", " : "") << format_full(c[d]);
        out << (i + 1 < m.size() ? "],\n" : "]\n");
    }
    out << "  ],\n  \"weights\": [";
    for (std::size_t i = 0; i < m.size(); ++i)
        out << (i ? ", " : "") << format_full(m.weight(i));
    out << "]\n}\n";
    return out.str();
}

DiscreteMeasure measure_from_json(const json& j) {
    if (!j.contains("points") || !j.contains("weights"))
        throw std::invalid_argument("measure JSON needs 'points' and 'weights'");
    std::vector<UnitVector> points;
    for (const auto& row : j.at("points")) points.push_back(UnitVector(row.get<Vec>()));
    auto weights = j.at("weights").get<std::vector<double>>();
    if (j.contains("dim")) {
        std::size_t d = j.at("dim").get<std::size_t>();
        for (const auto& p : points)
            if (p.dim() != d) throw std::invalid_argument("measure JSON: dim mismatch");
    }
    return DiscreteMeasure(std::move(points), std::move(weights));
}

json plan_to_json(const TransportPlan& plan, const DualPotentials& duals, double total_cost) {
    json pairs = json::array();
    for (const auto& e : plan.pairs()) pairs.push_back(json::array({e.i, e.j, e.mass}));
    return json{{"pairs", pairs}, {"cost", total_cost}, {"dual_u", duals.u}, {"dual_v", duals.v}};
}

json reflector_to_json(const ReflectorSpec& spec) {
    json dirs = json::array();
    for (const auto& y : spec.directions) dirs.push_back(y.coords());
    return json{{"directions", dirs}, {"focal_params", spec.focal_params}};
}

ReflectorSpec reflector_from_json(const json& j) {
    ReflectorSpec spec;
    for (const auto& row : j.at("directions")) spec.directions.push_back(UnitVector(row.get<Vec>()));
    spec.focal_params = j.at("focal_params").get<std::vector<double>>();
    spec.validate();
    return spec;
}

std::string surface_to_obj(const SurfaceMesh& mesh, const std::string& header_comment) {
    std::ostringstream out;
    if (!header_comment.empty()) {
        std::istringstream lines(header_comment);
        std::string line;
        while (std::getline(lines, line)) out << "# " << line << "\n";
    }
    for (const auto& v : mesh.vertices) {
        out << "v";
        for (double c : v) out << " " << format_full(c);
        out << "\n";
    }
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
    return out.str();
}

std::string config_hash(const json& config) {
    std::string dump = config.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write file: " + path);
    out << content;
}

}  // namespace sot

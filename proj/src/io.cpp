#include "matnet/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "matnet/errors.hpp"

namespace matnet {

namespace {

using ordered_json = nlohmann::ordered_json;
constexpr int kFormatVersion = 1;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void check_version(const ordered_json& j, const std::string& what) {
    if (!j.contains("format_version"))
        throw FormatError(what + ": missing format_version");
    if (j["format_version"].get<int>() != kFormatVersion)
        throw FormatError(what + ": unsupported format_version " +
                          j["format_version"].dump() + " (expected 1)");
}

// Upper-triangle (row-major) serialization of a symmetric 6x6 matrix.
void append_upper(std::string& row, const Mat6& m) {
    for (int i = 0; i < 6; ++i)
        for (int j = i; j < 6; ++j) {
            row += ',';
            row += format_double(m(i, j));
        }
}

Mat6 parse_upper(const std::vector<double>& values, std::size_t offset) {
    Mat6 m;
    std::size_t k = offset;
    for (int i = 0; i < 6; ++i)
        for (int j = i; j < 6; ++j) {
            m(i, j) = values[k];
            m(j, i) = values[k];
            ++k;
        }
    return m;
}

void verify_psd(const Mat6& m, const std::string& context) {
    if (!m.allFinite()) throw FormatError(context + ": non-finite entries");
    Eigen::SelfAdjointEigenSolver<Mat6> eig(m, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(hi, 1.0))
        throw FormatError(context + ": matrix is not positive semi-definite");
}

std::vector<double> split_doubles(const std::string& line, const std::string& context) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        const std::size_t next = line.find(',', pos);
        const std::string tok =
            line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw FormatError(context + ": malformed value '" + tok + "'");
        }
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

ordered_json material_json(const MaterialModel& mat) {
    ordered_json j;
    if (const auto* el = std::get_if<ElasticOrthotropic>(&mat)) {
        j["law"] = "elastic_orthotropic";
        j["E11"] = el->e11;
        j["E22"] = el->e22;
        j["E33"] = el->e33;
        j["G12"] = el->g12;
        j["G13"] = el->g13;
        j["G23"] = el->g23;
        j["nu12"] = el->nu12;
        j["nu13"] = el->nu13;
        j["nu23"] = el->nu23;
    } else {
        const auto& p = std::get<J2Plasticity>(mat);
        j["law"] = "j2_plasticity";
        j["E"] = p.youngs;
        j["nu"] = p.poisson;
        j["yield0"] = p.yield0;
        j["H_lin"] = p.h_lin;
        j["K_exp"] = p.k_exp;
        j["m_exp"] = p.m_exp;
    }
    return j;
}

MaterialModel material_from(const ordered_json& j) {
    const std::string law = j.at("law").get<std::string>();
    if (law == "elastic_orthotropic") {
        ElasticOrthotropic el;
        el.e11 = j.at("E11").get<double>();
        el.e22 = j.at("E22").get<double>();
        el.e33 = j.at("E33").get<double>();
        el.g12 = j.at("G12").get<double>();
        el.g13 = j.at("G13").get<double>();
        el.g23 = j.at("G23").get<double>();
        el.nu12 = j.at("nu12").get<double>();
        el.nu13 = j.at("nu13").get<double>();
        el.nu23 = j.at("nu23").get<double>();
        return el;
    }
    if (law == "j2_plasticity") {
        J2Plasticity p;
        p.youngs = j.at("E").get<double>();
        p.poisson = j.at("nu").get<double>();
        p.yield0 = j.at("yield0").get<double>();
        p.h_lin = j.at("H_lin").get<double>();
        p.k_exp = j.at("K_exp").get<double>();
        p.m_exp = j.at("m_exp").get<double>();
        return p;
    }
    throw FormatError("unknown material law '" + law + "'");
}

} // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["model_type"] = model.type() == ModelType::dmn ? "dmn" : "imn";
    j["depth"] = model.topology.depth;
    j["voigt_order"] = "11,22,33,23,13,12";
    if (model.type() == ModelType::dmn) j["euler_convention"] = "zxz-intrinsic-active";
    const auto& z = model.activations();
    j["z"] = std::vector<double>(z.data(), z.data() + z.size());
    if (const auto* d = std::get_if<DmnParams>(&model.params)) {
        std::vector<double> flat;
        flat.reserve(3 * d->angles.size());
        for (const auto& a : d->angles) {
            flat.push_back(a.alpha);
            flat.push_back(a.beta);
            flat.push_back(a.gamma);
        }
        j["angles"] = flat;
    } else {
        const auto& p = std::get<ImnParams>(model.params);
        j["theta"] = std::vector<double>(p.theta.data(), p.theta.data() + p.theta.size());
        j["phi"] = std::vector<double>(p.phi.data(), p.phi.data() + p.phi.size());
    }
    write_text(path, j.dump(2) + "\n");
}

Model load_model(const std::filesystem::path& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("model '" + path.string() + "': " + e.what());
    }
    check_version(j, "model '" + path.string() + "'");
    Model model;
    model.topology.depth = j.at("depth").get<int>();
    if (model.topology.depth < 1) throw FormatError("model depth must be >= 1");
    const std::string type = j.at("model_type").get<std::string>();
    const auto z_raw = j.at("z").get<std::vector<double>>();
    if (static_cast<int>(z_raw.size()) != model.topology.base_count())
        throw FormatError("model z has wrong length");
    Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(z_raw.data(),
                                                          static_cast<Eigen::Index>(z_raw.size()));
    if (type == "dmn") {
        DmnParams p;
        p.z = z;
        const auto flat = j.at("angles").get<std::vector<double>>();
        if (flat.size() != static_cast<std::size_t>(3 * model.topology.node_count()))
            throw FormatError("model angles have wrong length");
        p.angles.resize(static_cast<std::size_t>(model.topology.node_count()));
        for (std::size_t i = 0; i < p.angles.size(); ++i)
            p.angles[i] = EulerAngles{flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]};
        model.params = std::move(p);
    } else if (type == "imn") {
        ImnParams p;
        p.z = z;
        const auto th = j.at("theta").get<std::vector<double>>();
        const auto ph = j.at("phi").get<std::vector<double>>();
        if (static_cast<int>(th.size()) != model.topology.parent_count() ||
            static_cast<int>(ph.size()) != model.topology.parent_count())
            throw FormatError("model theta/phi have wrong length");
        p.theta = Eigen::Map<const Eigen::VectorXd>(th.data(), static_cast<Eigen::Index>(th.size()));
        p.phi = Eigen::Map<const Eigen::VectorXd>(ph.data(), static_cast<Eigen::Index>(ph.size()));
        model.params = std::move(p);
    } else {
        throw FormatError("unknown model_type '" + type + "'");
    }
    return model;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::string text;
    text += "format_version," + std::to_string(kFormatVersion) + "\n";
    text += "sample_id";
    const char* prefixes[3] = {"p1", "p2", "t"};
    for (const char* prefix : prefixes)
        for (int i = 1; i <= 6; ++i)
            for (int j = i; j <= 6; ++j)
                text += "," + std::string(prefix) + "_" + std::to_string(i) + std::to_string(j);
    text += "\n";
    for (std::size_t s = 0; s < dataset.samples.size(); ++s) {
        std::string row = std::to_string(s);
        append_upper(row, dataset.samples[s].phase1);
        append_upper(row, dataset.samples[s].phase2);
        append_upper(row, dataset.samples[s].target);
        text += row + "\n";
    }
    write_text(path, text);
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw FormatError("dataset '" + path.string() + "' is empty");
    if (line.rfind("format_version,", 0) != 0)
        throw FormatError("dataset '" + path.string() + "': missing format_version line");
    const std::string version = line.substr(std::string("format_version,").size());
    if (version != std::to_string(kFormatVersion))
        throw FormatError("dataset '" + path.string() + "': unsupported format_version " + version);
    if (!std::getline(in, line)) throw FormatError("dataset '" + path.string() + "': missing header");

    Dataset out;
    int row_index = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::string context = "dataset '" + path.string() + "' row " + std::to_string(row_index);
        const std::vector<double> values = split_doubles(line, context);
        if (values.size() != 1 + 63)
            throw FormatError(context + ": expected 64 fields, found " +
                              std::to_string(values.size()));
        TrainingSample s;
        s.phase1 = parse_upper(values, 1);
        s.phase2 = parse_upper(values, 1 + 21);
        s.target = parse_upper(values, 1 + 42);
        verify_psd(s.phase1, context + " phase1");
        verify_psd(s.phase2, context + " phase2");
        verify_psd(s.target, context + " target");
        out.samples.push_back(s);
        ++row_index;
    }
    return out;
}

void save_history(const TrainHistory& history, const std::filesystem::path& path) {
    std::string text;
    text += "format_version," + std::to_string(kFormatVersion) + "\n";
    text += "epoch,train_loss,val_loss,e_C,lr\n";
    for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
        text += std::to_string(e);
        text += ',' + format_double(history.train_loss[e]);
        text += ',' + format_double(history.val_loss[e]);
        text += ',' + format_double(history.e_c_val[e]);
        text += ',' + format_double(history.lr[e]);
        text += '\n';
    }
    write_text(path, text);
}

TrainHistory load_history(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("format_version,", 0) != 0)
        throw FormatError("history '" + path.string() + "': missing format_version line");
    if (line != "format_version," + std::to_string(kFormatVersion))
        throw FormatError("history '" + path.string() + "': unsupported format_version");
    if (!std::getline(in, line))
        throw FormatError("history '" + path.string() + "': missing header");
    TrainHistory h;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto values =
            split_doubles(line, "history '" + path.string() + "' row " + std::to_string(row));
        if (values.size() != 5)
            throw FormatError("history '" + path.string() + "' row " + std::to_string(row) +
                              ": expected 5 fields");
        h.train_loss.push_back(values[1]);
        h.val_loss.push_back(values[2]);
        h.e_c_val.push_back(values[3]);
        h.lr.push_back(values[4]);
        ++row;
    }
    return h;
}

void save_path_csv(const PathResult& path_result, const std::filesystem::path& path) {
    std::string text;
    text += "format_version," + std::to_string(kFormatVersion) + "\n";
    text += "step,eps_11,eps_22,eps_33,eps_23,eps_13,eps_12,"
            "sig_11,sig_22,sig_33,sig_23,sig_13,sig_12,iterations,active_nodes,elapsed_ns\n";
    for (std::size_t s = 0; s < path_result.stress.size(); ++s) {
        std::string row = std::to_string(s);
        for (int c = 0; c < 6; ++c) row += ',' + format_double(path_result.strain[s](c));
        for (int c = 0; c < 6; ++c) row += ',' + format_double(path_result.stress[s](c));
        row += ',' + std::to_string(path_result.iterations[s]);
        row += ',' + std::to_string(path_result.active_nodes);
        row += ',' + std::to_string(path_result.elapsed_ns[s]);
        text += row + "\n";
    }
    write_text(path, text);
}

std::string material_to_json(const PhaseMaterials& materials) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["phase1"] = material_json(materials.phase1);
    j["phase2"] = material_json(materials.phase2);
    return j.dump(2) + "\n";
}

PhaseMaterials material_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("materials: ") + e.what());
    }
    check_version(j, "materials");
    return PhaseMaterials{material_from(j.at("phase1")), material_from(j.at("phase2"))};
}

std::string preset_to_json(const CompositePreset& preset) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["name"] = preset.name;
    j["matrix"] = material_json(MaterialModel{preset.matrix});
    j["fiber"] = material_json(MaterialModel{preset.fiber});
    return j.dump(2) + "\n";
}

CompositePreset preset_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("preset: ") + e.what());
    }
    check_version(j, "preset");
    CompositePreset p;
    p.name = j.at("name").get<std::string>();
    p.matrix = std::get<J2Plasticity>(material_from(j.at("matrix")));
    p.fiber = std::get<ElasticOrthotropic>(material_from(j.at("fiber")));
    return p;
}

CompositePreset load_preset(const std::filesystem::path& path) {
    return preset_from_json(read_text(path));
}

} // namespace matnet

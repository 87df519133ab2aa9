#include "pba/persistence.hpp"

#include "pba/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pba {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) fields.push_back(field);
    return fields;
}

double parse_double(const std::string& s, const fs::path& path) {
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw ConfigError("malformed number '" + s + "' in " + path.string());
    }
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    return in;
}

std::ofstream open_output(const fs::path& path, bool append = false) {
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + path.string());
    return out;
}

}  // namespace

void write_ensemble_csv(const fs::path& path, const Design& design) {
    std::ofstream out = open_output(path);
    for (Eigen::Index j = 0; j < design.dims(); ++j) {
        out << "x" << (j + 1) << ",";
    }
    for (Eigen::Index d = 0; d < design.outputs.cols(); ++d) {
        out << "f" << (d + 1) << (d + 1 < design.outputs.cols() ? "," : "\n");
    }
    for (Eigen::Index i = 0; i < design.n(); ++i) {
        for (Eigen::Index j = 0; j < design.dims(); ++j) {
            out << format_double(design.points(i, j)) << ",";
        }
        for (Eigen::Index d = 0; d < design.outputs.cols(); ++d) {
            out << format_double(design.outputs(i, d))
                << (d + 1 < design.outputs.cols() ? "," : "\n");
        }
    }
}

Design read_ensemble_csv(const fs::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty ensemble file: " + path.string());
    const std::vector<std::string> header = split_csv_line(line);
    Eigen::Index dims = 0;
    Eigen::Index outputs = 0;
    for (const std::string& h : header) {
        if (!h.empty() && h[0] == 'x') ++dims;
        else if (!h.empty() && h[0] == 'f') ++outputs;
        else throw ConfigError("unexpected ensemble header column '" + h + "'");
    }
    if (dims == 0 || outputs == 0) {
        throw ConfigError("ensemble header must list x... then f... columns");
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (static_cast<Eigen::Index>(fields.size()) != dims + outputs) {
            throw ConfigError("ensemble row width mismatch in " + path.string());
        }
        std::vector<double> row;
        for (const std::string& f : fields) row.push_back(parse_double(f, path));
        rows.push_back(std::move(row));
    }
    Design design;
    design.points.resize(static_cast<Eigen::Index>(rows.size()), dims);
    design.outputs.resize(static_cast<Eigen::Index>(rows.size()), outputs);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Eigen::Index j = 0; j < dims; ++j) {
            design.points(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
        }
        for (Eigen::Index d = 0; d < outputs; ++d) {
            design.outputs(static_cast<Eigen::Index>(i), d) =
                rows[i][static_cast<std::size_t>(dims + d)];
        }
    }
    design.validate();
    return design;
}

void write_observations_csv(const fs::path& path, const Vector& depths, const Vector& z) {
    if (depths.size() != z.size()) {
        throw ArgumentError("write_observations_csv: depth/z size mismatch");
    }
    std::ofstream out = open_output(path);
    out << "depth,z\n";
    for (Eigen::Index i = 0; i < depths.size(); ++i) {
        out << format_double(depths[i]) << "," << format_double(z[i]) << "\n";
    }
}

void read_observations_csv(const fs::path& path, Vector& depths, Vector& z) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"depth", "z"}) {
        throw ConfigError("observations file must start with header 'depth,z': " + path.string());
    }
    std::vector<double> d, v;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 2) throw ConfigError("observations row width mismatch");
        d.push_back(parse_double(fields[0], path));
        v.push_back(parse_double(fields[1], path));
    }
    depths = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
    z = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ReplicateCsvWriter::ReplicateCsvWriter(const fs::path& path, bool append) : path_(path) {
    if (!append || !fs::exists(path)) {
        std::ofstream out = open_output(path);
        out << "replicateId,classId,memberId,analysisValue,ySample\n";
    }
}

void ReplicateCsvWriter::write_row(const ReplicateRow& row,
                                   const std::vector<SampledMember>& members) {
    if (row.values.size() != static_cast<Eigen::Index>(members.size()) + 1) {
        throw ArgumentError("ReplicateCsvWriter: row width does not match members");
    }
    std::ofstream out = open_output(path_, true);
    out << row.replicateId << ",0,0," << format_double(row.values[0]) << ","
        << format_double(row.yHat) << "\n";
    for (std::size_t m = 0; m < members.size(); ++m) {
        out << row.replicateId << "," << members[m].label.classId << ","
            << members[m].label.memberId << ","
            << format_double(row.values[static_cast<Eigen::Index>(m) + 1]) << ","
            << format_double(row.yHat) << "\n";
    }
}

void ReplicateCsvWriter::flush() {}

std::vector<ReplicateRow> read_replicates_csv(const fs::path& path,
                                              std::size_t memberCount) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty replicate table: " + path.string());
    if (split_csv_line(line) !=
        std::vector<std::string>{"replicateId", "classId", "memberId", "analysisValue",
                                 "ySample"}) {
        throw ConfigError("unexpected replicate table header in " + path.string());
    }

    std::map<int, ReplicateRow> rows;
    std::map<int, std::size_t> seen;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 5) throw ConfigError("replicate row width mismatch");
        const int id = static_cast<int>(parse_double(fields[0], path));
        ReplicateRow& row = rows[id];
        if (row.values.size() == 0) {
            row.replicateId = id;
            row.values = Vector::Constant(static_cast<Eigen::Index>(memberCount) + 1,
                                          std::numeric_limits<double>::quiet_NaN());
        }
        const std::size_t pos = seen[id]++;
        if (pos >= memberCount + 1) {
            throw ConfigError("replicate table has too many analyses for replicate " +
                              std::to_string(id));
        }
        row.values[static_cast<Eigen::Index>(pos)] = parse_double(fields[3], path);
        row.yHat = parse_double(fields[4], path);
    }
    std::vector<ReplicateRow> out;
    for (auto& [id, row] : rows) {
        if (seen[id] != memberCount + 1) {
            throw ConfigError("replicate " + std::to_string(id) + " has " +
                              std::to_string(seen[id]) + " analyses, expected " +
                              std::to_string(memberCount + 1));
        }
        row.complete = row.values.allFinite();
        out.push_back(std::move(row));
    }
    return out;
}

void write_chain_csv(const fs::path& path, const CalibrationChain& chain,
                     const Vector& perStateMeans) {
    if (perStateMeans.size() != chain.nRetained()) {
        throw ArgumentError("write_chain_csv: per-state means must align with the chain");
    }
    std::ofstream out = open_output(path);
    const Eigen::Index r = chain.states.cols() - 2;
    out << "idx,";
    for (Eigen::Index j = 0; j < r; ++j) out << "x" << (j + 1) << ",";
    out << "sigmaEtaSq,zeta,heldOutMean\n";
    for (Eigen::Index i = 0; i < chain.nRetained(); ++i) {
        out << i << ",";
        for (Eigen::Index j = 0; j < chain.states.cols(); ++j) {
            out << format_double(chain.states(i, j)) << ",";
        }
        out << format_double(perStateMeans[i]) << "\n";
    }
}

void Manifest::save(const fs::path& path) const {
    json j;
    j["configHash"] = configHash;
    j["replicateCount"] = replicateCount;
    j["memberCount"] = memberCount;
    j["completed"] = completed;
    j["partial"] = partial;
    j["finished"] = finished;
    std::ofstream out = open_output(path);
    out << j.dump(2) << "\n";
}

Manifest Manifest::load(const fs::path& path) {
    std::ifstream in = open_input(path);
    json j;
    try {
        in >> j;
        Manifest m;
        m.configHash = j.at("configHash").get<std::string>();
        m.replicateCount = j.at("replicateCount").get<int>();
        m.memberCount = j.at("memberCount").get<int>();
        m.completed = j.at("completed").get<std::set<int>>();
        m.partial = j.at("partial").get<std::set<int>>();
        m.finished = j.at("finished").get<bool>();
        return m;
    } catch (const json::exception& e) {
        throw ConfigError("corrupted manifest " + path.string() + ": " + e.what());
    }
}

namespace {

json to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

void save_result_json(const fs::path& path, const PbaRunResult& result,
                      const std::string& configHash) {
    json j;
    j["configHash"] = configHash;
    j["masterSeed"] = result.pba.masterSeed;
    j["eGy"] = result.pba.eGy;
    j["eJ0"] = result.pba.eJ0;
    j["adjustedVariance"] = result.pba.adjustedVariance;
    j["adjustedVarianceJ0"] = result.pba.adjustedVarianceJ0;
    j["coefficients"] = to_json(result.pba.coefficients);
    j["intercept"] = result.pba.intercept;
    j["resolutionLowerBound"] = result.pba.resolutionLowerBound;
    j["observedG"] = to_json(result.pba.observedG);
    j["observedD"] = to_json(result.observedD);
    j["adjustedClassMeans"] = to_json(result.adjustedClassMeans);
    j["replicates"] = {{"complete", result.completeReplicates},
                       {"partial", result.partialReplicates}};
    j["moments"] = {{"eY", result.pba.moments.eY},
                    {"varY", result.pba.moments.varY},
                    {"eG", to_json(result.pba.moments.eG)},
                    {"varG", to_json(result.pba.moments.varG)},
                    {"covYG", to_json(result.pba.moments.covYG)},
                    {"count", result.pba.moments.count},
                    {"seEG", to_json(result.pba.moments.seEG)}};
    json classes = json::array();
    for (const ClassMoments& c : result.classMoments) {
        json cj;
        cj["classId"] = c.classId;
        cj["meanM"] = to_json(c.meanM);
        cj["varM"] = to_json(c.varM);
        cj["varResidual"] = to_json(c.varResidual);
        classes.push_back(cj);
    }
    j["classMoments"] = classes;
    json analyses = json::array();
    for (const AnalysisRecord& rec : result.observedAnalyses) {
        json aj;
        aj["id"] = rec.id;
        aj["classId"] = rec.label.classId;
        aj["memberId"] = rec.label.memberId;
        aj["expectation"] = rec.summary.expectation;
        aj["variance"] = rec.summary.variance;
        aj["mcse"] = rec.summary.mcse;
        aj["acceptanceRate"] = rec.summary.acceptanceRate;
        aj["nRetained"] = rec.summary.nRetained;
        analyses.push_back(aj);
    }
    j["observedAnalyses"] = analyses;
    std::ofstream out = open_output(path);
    out << j.dump(2) << "\n";
}

void save_summary_json(const fs::path& path, const PosteriorSummary& summary,
                       const std::string& configHash, const std::string& analysisId) {
    json j;
    j["configHash"] = configHash;
    j["analysisId"] = analysisId;
    j["expectation"] = summary.expectation;
    j["variance"] = summary.variance;
    j["mcse"] = summary.mcse;
    j["acceptanceRate"] = summary.acceptanceRate;
    j["nRetained"] = summary.nRetained;
    std::ofstream out = open_output(path);
    out << j.dump(2) << "\n";
}

}  // namespace pba

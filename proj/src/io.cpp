#include "kdsm/io.hpp"

#include <json.hpp>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "model files store little-endian doubles; big-endian hosts need swapping");

namespace kdsm {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidSpecError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidSpecError("cannot write file: " + path);
    out << text;
    if (!out) throw InvalidSpecError("write failed: " + path);
}

void write_csv(const std::string& path, const Matrix& X,
               const std::vector<std::string>& columns) {
    if (static_cast<long>(columns.size()) != X.cols())
        throw InvalidSpecError("write_csv: header width does not match data");
    std::ostringstream out;
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << (i ? "," : "") << columns[i];
    out << "\n";
    for (long r = 0; r < X.rows(); ++r) {
        for (long c = 0; c < X.cols(); ++c)
            out << (c ? "," : "") << format_double(X(r, c));
        out << "\n";
    }
    write_file(path, out.str());
}

CsvData read_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw InvalidSpecError("empty CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    CsvData out;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) out.columns.push_back(cell);
    }
    const std::size_t width = out.columns.size();
    std::vector<double> cells;
    long rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::size_t got = 0;
        while (std::getline(ls, cell, ',')) {
            double v;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size())
                throw InvalidSpecError("bad CSV number '" + cell + "' in " + path);
            cells.push_back(v);
            ++got;
        }
        if (got != width)
            throw InvalidSpecError("ragged CSV row in " + path);
        ++rows;
    }
    out.values.resize(rows, static_cast<long>(width));
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < static_cast<long>(width); ++c)
            out.values(r, c) = cells[static_cast<std::size_t>(r) * width + c];
    return out;
}

namespace {

constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

}  // namespace

std::string base64_encode(const double* data, std::size_t count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    std::size_t nbytes = count * sizeof(double);
    std::string out;
    out.reserve((nbytes + 2) / 3 * 4);
    for (std::size_t i = 0; i < nbytes; i += 3) {
        unsigned v = bytes[i] << 16;
        if (i + 1 < nbytes) v |= bytes[i + 1] << 8;
        if (i + 2 < nbytes) v |= bytes[i + 2];
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back(i + 1 < nbytes ? kB64[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < nbytes ? kB64[v & 63] : '=');
    }
    return out;
}

std::vector<double> base64_decode(const std::string& text) {
    std::vector<unsigned char> bytes;
    bytes.reserve(text.size() / 4 * 3);
    unsigned acc = 0;
    int have = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        int v = b64_value(c);
        if (v < 0) throw InvalidSpecError("invalid base64 payload");
        acc = (acc << 6) | static_cast<unsigned>(v);
        have += 6;
        if (have >= 8) {
            have -= 8;
            bytes.push_back(static_cast<unsigned char>((acc >> have) & 0xff));
        }
    }
    if (bytes.size() % sizeof(double) != 0)
        throw InvalidSpecError("base64 payload is not a whole number of doubles");
    std::vector<double> out(bytes.size() / sizeof(double));
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

namespace {

json vector_to_json(const Vector& v) {
    json a = json::array();
    for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vector vector_from_json(const json& a) {
    Vector v(static_cast<long>(a.size()));
    for (long i = 0; i < v.size(); ++i) v[i] = a[static_cast<std::size_t>(i)].get<double>();
    return v;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (long r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
    return rows;
}

Matrix matrix_from_json(const json& rows) {
    const long nr = static_cast<long>(rows.size());
    if (nr == 0) return Matrix();
    const long nc = static_cast<long>(rows[0].size());
    Matrix m(nr, nc);
    for (long r = 0; r < nr; ++r) {
        if (static_cast<long>(rows[static_cast<std::size_t>(r)].size()) != nc)
            throw InvalidSpecError("ragged matrix in model file");
        for (long c = 0; c < nc; ++c)
            m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]
                          .get<double>();
    }
    return m;
}

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::DsmClosedForm: return "dsm";
        case Provenance::SmPlain: return "sm";
        case Provenance::FiniteK: return "finite_k";
        case Provenance::Nystrom: return "nystrom";
        case Provenance::Taylor: return "taylor";
    }
    throw InvalidSpecError("unknown provenance");
}

Provenance provenance_from_name(const std::string& s) {
    if (s == "dsm") return Provenance::DsmClosedForm;
    if (s == "sm") return Provenance::SmPlain;
    if (s == "finite_k") return Provenance::FiniteK;
    if (s == "nystrom") return Provenance::Nystrom;
    if (s == "taylor") return Provenance::Taylor;
    throw InvalidSpecError("unknown provenance tag: " + s);
}

}  // namespace

std::string model_to_json(const DensityModel& model) {
    model.validate();
    json j;
    j["version"] = "kdsm-model/1";
    json kernel;
    kernel["family"] = model.map.spec.family == KernelFamily::Rbf ? "rbf" : "arccos";
    kernel["lengthscales"] = vector_to_json(model.map.spec.lengthscales);
    kernel["arccos_order"] = model.map.spec.arccos_order;
    j["kernel"] = kernel;
    j["M"] = model.map.M;
    j["d"] = model.map.d;
    j["map_seed"] = model.map.seed;
    {
        // W is stored row-major so the layout is independent of Eigen defaults
        std::vector<double> w(static_cast<std::size_t>(model.map.M) * model.map.d);
        for (int r = 0; r < model.map.M; ++r)
            for (int c = 0; c < model.map.d; ++c)
                w[static_cast<std::size_t>(r) * model.map.d + c] = model.map.W(r, c);
        j["W"] = base64_encode(w.data(), w.size());
    }
    j["phases"] = base64_encode(model.map.b.data(), static_cast<std::size_t>(model.map.b.size()));
    j["coefficients"] =
        base64_encode(model.coeffs.b.data(), static_cast<std::size_t>(model.coeffs.b.size()));
    j["provenance"] = provenance_name(model.coeffs.provenance);

    json q0;
    switch (model.q0.kind) {
        case BaseDensityKind::UniformBox:
            q0["kind"] = "uniform";
            q0["lower"] = vector_to_json(model.q0.lower);
            q0["upper"] = vector_to_json(model.q0.upper);
            break;
        case BaseDensityKind::Gaussian:
            q0["kind"] = "gaussian";
            q0["mean"] = vector_to_json(model.q0.mean);
            q0["cov"] = matrix_to_json(model.q0.cov);
            break;
        case BaseDensityKind::Gmm: {
            q0["kind"] = "gmm";
            q0["weights"] = vector_to_json(model.q0.weights);
            json means = json::array(), covs = json::array();
            for (const auto& m : model.q0.means) means.push_back(vector_to_json(m));
            for (const auto& c : model.q0.covs) covs.push_back(matrix_to_json(c));
            q0["means"] = means;
            q0["covs"] = covs;
            break;
        }
    }
    j["q0"] = q0;
    j["log_Z"] = model.log_Z ? json(*model.log_Z) : json(nullptr);
    if (model.standardize_mean.size() > 0) {
        json st;
        st["mean"] = vector_to_json(model.standardize_mean);
        st["scale"] = vector_to_json(model.standardize_scale);
        j["standardization"] = st;
    } else {
        j["standardization"] = nullptr;
    }
    return j.dump(2) + "\n";
}

DensityModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidSpecError(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!j.contains("version") || j["version"] != "kdsm-model/1")
        throw InvalidSpecError("unsupported model file version");

    DensityModel model;
    const json& kernel = j.at("kernel");
    std::string family = kernel.at("family").get<std::string>();
    if (family == "rbf")
        model.map.spec.family = KernelFamily::Rbf;
    else if (family == "arccos")
        model.map.spec.family = KernelFamily::ArcCos;
    else
        throw InvalidSpecError("unknown kernel family: " + family);
    model.map.spec.lengthscales = vector_from_json(kernel.at("lengthscales"));
    model.map.spec.arccos_order = kernel.at("arccos_order").get<int>();

    model.map.M = j.at("M").get<int>();
    model.map.d = j.at("d").get<int>();
    model.map.seed = j.at("map_seed").get<std::uint64_t>();
    {
        std::vector<double> w = base64_decode(j.at("W").get<std::string>());
        if (w.size() != static_cast<std::size_t>(model.map.M) * model.map.d)
            throw InvalidSpecError("W payload size mismatch");
        model.map.W.resize(model.map.M, model.map.d);
        for (int r = 0; r < model.map.M; ++r)
            for (int c = 0; c < model.map.d; ++c)
                model.map.W(r, c) = w[static_cast<std::size_t>(r) * model.map.d + c];
    }
    {
        std::vector<double> ph = base64_decode(j.at("phases").get<std::string>());
        model.map.b.resize(static_cast<long>(ph.size()));
        for (std::size_t i = 0; i < ph.size(); ++i) model.map.b[static_cast<long>(i)] = ph[i];
    }
    {
        std::vector<double> cb = base64_decode(j.at("coefficients").get<std::string>());
        if (cb.size() != static_cast<std::size_t>(model.map.M))
            throw InvalidSpecError("coefficient payload size mismatch");
        model.coeffs.b.resize(model.map.M);
        for (int i = 0; i < model.map.M; ++i) model.coeffs.b[i] = cb[static_cast<std::size_t>(i)];
    }
    model.coeffs.provenance = provenance_from_name(j.at("provenance").get<std::string>());

    const json& q0 = j.at("q0");
    std::string kind = q0.at("kind").get<std::string>();
    if (kind == "uniform") {
        model.q0.kind = BaseDensityKind::UniformBox;
        model.q0.lower = vector_from_json(q0.at("lower"));
        model.q0.upper = vector_from_json(q0.at("upper"));
    } else if (kind == "gaussian") {
        model.q0.kind = BaseDensityKind::Gaussian;
        model.q0.mean = vector_from_json(q0.at("mean"));
        model.q0.cov = matrix_from_json(q0.at("cov"));
    } else if (kind == "gmm") {
        model.q0.kind = BaseDensityKind::Gmm;
        model.q0.weights = vector_from_json(q0.at("weights"));
        for (const auto& m : q0.at("means")) model.q0.means.push_back(vector_from_json(m));
        for (const auto& c : q0.at("covs")) model.q0.covs.push_back(matrix_from_json(c));
    } else {
        throw InvalidSpecError("unknown q0 kind: " + kind);
    }

    if (j.contains("log_Z") && !j["log_Z"].is_null())
        model.log_Z = j["log_Z"].get<double>();
    if (j.contains("standardization") && !j["standardization"].is_null()) {
        model.standardize_mean = vector_from_json(j["standardization"].at("mean"));
        model.standardize_scale = vector_from_json(j["standardization"].at("scale"));
    }
    model.validate();
    return model;
}

void save_model(const std::string& path, const DensityModel& model) {
    write_file(path, model_to_json(model));
}

DensityModel load_model(const std::string& path) { return model_from_json(read_file(path)); }

}  // namespace kdsm

#include "wgt/family_io.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace wgt {

namespace {

Complex parse_complex(const nlohmann::json& j, const std::string& where) {
    if (j.is_number()) return Complex(j.get<double>(), 0.0);
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(where + ": expected a number or an [re, im] pair");
    return Complex(j[0].get<double>(), j[1].get<double>());
}

const nlohmann::json& field(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
    return *it;
}

std::vector<ComplexMatrix> parse_matrix_list(const nlohmann::json& j, Index n,
                                             const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected a list of matrices");
    std::vector<ComplexMatrix> out;
    for (size_t k = 0; k < j.size(); ++k)
        out.push_back(parse_matrix(j[k], n, n, where + "/" + std::to_string(k)));
    return out;
}

MatrixFunction polynomial(std::vector<ComplexMatrix> coeffs, Index n) {
    return [coeffs = std::move(coeffs), n](Complex z) {
        ComplexMatrix acc = ComplexMatrix::Zero(n, n);
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
        return acc;
    };
}

FamilySpec parse_family(const nlohmann::json& j, const std::string& where) {
    FamilySpec spec;
    spec.name = j.value("name", where);
    const nlohmann::json& dj = field(j, "dim", where);
    if (!dj.is_number_integer() || dj.get<long>() < 1) throw ParseError(where + "/dim: positive integer expected");
    const Index n = dj.get<Index>();
    spec.family.base = parse_matrix(field(j, "base", where), n, n, where + "/base");
    const nlohmann::json& rj = field(j, "remainder", where);
    const std::string rw = where + "/remainder";
    const nlohmann::json& kj = field(rj, "kind", rw);
    const std::string kind = kj.is_string() ? kj.get<std::string>() : "";
    std::vector<ComplexMatrix> coeffs;
    if (rj.contains("coefficients")) coeffs = parse_matrix_list(rj["coefficients"], n, rw + "/coefficients");
    if (kind == "polynomial") {
        if (coeffs.empty()) throw ParseError(rw + "/coefficients: at least one matrix required");
        std::vector<ComplexMatrix> dcoeffs;
        for (size_t k = 1; k < coeffs.size(); ++k) dcoeffs.push_back(double(k) * coeffs[k]);
        spec.family.remainder = polynomial(coeffs, n);
        std::vector<ComplexMatrix> shifted(coeffs.begin() + 1, coeffs.end());
        if (!shifted.empty()) {
            auto tail = polynomial(shifted, n);
            spec.family.remainder_delta = [tail](Complex z) { return ComplexMatrix(z * tail(z)); };
        } else {
            spec.family.remainder_delta = [n](Complex) { return ComplexMatrix::Zero(n, n); };
        }
        spec.family.remainder_derivative =
            dcoeffs.empty() ? ComplexMatrix::Zero(n, n) : dcoeffs.front();
    } else if (kind == "rational") {
        const nlohmann::json& pj = field(rj, "poles", rw);
        if (!pj.is_array()) throw ParseError(rw + "/poles: expected a list");
        std::vector<Complex> poles;
        for (size_t k = 0; k < pj.size(); ++k) {
            poles.push_back(parse_complex(pj[k], rw + "/poles/" + std::to_string(k)));
            if (poles.back() == Complex(0.0)) throw ParseError(rw + "/poles/" + std::to_string(k) + ": pole at 0");
        }
        auto residues = parse_matrix_list(field(rj, "residues", rw), n, rw + "/residues");
        if (residues.size() != poles.size()) throw ParseError(rw + ": poles and residues differ in length");
        auto poly = coeffs.empty() ? MatrixFunction([n](Complex) { return ComplexMatrix(ComplexMatrix::Zero(n, n)); })
                                   : polynomial(coeffs, n);
        spec.family.remainder = [poly, poles, residues](Complex z) {
            ComplexMatrix acc = poly(z);
            for (size_t m = 0; m < poles.size(); ++m) acc += residues[m] / (z - poles[m]);
            return acc;
        };
    } else {
        throw ParseError(rw + "/kind: expected \"polynomial\" or \"rational\"");
    }
    spec.family.scale = j.value("scale", 1.0);
    if (j.contains("domain_radius")) spec.family.domain_radius = j["domain_radius"].get<double>();
    const auto pr = j.value("projection", nlohmann::json("kernel"));
    if (pr.is_string() && pr.get<std::string>() == "kernel") {
        spec.projection = kernel_projector(spec.family.base);
    } else if (pr.is_string() && pr.get<std::string>() == "none") {
        spec.projection = Projection::zero(n);
    } else if (pr.is_array()) {
        const ComplexMatrix p = parse_matrix(pr, n, n, where + "/projection");
        spec.projection = orthogonal_projection_onto(p);
        if ((spec.projection.matrix - p).norm() > 1e-10 * std::max(1.0, p.norm()))
            throw ParseError(where + "/projection: not an orthogonal projection");
    } else {
        throw ParseError(where + "/projection: expected \"kernel\", \"none\" or a matrix");
    }
    const nlohmann::json& pts = field(j, "points", where);
    if (!pts.is_array() || pts.empty()) throw ParseError(where + "/points: nonempty list expected");
    for (size_t k = 0; k < pts.size(); ++k)
        spec.points.push_back(parse_complex(pts[k], where + "/points/" + std::to_string(k)));
    return spec;
}

} // namespace

ComplexMatrix parse_matrix(const nlohmann::json& j, Index rows, Index cols, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected a list of [re, im] pairs");
    if (Index(j.size()) != rows * cols)
        throw ParseError(where + ": expected " + std::to_string(rows * cols) + " entries, found " +
                         std::to_string(j.size()));
    ComplexMatrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            m(r, c) = parse_complex(j[size_t(r * cols + c)], where + "/" + std::to_string(r * cols + c));
    return m;
}

nlohmann::json matrix_to_json(const ComplexMatrix& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) out.push_back({m(r, c).real(), m(r, c).imag()});
    return out;
}

std::vector<FamilySpec> parse_family_json(const nlohmann::json& doc, std::uint64_t seed) {
    if (!doc.is_object()) throw ParseError("/: expected an object");
    const nlohmann::json& v = field(doc, "schema_version", "");
    if (!v.is_number_integer() || v.get<int>() != 1)
        throw ParseError("/schema_version: unsupported (expected 1)");
    std::vector<FamilySpec> out;
    if (doc.contains("families")) {
        const auto& fams = doc["families"];
        if (!fams.is_array()) throw ParseError("/families: expected a list");
        for (size_t k = 0; k < fams.size(); ++k)
            out.push_back(parse_family(fams[k], "/families/" + std::to_string(k)));
    }
    if (doc.contains("random_corpus")) {
        const auto& rc = doc["random_corpus"];
        auto more = random_family_corpus(rc.value("count", 50), seed, rc.value("max_dim", 12),
                                         rc.value("max_kernel", 3), rc.value("z_min", 1e-6),
                                         rc.value("z_max", 1e-2), rc.value("points_per_family", 1));
        for (auto& f : more) out.push_back(std::move(f));
    }
    if (out.empty()) throw ParseError("/: no families given");
    return out;
}

std::vector<FamilySpec> load_family_file(const std::filesystem::path& path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return parse_family_json(doc, seed);
}

std::vector<FamilySpec> random_family_corpus(int count, std::uint64_t seed, int max_dim,
                                             int max_kernel, double z_min, double z_max,
                                             int points_per_family) {
    if (count < 1 || max_dim < 2 || max_kernel < 0 || !(z_min > 0) || !(z_max >= z_min) ||
        points_per_family < 1)
        throw DomainError("random_family_corpus: invalid parameters");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    auto rand = [&](Index r, Index c) {
        ComplexMatrix a(r, c);
        for (Index i = 0; i < r; ++i)
            for (Index k = 0; k < c; ++k) a(i, k) = Complex(nd(rng), nd(rng));
        return a;
    };
    auto unitary = [&](Index m) {
        Eigen::HouseholderQR<ComplexMatrix> qr(rand(m, m));
        return ComplexMatrix(qr.householderQ() * ComplexMatrix::Identity(m, m));
    };
    // singular values in [1, 2]
    std::uniform_real_distribution<double> sv(1.0, 2.0);
    auto conditioned = [&](Index m) {
        RealVector s(m);
        for (Index i = 0; i < m; ++i) s(i) = sv(rng);
        return ComplexMatrix(unitary(m) * s.cast<Complex>().asDiagonal() * unitary(m));
    };
    std::uniform_int_distribution<int> dim(2, max_dim);
    std::uniform_real_distribution<double> lz(std::log(z_min), std::log(z_max));
    std::uniform_real_distribution<double> ph(0.0, 2.0 * 3.14159265358979323846);
    std::vector<FamilySpec> out;
    for (int t = 0; t < count; ++t) {
        const Index n = dim(rng);
        const Index k = std::uniform_int_distribution<Index>(0, std::min<Index>(max_kernel, n - 1))(rng);
        const ComplexMatrix u = unitary(n);
        const ComplexMatrix comp = u.rightCols(n - k), kern = u.leftCols(k);
        FamilySpec spec;
        spec.name = "random_" + std::to_string(t);
        spec.family.base = 3.0 * comp * conditioned(n - k) * comp.adjoint();
        const ComplexMatrix c0 = kern * conditioned(k) * kern.adjoint() + 0.05 * rand(n, n);
        const ComplexMatrix c1 = 0.3 * rand(n, n);
        spec.family.remainder = [c0, c1](Complex z) { return ComplexMatrix(c0 + z * c1); };
        spec.family.remainder_delta = [c1](Complex z) { return ComplexMatrix(z * c1); };
        spec.family.remainder_derivative = c1;
        spec.projection = kernel_projector(spec.family.base);
        for (int p = 0; p < points_per_family; ++p) spec.points.push_back(std::polar(std::exp(lz(rng)), ph(rng)));
        out.push_back(std::move(spec));
    }
    return out;
}

} // namespace wgt

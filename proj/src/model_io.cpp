#include "wgt/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "wgt/errors.hpp"

namespace wgt {

namespace {

const nlohmann::json& field(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
    return *it;
}

double number(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number()) throw ParseError(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError(where + ": non-finite value");
    return v;
}

int count(const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto& j = field(obj, key, where);
    if (!j.is_number_integer() || j.get<long>() < 1)
        throw ParseError(where + "/" + key + ": positive integer expected");
    return j.get<int>();
}

std::vector<double> length_list(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected a list");
    std::vector<double> out;
    for (size_t k = 0; k < j.size(); ++k)
        out.push_back(parse_length(j[k], where + "/" + std::to_string(k)));
    return out;
}

std::array<double, 2> pair(const nlohmann::json& j, const std::string& where) {
    const auto v = length_list(j, where);
    if (v.empty() || v.size() > 2) throw ParseError(where + ": one or two entries expected");
    return {v[0], v.size() > 1 ? v[1] : 0.0};
}

} // namespace

double parse_length(const nlohmann::json& j, const std::string& where) {
    if (j.is_number()) return number(j, where);
    if (!j.is_string()) throw ParseError(where + ": expected a number or a multiple of pi");
    std::string s = j.get<std::string>();
    s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
    const auto p = s.find("pi");
    if (p == std::string::npos) throw ParseError(where + ": cannot read '" + s + "'");
    double num = 1.0, den = 1.0;
    try {
        const std::string pre = s.substr(0, p), post = s.substr(p + 2);
        if (!pre.empty()) {
            if (pre.back() != '*') throw ParseError("");
            size_t used = 0;
            num = std::stod(pre.substr(0, pre.size() - 1), &used);
            if (used != pre.size() - 1) throw ParseError("");
        }
        if (!post.empty()) {
            if (post.front() != '/') throw ParseError("");
            size_t used = 0;
            den = std::stod(post.substr(1), &used);
            if (used != post.size() - 1 || den == 0.0) throw ParseError("");
        }
    } catch (const std::exception&) {
        throw ParseError(where + ": cannot read '" + s + "'");
    }
    return num * std::numbers::pi / den;
}

ModelConfig parse_model_json(const nlohmann::json& doc) {
    const std::string root = "$";
    const auto& ver = field(doc, "schema_version", root);
    if (!ver.is_number_integer() || ver.get<int>() != 1)
        throw ParseError(root + "/schema_version: only version 1 is supported");

    const std::string cw = root + "/cross_section";
    const auto& cj = field(doc, "cross_section", root);
    const auto& kj = field(cj, "kind", cw);
    const std::string ck = kj.is_string() ? kj.get<std::string>() : "";
    CrossSection cs;
    if (ck == "interval") cs = CrossSection::interval(parse_length(field(cj, "length", cw), cw + "/length"));
    else if (ck == "rectangle") {
        const auto l = length_list(field(cj, "lengths", cw), cw + "/lengths");
        if (l.size() != 2) throw ParseError(cw + "/lengths: two entries expected");
        cs = CrossSection::rectangle(l[0], l[1]);
    } else throw ParseError(cw + "/kind: 'interval' or 'rectangle' expected");

    const std::string pw = root + "/potential";
    const auto& pj = field(doc, "potential", root);
    const auto& pk = field(pj, "kind", pw);
    const std::string kind = pk.is_string() ? pk.get<std::string>() : "";
    Potential pot;
    if (kind == "square_well") {
        pot = Potential::square_well(number(field(pj, "depth", pw), pw + "/depth"),
                                     pair(field(pj, "omega_lo", pw), pw + "/omega_lo"),
                                     pair(field(pj, "omega_hi", pw), pw + "/omega_hi"),
                                     parse_length(field(pj, "x_lo", pw), pw + "/x_lo"),
                                     parse_length(field(pj, "x_hi", pw), pw + "/x_hi"));
    } else if (kind == "table") {
        const auto oe = length_list(field(pj, "omega_edges", pw), pw + "/omega_edges");
        const auto xe = length_list(field(pj, "x_edges", pw), pw + "/x_edges");
        const auto& vj = field(pj, "values", pw);
        if (!vj.is_array()) throw ParseError(pw + "/values: expected rows");
        std::vector<std::vector<double>> vals;
        for (size_t i = 0; i < vj.size(); ++i) {
            const std::string rw = pw + "/values/" + std::to_string(i);
            if (!vj[i].is_array()) throw ParseError(rw + ": expected a row");
            std::vector<double> row;
            for (size_t k = 0; k < vj[i].size(); ++k)
                row.push_back(number(vj[i][k], rw + "/" + std::to_string(k)));
            vals.push_back(std::move(row));
        }
        if (cs.kind != CrossSection::Kind::Interval)
            throw ParseError(pw + ": table potentials need an interval cross-section");
        try {
            pot = Potential::table(oe, xe, vals);
        } catch (const Error& e) {
            throw ParseError(pw + ": " + e.what());
        }
    } else if (kind == "zero") {
        pot = Potential::zero(cs, parse_length(field(pj, "x_lo", pw), pw + "/x_lo"),
                              parse_length(field(pj, "x_hi", pw), pw + "/x_hi"));
    } else {
        throw ParseError(pw + "/kind: 'square_well', 'table' or 'zero' expected");
    }

    const std::string gw = root + "/grid";
    const auto& gj = field(doc, "grid", root);
    const int n_omega = count(gj, "n_omega", gw);
    const int n_x = count(gj, "n_x", gw);
    TransverseRule rule = TransverseRule::Auto;
    if (gj.contains("rule")) {
        const std::string r = gj["rule"].is_string() ? gj["rule"].get<std::string>() : "";
        if (r == "gauss") rule = TransverseRule::GaussLegendre;
        else if (r == "uniform") rule = TransverseRule::Uniform;
        else if (r != "auto") throw ParseError(gw + "/rule: 'auto', 'gauss' or 'uniform' expected");
    }

    ModelConfig cfg;
    cfg.source = doc;
    try {
        cfg.model = make_model(cs, pot, n_omega, n_x, rule);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(root + ": " + e.what());
    }
    if (doc.contains("n_max")) {
        const auto& nj = doc["n_max"];
        if (!nj.is_number_integer() || nj.get<long>() < 0)
            throw ParseError(root + "/n_max: nonnegative integer expected");
        cfg.n_max = nj.get<int>();
    }
    if (doc.contains("tail_tol")) {
        cfg.tail_tol = number(doc["tail_tol"], root + "/tail_tol");
        if (!(cfg.tail_tol > 0.0)) throw ParseError(root + "/tail_tol: must be positive");
    }
    cfg.model.tail_tol = cfg.tail_tol;
    if (doc.contains("degeneracy_tol"))
        cfg.model.degeneracy_tol = number(doc["degeneracy_tol"], root + "/degeneracy_tol");
    return cfg;
}

ModelConfig load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return parse_model_json(doc);
}

} // namespace wgt

#include "wgt/artifacts.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wgt/errors.hpp"

namespace wgt {

namespace fs = std::filesystem;

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::string hex(const unsigned char* d, unsigned n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < n; ++i) {
        out += digits[d[i] >> 4];
        out += digits[d[i] & 15];
    }
    return out;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string sha256_bytes(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest failed");
    return hex(md, len);
}

std::string sha256_file(const fs::path& path) { return sha256_bytes(read_all(path)); }

ArtifactSet::ArtifactSet(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void ArtifactSet::write_text(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + p.string());
        out << content;
        if (!out) throw Error("write failed for " + p.string());
    }
    for (auto& r : records_)
        if (r.name == name) {
            r = {name, sha256_bytes(content), content.size()};
            return;
        }
    records_.push_back({name, sha256_bytes(content), content.size()});
}

void ArtifactSet::write_json(const std::string& name, const nlohmann::json& doc) {
    write_text(name, doc.dump(2) + "\n");
}

void ArtifactSet::write_csv(const std::string& name, const CsvRow& header,
                            const std::vector<CsvRow>& rows) {
    std::string out;
    auto line = [&](const CsvRow& r) {
        for (size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            out += csv_field(r[i]);
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) {
        if (r.size() != header.size())
            throw DimensionError("csv " + name + ": row width differs from header");
        line(r);
    }
    write_text(name, out);
}

void ArtifactSet::discard() {
    for (const auto& r : records_) {
        std::error_code ec;
        fs::remove(dir_ / r.name, ec);
    }
    std::error_code ec;
    fs::remove(dir_ / "manifest.json", ec);
    records_.clear();
}

void ArtifactSet::write_manifest(nlohmann::json manifest) {
    auto list = nlohmann::json::array();
    for (const auto& r : records_)
        list.push_back({{"name", r.name}, {"sha256", r.sha256}, {"bytes", r.bytes}});
    manifest["artifacts"] = list;
    const fs::path p = dir_ / "manifest.json";
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    out << manifest.dump(2) << "\n";
}

void TaskTimer::start(const std::string& name) {
    current_ = name;
    t0_ = std::chrono::steady_clock::now();
}

void TaskTimer::stop() {
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    done_.emplace_back(current_, s);
}

nlohmann::json TaskTimer::to_json() const {
    auto out = nlohmann::json::array();
    for (const auto& [name, s] : done_) out.push_back({{"task", name}, {"seconds", s}});
    return out;
}

} // namespace wgt

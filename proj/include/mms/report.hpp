#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mms/common.hpp"

namespace mms {

namespace detail {

// FIPS 180-4 SHA-256, enough for config provenance hashing.
class Sha256 {
public:
    Sha256() { reset(); }

    void update(const unsigned char* data, std::size_t len) {
        total_ += len;
        while (len > 0) {
            const std::size_t take = std::min<std::size_t>(64 - fill_, len);
            std::memcpy(buf_.data() + fill_, data, take);
            fill_ += take;
            data += take;
            len -= take;
            if (fill_ == 64) {
                process(buf_.data());
                fill_ = 0;
            }
        }
    }

    std::string hex_digest() {
        const std::uint64_t bits = total_ * 8;
        unsigned char pad = 0x80;
        update(&pad, 1);
        const unsigned char zero = 0;
        while (fill_ != 56) update(&zero, 1);
        unsigned char len_be[8];
        for (int i = 0; i < 8; ++i) len_be[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        update(len_be, 8);
        char out[65];
        for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h_[i]);
        return std::string(out, 64);
    }

private:
    void reset() {
        h_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
              0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
        fill_ = 0;
        total_ = 0;
    }

    static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void process(const unsigned char* p) {
        static constexpr std::uint32_t k[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
            0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
            0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
            0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
            0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
            0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
            0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
            0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
            0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3];
        std::uint32_t e = h_[4], f = h_[5], g = h_[6], h = h_[7];
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = h + s1 + ch + k[i] + w[i];
            const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = s0 + maj;
            h = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h_[0] += a;
        h_[1] += b;
        h_[2] += c;
        h_[3] += d;
        h_[4] += e;
        h_[5] += f;
        h_[6] += g;
        h_[7] += h;
    }

    std::array<std::uint32_t, 8> h_{};
    std::array<unsigned char, 64> buf_{};
    std::size_t fill_ = 0;
    std::uint64_t total_ = 0;
};

}  // namespace detail

inline std::string sha256_hex(std::string_view data) {
    detail::Sha256 h;
    h.update(reinterpret_cast<const unsigned char*>(data.data()), data.size());
    return h.hex_digest();
}

// Long-format numeric table; one CSV file per table.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row) { rows.push_back(std::move(row)); }
};

// Named scalar results plus sweep tables, with a provenance block. Keys are
// emitted sorted, so serialization is byte-stable.
class ExperimentReport {
public:
    explicit ExperimentReport(std::string subcommand) : subcommand_(std::move(subcommand)) {}

    void set_scalar(const std::string& name, double v) { scalars_[name] = v; }
    void set_flag(const std::string& name, bool v) { flags_[name] = v; }
    void set_table(const std::string& name, Table t) { tables_[name] = std::move(t); }
    void set_field(const std::string& name, const std::vector<double>& values) {
        fields_[name] = values;
    }
    void set_attachment(const std::string& name, nlohmann::json j) {
        attachments_[name] = std::move(j);
    }

    void set_provenance(std::string config_hash, bool has_seed, std::uint64_t seed, int threads,
                        double wall_ms) {
        config_hash_ = std::move(config_hash);
        has_seed_ = has_seed;
        seed_ = seed;
        threads_ = threads;
        wall_ms_ = wall_ms;
    }

    const std::map<std::string, double>& scalars() const { return scalars_; }
    const std::map<std::string, bool>& flags() const { return flags_; }
    const std::map<std::string, Table>& tables() const { return tables_; }

    // Any non-finite scalar or cell is a numerical failure; callers abort
    // instead of writing NaNs.
    void check_finite() const {
        for (const auto& [name, v] : scalars_)
            if (!std::isfinite(v))
                throw NumericalError("non-finite result in " + subcommand_ + ": " + name);
        for (const auto& [name, t] : tables_)
            for (const auto& row : t.rows)
                for (double v : row)
                    if (!std::isfinite(v))
                        throw NumericalError("non-finite table entry in " + subcommand_ + ": " + name);
        for (const auto& [name, f] : fields_)
            for (double v : f)
                if (!std::isfinite(v))
                    throw NumericalError("non-finite field entry in " + subcommand_ + ": " + name);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["subcommand"] = subcommand_;
        j["scalars"] = nlohmann::json::object();
        for (const auto& [k, v] : scalars_) j["scalars"][k] = v;
        j["flags"] = nlohmann::json::object();
        for (const auto& [k, v] : flags_) j["flags"][k] = v;
        j["tables"] = nlohmann::json::object();
        for (const auto& [k, t] : tables_) {
            nlohmann::json jt;
            jt["columns"] = t.columns;
            jt["rows"] = t.rows;
            j["tables"][k] = std::move(jt);
        }
        j["fields"] = nlohmann::json::object();
        for (const auto& [k, f] : fields_) j["fields"][k] = f;
        j["attachments"] = nlohmann::json::object();
        for (const auto& [k, a] : attachments_) j["attachments"][k] = a;
        nlohmann::json prov;
        prov["config_sha256"] = config_hash_;
        prov["version"] = kVersion;
        if (has_seed_) prov["seed"] = seed_;
        prov["threads"] = threads_;
        prov["wall_clock_ms"] = wall_ms_;
        j["provenance"] = std::move(prov);
        return j;
    }

    // RFC 4180: header row, quoting only where needed.
    static std::string csv_escape(const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        out += '"';
        return out;
    }

    static std::string csv_of(const Table& t) {
        std::string out;
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            if (c) out += ',';
            out += csv_escape(t.columns[c]);
        }
        out += "\r\n";
        char buf[40];
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out += ',';
                std::snprintf(buf, sizeof buf, "%.17g", row[c]);
                out += buf;
            }
            out += "\r\n";
        }
        return out;
    }

private:
    std::string subcommand_;
    std::map<std::string, double> scalars_;
    std::map<std::string, bool> flags_;
    std::map<std::string, Table> tables_;
    std::map<std::string, std::vector<double>> fields_;
    std::map<std::string, nlohmann::json> attachments_;
    std::string config_hash_;
    bool has_seed_ = false;
    std::uint64_t seed_ = 0;
    int threads_ = 1;
    double wall_ms_ = 0.0;
};

}  // namespace mms

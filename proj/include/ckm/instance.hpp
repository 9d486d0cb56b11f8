#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ckm/constants.hpp"
#include "ckm/errors.hpp"

namespace ckm {

// Canonical real formatting: 12 significant digits everywhere we serialize.
inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

// A capacitated k-median instance over points F (facilities, listed first)
// and C (clients). The distance matrix spans all nF+nC points.
struct Instance {
    int num_facilities = 0;
    int num_clients = 0;
    int k = 0;
    std::vector<int> capacities;   // per facility, >= 1
    std::vector<double> dist;      // row-major (nF+nC)^2

    int total_points() const { return num_facilities + num_clients; }
    double d(int a, int b) const { return dist[static_cast<size_t>(a) * total_points() + b]; }
    double d_ff(int i, int i2) const { return d(i, i2); }
    double d_fc(int i, int j) const { return d(i, num_facilities + j); }
    double d_cc(int j, int j2) const { return d(num_facilities + j, num_facilities + j2); }
};

struct TriangleViolation {
    int a = 0;       // endpoint
    int c = 0;       // endpoint
    int via = 0;     // intermediate point
    double slack = 0;  // d(a,c) - d(a,via) - d(via,c), positive when violated
};

struct MetricReport {
    bool nonneg_ok = true;
    bool diag_ok = true;
    bool symmetry_ok = true;
    std::vector<std::array<int, 2>> symmetry_violations;
    std::vector<TriangleViolation> triangle_violations;
    bool ok() const {
        return nonneg_ok && diag_ok && symmetry_ok && triangle_violations.empty();
    }
};

// Checks nonnegativity, zero diagonal, symmetry, and all ordered triangle
// inequalities within tol::cert. Violation lists are capped to keep reports
// readable; the booleans still reflect the full scan.
inline MetricReport validate_metric(const Instance& inst) {
    constexpr size_t kMaxListed = 32;
    MetricReport rep;
    const int n = inst.total_points();
    for (int a = 0; a < n; ++a) {
        if (inst.d(a, a) > tol::cert || inst.d(a, a) < -tol::cert) rep.diag_ok = false;
        for (int b = 0; b < n; ++b) {
            if (inst.d(a, b) < -tol::cert) rep.nonneg_ok = false;
            if (b > a && std::abs(inst.d(a, b) - inst.d(b, a)) > tol::cert) {
                rep.symmetry_ok = false;
                if (rep.symmetry_violations.size() < kMaxListed)
                    rep.symmetry_violations.push_back({a, b});
            }
        }
    }
    for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
            if (a == c) continue;
            for (int b = 0; b < n; ++b) {
                if (b == a || b == c) continue;
                double slack = inst.d(a, c) - inst.d(a, b) - inst.d(b, c);
                if (slack > tol::cert && rep.triangle_violations.size() < kMaxListed)
                    rep.triangle_violations.push_back({a, c, b, slack});
            }
        }
    return rep;
}

// Structural validation shared by readers and generators.
inline void validate_instance(const Instance& inst) {
    require_input(inst.num_facilities >= 1, "instance needs at least one facility");
    require_input(inst.num_clients >= 1, "instance needs at least one client");
    require_input(inst.k >= 1, "instance needs k >= 1");
    require_input(static_cast<int>(inst.capacities.size()) == inst.num_facilities,
                  "capacity list length must equal the facility count");
    long long total_cap = 0;
    for (int u : inst.capacities) {
        require_input(u >= 1, "capacities must be positive integers");
        total_cap += u;
    }
    require_input(static_cast<long long>(inst.k) * total_cap >= inst.num_clients,
                  "k copies of every facility cannot cover all clients");
    require_input(inst.dist.size() ==
                      static_cast<size_t>(inst.total_points()) * inst.total_points(),
                  "distance matrix size mismatch");
}

// Integrality-gap family: u groups, each with two facilities of capacity u
// and u+1 co-located clients; distinct groups sit at mutual distance L and
// k = u+1. The fractional optimum is 0 while any solution opening at most
// k facility copies pays at least L.
inline Instance gen_gap_instance(int u, double L) {
    require_input(u >= 2, "gap construction needs u >= 2");
    require_input(L > 0.0, "gap construction needs L > 0");
    Instance inst;
    inst.num_facilities = 2 * u;
    inst.num_clients = u * (u + 1);
    inst.k = u + 1;
    inst.capacities.assign(inst.num_facilities, u);
    const int n = inst.total_points();
    inst.dist.assign(static_cast<size_t>(n) * n, 0.0);
    auto group_of = [&](int p) {
        return p < inst.num_facilities ? p / 2 : (p - inst.num_facilities) / (u + 1);
    };
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (group_of(a) != group_of(b)) inst.dist[static_cast<size_t>(a) * n + b] = L;
    validate_instance(inst);
    return inst;
}

struct RandomSpec {
    int num_facilities = 5;
    int num_clients = 8;
    int k = 3;
    int cap_lo = 1;
    int cap_hi = 6;
    std::uint64_t seed = 1;
    enum class Geometry { Euclidean, Clustered };
    Geometry geometry = Geometry::Euclidean;
};

// Random planar instance. Capacities are resampled until the k largest sum
// to at least nC, so the relaxation (and the exact solver) stay feasible.
inline Instance gen_random(const RandomSpec& spec) {
    require_input(spec.num_facilities >= 1 && spec.num_clients >= 1 && spec.k >= 1,
                  "instance dimensions must be positive");
    require_input(spec.cap_lo >= 1 && spec.cap_lo <= spec.cap_hi, "bad capacity range");
    require_input(static_cast<long long>(spec.k) * spec.cap_hi >= spec.num_clients,
                  "k facilities of maximal capacity cannot cover all clients");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int n = spec.num_facilities + spec.num_clients;
    std::vector<std::array<double, 2>> pts(n);
    if (spec.geometry == RandomSpec::Geometry::Euclidean) {
        for (auto& p : pts) p = {unit(rng), unit(rng)};
    } else {
        int centers = (spec.num_facilities + 2) / 3;
        std::vector<std::array<double, 2>> ctr(centers);
        for (auto& c : ctr) c = {unit(rng), unit(rng)};
        std::uniform_int_distribution<int> pick(0, centers - 1);
        std::normal_distribution<double> spread(0.0, 0.05);
        for (auto& p : pts) {
            const auto& c = ctr[pick(rng)];
            p = {c[0] + spread(rng), c[1] + spread(rng)};
        }
    }

    Instance inst;
    inst.num_facilities = spec.num_facilities;
    inst.num_clients = spec.num_clients;
    inst.k = spec.k;
    std::uniform_int_distribution<int> cap(spec.cap_lo, spec.cap_hi);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        inst.capacities.clear();
        for (int i = 0; i < spec.num_facilities; ++i) inst.capacities.push_back(cap(rng));
        std::vector<int> sorted = inst.capacities;
        std::sort(sorted.rbegin(), sorted.rend());
        long long top = 0;
        for (int i = 0; i < std::min(spec.k, spec.num_facilities); ++i) top += sorted[i];
        if (top >= spec.num_clients) break;
        inst.capacities.clear();
    }
    require_input(!inst.capacities.empty(), "could not sample feasible capacities");

    inst.dist.assign(static_cast<size_t>(n) * n, 0.0);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            double dx = pts[a][0] - pts[b][0], dy = pts[a][1] - pts[b][1];
            double v = std::sqrt(dx * dx + dy * dy);
            inst.dist[static_cast<size_t>(a) * n + b] = v;
            inst.dist[static_cast<size_t>(b) * n + a] = v;
        }
    validate_instance(inst);
    return inst;
}

// ---- text format ----------------------------------------------------------
// line 1: "ckm v1"
// line 2: nF nC k
// line 3: nF capacities
// then (nF+nC) rows of the distance matrix, facilities first.

inline std::string write_instance(const Instance& inst) {
    std::ostringstream out;
    out << "ckm v1\n";
    out << inst.num_facilities << ' ' << inst.num_clients << ' ' << inst.k << '\n';
    for (int i = 0; i < inst.num_facilities; ++i)
        out << inst.capacities[i] << (i + 1 == inst.num_facilities ? "\n" : " ");
    const int n = inst.total_points();
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b)
            out << format_real(inst.d(a, b)) << (b + 1 == n ? "\n" : " ");
    }
    return out.str();
}

namespace detail {
inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) toks.push_back(t);
    return toks;
}

inline long long parse_int(const std::string& tok, int line_no) {
    size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(tok, &pos);
    } catch (...) {
        throw input_error("line " + std::to_string(line_no) + ": expected integer, got '" + tok + "'");
    }
    if (pos != tok.size())
        throw input_error("line " + std::to_string(line_no) + ": expected integer, got '" + tok + "'");
    return v;
}

inline double parse_real(const std::string& tok, int line_no) {
    size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(tok, &pos);
    } catch (...) {
        throw input_error("line " + std::to_string(line_no) + ": expected number, got '" + tok + "'");
    }
    if (pos != tok.size() || !std::isfinite(v))
        throw input_error("line " + std::to_string(line_no) + ": expected number, got '" + tok + "'");
    return v;
}
}  // namespace detail

inline Instance read_instance(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    while (!lines.empty() && detail::split_ws(lines.back()).empty()) lines.pop_back();

    if (lines.empty() || lines[0] != "ckm v1")
        throw input_error("line 1: unsupported format version (expected 'ckm v1')");
    if (lines.size() < 3) throw input_error("line 2: truncated file");

    auto dims = detail::split_ws(lines[1]);
    if (dims.size() != 3) throw input_error("line 2: expected 'nF nC k'");
    Instance inst;
    inst.num_facilities = static_cast<int>(detail::parse_int(dims[0], 2));
    inst.num_clients = static_cast<int>(detail::parse_int(dims[1], 2));
    inst.k = static_cast<int>(detail::parse_int(dims[2], 2));
    if (inst.num_facilities < 1 || inst.num_clients < 1 || inst.k < 1)
        throw input_error("line 2: dimensions must be positive");

    auto caps = detail::split_ws(lines[2]);
    if (static_cast<int>(caps.size()) != inst.num_facilities)
        throw input_error("line 3: expected " + std::to_string(inst.num_facilities) +
                          " capacities, got " + std::to_string(caps.size()));
    for (const auto& t : caps) {
        long long u = detail::parse_int(t, 3);
        if (u < 1) throw input_error("line 3: capacities must be positive");
        inst.capacities.push_back(static_cast<int>(u));
    }

    const int n = inst.total_points();
    if (static_cast<int>(lines.size()) != 3 + n)
        throw input_error("line " + std::to_string(lines.size()) + ": expected " +
                          std::to_string(3 + n) + " lines total, got " +
                          std::to_string(lines.size()));
    inst.dist.assign(static_cast<size_t>(n) * n, 0.0);
    for (int a = 0; a < n; ++a) {
        int line_no = 4 + a;
        auto row = detail::split_ws(lines[3 + a]);
        if (static_cast<int>(row.size()) != n)
            throw input_error("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(n) + " entries, got " + std::to_string(row.size()));
        for (int b = 0; b < n; ++b)
            inst.dist[static_cast<size_t>(a) * n + b] = detail::parse_real(row[b], line_no);
    }

    validate_instance(inst);
    MetricReport rep = validate_metric(inst);
    if (!rep.nonneg_ok) throw input_error("distance matrix has negative entries");
    if (!rep.diag_ok) throw input_error("distance matrix has a nonzero diagonal");
    if (!rep.symmetry_ok) {
        auto v = rep.symmetry_violations.front();
        throw input_error("line " + std::to_string(4 + v[0]) + ": asymmetric distances between points " +
                          std::to_string(v[0]) + " and " + std::to_string(v[1]));
    }
    if (!rep.triangle_violations.empty()) {
        auto v = rep.triangle_violations.front();
        throw input_error("line " + std::to_string(4 + v.a) + ": triangle inequality violated for (" +
                          std::to_string(v.a) + "," + std::to_string(v.c) + ") via " +
                          std::to_string(v.via) + " by " + format_real(v.slack));
    }
    return inst;
}

inline void save_instance(const std::string& path, const Instance& inst) {
    std::ofstream out(path);
    require_input(out.good(), "cannot open '" + path + "' for writing");
    out << write_instance(inst);
}

inline Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    require_input(in.good(), "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return read_instance(ss.str());
}

}  // namespace ckm

#pragma once

// JSON ingestion of systems and parameters; grid and complex-literal parsing.

#include <fstream>
#include <nlohmann/json.hpp>
#include <regex>
#include <set>
#include <sstream>

#include "canspec/spectral.hpp"

namespace canspec::io {

using nlohmann::json;

namespace detail {

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
    return v;
}

inline cplx entry(const json& j, const std::string& path) {
    if (j.is_number()) return number(j, path);
    if (j.is_array() && j.size() == 2) return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
    throw SchemaError(path, "expected a number or [re, im]");
}

}  // namespace detail

/// Matrix from rows of entries (number or [re, im]); a bare number is that multiple of I_n.
inline CMat parse_matrix(const json& j, const std::string& path, int n = -1) {
    if (j.is_number()) {
        if (n < 0) throw SchemaError(path, "scalar shorthand needs a known size");
        return detail::number(j, path) * CMat::Identity(n, n);
    }
    if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a non-empty array of rows");
    const auto rows = static_cast<int>(j.size());
    if (!j[0].is_array()) throw SchemaError(path + "[0]", "expected a row array");
    const auto cols = static_cast<int>(j[0].size());
    CMat M(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols) throw SchemaError(rp, "ragged row");
        for (int c = 0; c < cols; ++c) M(r, c) = detail::entry(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
    if (n >= 0 && (rows != n || cols != n))
        throw SchemaError(path, "expected " + std::to_string(n) + "x" + std::to_string(n) + ", got " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
    return M;
}

inline RMat parse_real_matrix(const json& j, const std::string& path, int n) {
    const CMat M = parse_matrix(j, path, n);
    if (M.imag().norm() != 0.0) throw SchemaError(path, "expected real entries");
    return M.real();
}

inline Segment parse_segment(const json& j, const std::string& path, int p) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    for (const auto& [key, v] : j.items())
        if (key != "length" && key != "H" && key != "F") throw SchemaError(path + "." + key, "unknown field");
    if (!j.contains("length")) throw SchemaError(path + ".length", "missing");
    if (!j.contains("H")) throw SchemaError(path + ".H", "missing");
    Segment s;
    s.length = detail::number(j["length"], path + ".length");
    if (!(s.length > 0)) throw SchemaError(path + ".length", "must be positive");
    s.H = parse_real_matrix(j["H"], path + ".H", 2 * p);
    s.F = j.contains("F") ? parse_real_matrix(j["F"], path + ".F", 2 * p) : RMat::Zero(2 * p, 2 * p);
    return s;
}

/// System from its JSON form; shape errors raise SchemaError, coefficient errors InvalidCoefficients.
inline CanonicalSystem parse_system(const json& j, const std::string& fallback_name = "system") {
    if (!j.is_object()) throw SchemaError("$", "expected an object");
    static const std::set<std::string> known{"p", "a", "endpoint_right", "segments", "tail", "name"};
    for (const auto& [key, v] : j.items())
        if (!known.count(key)) throw SchemaError(key, "unknown field");
    CanonicalSystem sys;
    if (!j.contains("p")) throw SchemaError("p", "missing");
    if (!j["p"].is_number_integer() || j["p"].get<int>() < 1) throw SchemaError("p", "expected a positive integer");
    sys.p = j["p"].get<int>();
    sys.a = j.contains("a") ? detail::number(j["a"], "a") : 0.0;
    sys.name = fallback_name;
    if (j.contains("name")) {
        if (!j["name"].is_string()) throw SchemaError("name", "expected a string");
        sys.name = j["name"].get<std::string>();
    }
    const std::string ep = j.value("endpoint_right", std::string("regular"));
    if (ep == "regular") sys.endpoint_right = RightEndpoint::regular;
    else if (ep == "limit_point") sys.endpoint_right = RightEndpoint::limit_point;
    else throw SchemaError("endpoint_right", "expected \"regular\" or \"limit_point\"");
    if (!j.contains("segments") || !j["segments"].is_array()) throw SchemaError("segments", "expected an array");
    for (std::size_t k = 0; k < j["segments"].size(); ++k)
        sys.segments.push_back(parse_segment(j["segments"][k], "segments[" + std::to_string(k) + "]", sys.p));
    if (j.contains("tail")) {
        if (!sys.half_line()) throw SchemaError("tail", "only allowed with endpoint_right = \"limit_point\"");
        sys.tail = parse_segment(j["tail"], "tail", sys.p);
    } else if (sys.half_line()) {
        throw SchemaError("tail", "required for endpoint_right = \"limit_point\"");
    }
    if (sys.segments.empty() && !sys.half_line()) throw SchemaError("segments", "a regular system needs segments");
    validate_system(sys);
    return sys;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline CanonicalSystem load_system(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    std::string stem = path.substr(path.find_last_of('/') + 1);
    if (auto dot = stem.rfind('.'); dot != std::string::npos) stem = stem.substr(0, dot);
    return parse_system(j, stem);
}

/// tau forms: number or matrix (tau itself), {"C", "D"}, {"multivalued": true}, {"A", "B"},
/// {"alpha", "beta", "atoms": [{"lambda", "weight"}]}.
inline TauParameter parse_tau(const json& j, int dim) {
    if (j.is_number() || j.is_array()) return ConstantRelation{pair_from_matrix(parse_matrix(j, "tau", dim))};
    if (!j.is_object()) throw SchemaError("tau", "expected a number, matrix or object");
    if (j.contains("C") || j.contains("D")) {
        if (!j.contains("C") || !j.contains("D")) throw SchemaError("tau", "C and D go together");
        ConstantRelation c{{parse_matrix(j["C"], "tau.C", dim), parse_matrix(j["D"], "tau.D", dim)}};
        if (numerical_rank(CMat((CMat(dim, 2 * dim) << c.pair.C, c.pair.D).finished())) != dim)
            throw SchemaError("tau", "rank [C D] must equal " + std::to_string(dim));
        if (!c.pair.selfadjoint()) throw SchemaError("tau", "C D* must equal D C*");
        return c;
    }
    if (j.contains("multivalued")) {
        if (!j["multivalued"].is_boolean() || !j["multivalued"].get<bool>())
            throw SchemaError("tau.multivalued", "expected true");
        return ConstantRelation{multivalued_pair(dim)};
    }
    if (j.contains("A") || j.contains("B")) {
        if (!j.contains("A") || !j.contains("B")) throw SchemaError("tau", "A and B go together");
        BoundaryPair bp{parse_real_matrix(j["A"], "tau.A", dim), parse_real_matrix(j["B"], "tau.B", dim)};
        try {
            check_tau(bp);
        } catch (const std::exception& e) {
            throw SchemaError("tau", e.what());
        }
        return bp;
    }
    HerglotzRep h;
    h.p = dim;
    h.alpha = j.contains("alpha") ? parse_matrix(j["alpha"], "tau.alpha", dim) : CMat::Zero(dim, dim);
    h.beta = j.contains("beta") ? parse_matrix(j["beta"], "tau.beta", dim) : CMat::Zero(dim, dim);
    if (j.contains("atoms")) {
        if (!j["atoms"].is_array()) throw SchemaError("tau.atoms", "expected an array");
        for (std::size_t k = 0; k < j["atoms"].size(); ++k) {
            const std::string ap = "tau.atoms[" + std::to_string(k) + "]";
            const json& a = j["atoms"][k];
            if (!a.is_object() || !a.contains("lambda") || !a.contains("weight"))
                throw SchemaError(ap, "expected {\"lambda\", \"weight\"}");
            h.atoms.push_back({detail::number(a["lambda"], ap + ".lambda"), parse_matrix(a["weight"], ap + ".weight", dim)});
        }
    }
    for (const auto& [key, v] : j.items())
        if (key != "alpha" && key != "beta" && key != "atoms") throw SchemaError("tau." + key, "unknown field");
    try {
        h.check();
    } catch (const std::exception& e) {
        throw SchemaError("tau", e.what());
    }
    return h;
}

inline TauParameter parse_tau(const std::string& text, int dim) {
    try {
        return parse_tau(json::parse(text), dim);
    } catch (const json::parse_error& e) {
        throw SchemaError("tau", std::string("invalid JSON: ") + e.what());
    }
}

/// "x", "yi", "x+yi", "x-yi", "i", "-2.5i".
inline cplx parse_complex(const std::string& raw) {
    std::string s;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    static const std::string num = R"(([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?))";
    static const std::regex real_re("^" + num + "$");
    static const std::regex imag_re(R"(^([+-]?(?:(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?)\*?i$)");
    static const std::regex both_re("^" + num + R"(([+-](?:(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?)\*?i$)");
    auto coef = [](const std::string& c) {
        if (c.empty() || c == "+") return 1.0;
        if (c == "-") return -1.0;
        return std::stod(c);
    };
    std::smatch m;
    if (std::regex_match(s, m, real_re)) return {std::stod(m[1]), 0.0};
    if (std::regex_match(s, m, imag_re)) return {0.0, coef(m[1])};
    if (std::regex_match(s, m, both_re)) return {std::stod(m[1]), coef(m[2])};
    throw SchemaError("grid", "cannot read complex number \"" + raw + "\"");
}

/// "a:b:n" (n points, a and b possibly complex) or a comma list of complex literals.
inline std::vector<cplx> parse_grid(const std::string& text) {
    std::vector<cplx> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(item);
        if (parts.size() != 3) throw SchemaError("grid", "expected a:b:n");
        const cplx a = parse_complex(parts[0]), b = parse_complex(parts[1]);
        int n = 0;
        try {
            std::size_t used = 0;
            n = std::stoi(parts[2], &used);
            if (used != parts[2].size()) n = 0;
        } catch (const std::exception&) {
            n = 0;
        }
        if (n < 1) throw SchemaError("grid", "point count must be a positive integer");
        if (n == 1) return {a};
        for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / (n - 1)));
    } else {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_complex(item));
    }
    if (out.empty()) throw SchemaError("grid", "empty grid");
    // strictly increasing in (Re, Im) order
    for (std::size_t k = 1; k < out.size(); ++k) {
        const cplx u = out[k - 1], v = out[k];
        if (!(u.real() < v.real() || (u.real() == v.real() && u.imag() < v.imag())))
            throw SchemaError("grid", "points must be strictly increasing (by real part, then imaginary part)");
    }
    return out;
}

/// Real grid: a:b:n with strictly increasing points.
inline std::vector<double> parse_real_grid(const std::string& text) {
    std::vector<double> out;
    for (cplx z : parse_grid(text)) {
        if (z.imag() != 0.0) throw SchemaError("grid", "expected real points");
        out.push_back(z.real());
    }
    for (std::size_t k = 1; k < out.size(); ++k)
        if (!(out[k] > out[k - 1])) throw SchemaError("grid", "points must be strictly increasing");
    return out;
}

}  // namespace canspec::io

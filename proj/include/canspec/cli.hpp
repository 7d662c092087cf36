#pragma once

// Command-line front end. Exit codes: 0 ok, 2 input, 3 policy, 4 numeric.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "canspec/io.hpp"

namespace canspec::cli {

inline constexpr int kOk = 0;
inline constexpr int kInput = 2;
inline constexpr int kPolicy = 3;
inline constexpr int kNumeric = 4;

class PolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Config {
    std::string system_path;
    std::string triple = "full";
    std::string z_grid;
    std::string lambda_grid;
    std::string window;
    double step = 1e-2;
    std::string tau = "0";
    std::string out;
    std::string format = "csv";
    std::string side = "right";
    std::string route = "auto";
    std::string criterion = "auto";
    std::string bump;
    double tol = 1e-3;
    bool force = false;
    bool strict = false;
    int seed = 0;
};

inline TripleKind parse_kind(const std::string& s) {
    if (s == "full") return TripleKind::full_regular;
    if (s == "neumann") return TripleKind::neumann_left;
    if (s == "limit-point") return TripleKind::limit_point;
    throw SchemaError("--triple", "expected full|neumann|limit-point");
}

inline LRoute parse_route(const std::string& s) {
    if (s == "auto") return LRoute::automatic;
    if (s == "left") return LRoute::left_pair;
    if (s == "right") return LRoute::right_lft;
    if (s == "boundary-pair") return LRoute::boundary_pair;
    throw SchemaError("--route", "expected auto|left|right|boundary-pair");
}

inline Criterion parse_criterion(const std::string& s) {
    if (s == "auto") return Criterion::automatic;
    if (s == "weyl-inverse-sum") return Criterion::weyl_inverse_sum;
    if (s == "tau-growth") return Criterion::tau_growth;
    if (s == "indivisible-endpoint") return Criterion::indivisible_endpoint;
    throw SchemaError("--criterion", "expected auto|weyl-inverse-sum|tau-growth|indivisible-endpoint");
}

inline void require_kind(const CanonicalSystem& sys, TripleKind kind) {
    try {
        check_kind(sys, kind);
    } catch (const UnsupportedDimension&) {
        throw;
    } catch (const Error& e) {
        throw SchemaError("--triple", e.what());
    }
}

inline std::string fmt(double x) { return format_double(x); }

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// "# system=<name> hash=<fnv1a of the system file and parameters>"
inline std::string header(const CanonicalSystem& sys, const std::string& system_text, const std::string& params) {
    return "# system=" + sys.name + " hash=" + hex64(fnv1a(system_text + "\n" + params)) + "\n";
}

inline void matrix_columns(std::string& line, const char* prefix, int rows, int cols) {
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const std::string id = std::string(prefix) + std::to_string(r + 1) + std::to_string(c + 1);
            line += "," + id + "_re," + id + "_im";
        }
}

inline void matrix_values(std::string& line, const CMat& M) {
    for (int r = 0; r < M.rows(); ++r)
        for (int c = 0; c < M.cols(); ++c) line += "," + fmt(M(r, c).real()) + "," + fmt(M(r, c).imag());
}

inline nlohmann::json matrix_json(const CMat& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < M.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < M.cols(); ++c) row.push_back({M(r, c).real(), M(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

struct Emitter {
    const Config& cfg;
    std::ostream& out;

    void write(const std::string& text) const {
        if (cfg.out.empty()) {
            out << text;
            return;
        }
        std::ofstream f(cfg.out, std::ios::binary);
        if (!f) throw SchemaError("--out", "cannot write " + cfg.out);
        f << text;
    }
};

struct Loaded {
    CanonicalSystem sys;
    std::string text;
};

inline Loaded load(const Config& cfg) {
    if (cfg.system_path.empty()) throw SchemaError("--system", "required");
    return {io::load_system(cfg.system_path), io::read_file(cfg.system_path)};
}

inline std::string params_of(const std::string& cmd, const Config& c) {
    return cmd + " triple=" + c.triple + " z=" + c.z_grid + " lambda=" + c.lambda_grid + " window=" + c.window +
           " step=" + fmt(c.step) + " tau=" + c.tau + " side=" + c.side + " route=" + c.route + " criterion=" + c.criterion + " bump=" + c.bump +
           " seed=" + std::to_string(c.seed);
}

/// Per-point evaluation over a grid with the skip-or-fail policy for spectral points.
template <class F>
std::vector<std::pair<cplx, CMat>> sweep(const std::vector<cplx>& grid, const Config& cfg, std::ostream& err, F f) {
    std::vector<std::pair<cplx, CMat>> rows;
    for (cplx z : grid) {
        try {
            rows.emplace_back(z, f(z));
        } catch (const SpectralPoint& e) {
            if (cfg.strict) throw;
            err << "skipped z = " << fmt(z.real()) << (z.imag() < 0 ? "" : "+") << fmt(z.imag()) << "i: " << e.what()
                << "\n";
        } catch (const NotInHalfPlane& e) {
            if (cfg.strict) throw;
            err << "skipped z = " << fmt(z.real()) << ": " << e.what() << "\n";
        }
    }
    return rows;
}

inline std::vector<cplx> upper_nodes(const std::vector<std::pair<cplx, CMat>>& rows) {
    std::vector<cplx> nodes;
    for (const auto& r : rows)
        if (r.first.imag() >= 0 && std::find(nodes.begin(), nodes.end(), r.first) == nodes.end())
            nodes.push_back(r.first);
    return nodes;
}

inline int cmd_solve(const Config& cfg, std::ostream& out, std::ostream&) {
    const auto [sys, text] = load(cfg);
    const auto grid = io::parse_grid(cfg.z_grid.empty() ? "0" : cfg.z_grid);
    const int n = 2 * sys.p;
    std::vector<std::pair<cplx, CMat>> rows;
    for (cplx z : grid) rows.emplace_back(z, monodromy(sys, z));
    if (cfg.format == "json") {
        nlohmann::json j = {{"system", sys.name}, {"rows", nlohmann::json::array()}};
        for (const auto& [z, U] : rows) j["rows"].push_back({{"z", {z.real(), z.imag()}}, {"U", matrix_json(U)}});
        Emitter{cfg, out}.write(j.dump(2) + "\n");
        return kOk;
    }
    std::string s = header(sys, text, params_of("solve", cfg));
    std::string cols = "z_re,z_im";
    matrix_columns(cols, "U", n, n);
    s += cols + "\n";
    for (const auto& [z, U] : rows) {
        std::string line = fmt(z.real()) + "," + fmt(z.imag());
        matrix_values(line, U);
        s += line + "\n";
    }
    Emitter{cfg, out}.write(s);
    return kOk;
}

inline int cmd_weyl(const Config& cfg, std::ostream& out, std::ostream& err) {
    const auto [sys, text] = load(cfg);
    const TripleKind kind = parse_kind(cfg.triple);
    require_kind(sys, kind);
    const auto grid = io::parse_grid(cfg.z_grid.empty() ? "i" : cfg.z_grid);
    std::map<std::pair<double, double>, double> radius;
    const auto rows = sweep(grid, cfg, err, [&](cplx z) {
        if (kind != TripleKind::limit_point) return weyl_function(sys, kind, z);
        try {
            const auto r = limit_point_m(sys, z);
            radius[{z.real(), z.imag()}] = r.disk.radius;
            return CMat(CMat::Constant(1, 1, r.m));
        } catch (const NoShrinkage& e) {
            err << "disk radius " << fmt(e.radius) << " at z = " << fmt(z.real()) << "+" << fmt(z.imag())
                << "i; using the periodic-tail value\n";
            radius[{z.real(), z.imag()}] = e.radius;
            return weyl_function(sys, kind, z);
        }
    });
    const int d = boundary_dim(sys, kind);
    // certification over the evaluated points
    const auto nodes = upper_nodes(rows);
    double lmin = 0.0, jmax = 0.0;
    if (!nodes.empty()) {
        std::map<std::pair<double, double>, CMat> cache;
        for (const auto& r : rows) cache[{r.first.real(), r.first.imag()}] = r.second;
        lmin = kernel_positivity(
                   [&](cplx z) {
                       auto it = cache.find({z.real(), z.imag()});
                       return it != cache.end() ? it->second : weyl_function(sys, kind, z);
                   },
                   nodes)
                   .lambda_min;
    }
    const auto W = resolvent_matrix(sys, kind, ResolventKind::right);
    for (const auto& r : rows) jmax = std::max(jmax, j_unitarity_defect(W, r.first));
    if (cfg.format == "json") {
        nlohmann::json j = {{"system", sys.name}, {"triple", cfg.triple}, {"rows", nlohmann::json::array()}};
        for (const auto& [z, M] : rows) {
            nlohmann::json row = {{"z", {z.real(), z.imag()}}, {"M", matrix_json(M)}};
            if (kind == TripleKind::limit_point) row["disk_radius"] = radius[{z.real(), z.imag()}];
            j["rows"].push_back(row);
        }
        j["kernel_lambda_min"] = lmin;
        j["j_unitarity_max"] = jmax;
        Emitter{cfg, out}.write(j.dump(2) + "\n");
        return kOk;
    }
    std::string s = header(sys, text, params_of("weyl", cfg));
    std::string cols = "z_re,z_im";
    matrix_columns(cols, "M", d, d);
    if (kind == TripleKind::limit_point) cols += ",disk_radius";
    s += cols + "\n";
    for (const auto& [z, M] : rows) {
        std::string line = fmt(z.real()) + "," + fmt(z.imag());
        matrix_values(line, M);
        if (kind == TripleKind::limit_point) line += "," + fmt(radius[{z.real(), z.imag()}]);
        s += line + "\n";
    }
    s += "# kernel_lambda_min=" + fmt(lmin) + " j_unitarity_max=" + fmt(jmax) + "\n";
    Emitter{cfg, out}.write(s);
    return kOk;
}

inline int cmd_resolvent_matrix(const Config& cfg, std::ostream& out, std::ostream& err) {
    const auto [sys, text] = load(cfg);
    const TripleKind kind = parse_kind(cfg.triple);
    require_kind(sys, kind);
    const auto grid = io::parse_grid(cfg.z_grid.empty() ? "i" : cfg.z_grid);
    std::function<CMat(cplx)> eval;
    if (cfg.side == "preresolvent") {
        if (kind != TripleKind::full_regular) throw SchemaError("--side", "preresolvent needs --triple full");
        eval = [&](cplx z) { return preresolvent_matrix(sys, z); };
    } else if (cfg.side == "left" || cfg.side == "right") {
        const auto W = resolvent_matrix(sys, kind, cfg.side == "left" ? ResolventKind::left : ResolventKind::right);
        eval = [W](cplx z) { return W(z); };
    } else {
        throw SchemaError("--side", "expected left|right|preresolvent");
    }
    const auto rows = sweep(grid, cfg, err, eval);
    const auto Wr = resolvent_matrix(sys, kind, ResolventKind::right);
    double jmax = 0.0, lmin = 0.0;
    for (const auto& r : rows) jmax = std::max(jmax, j_unitarity_defect(Wr, r.first));
    const auto nodes = upper_nodes(rows);
    if (!nodes.empty()) lmin = certify_class_W(Wr, nodes).lambda_min;
    const int m = rows.empty() ? 2 * boundary_dim(sys, kind) : static_cast<int>(rows.front().second.rows());
    if (cfg.format == "json") {
        nlohmann::json j = {{"system", sys.name}, {"triple", cfg.triple}, {"side", cfg.side}};
        j["rows"] = nlohmann::json::array();
        for (const auto& [z, W] : rows) j["rows"].push_back({{"z", {z.real(), z.imag()}}, {"W", matrix_json(W)}});
        j["class_w_lambda_min"] = lmin;
        j["j_unitarity_max"] = jmax;
        Emitter{cfg, out}.write(j.dump(2) + "\n");
        return kOk;
    }
    std::string s = header(sys, text, params_of("resolvent-matrix", cfg));
    std::string cols = "z_re,z_im";
    matrix_columns(cols, "W", m, m);
    s += cols + "\n";
    for (const auto& [z, W] : rows) {
        std::string line = fmt(z.real()) + "," + fmt(z.imag());
        matrix_values(line, W);
        s += line + "\n";
    }
    s += "# class_w_lambda_min=" + fmt(lmin) + " j_unitarity_max=" + fmt(jmax) + "\n";
    Emitter{cfg, out}.write(s);
    return kOk;
}

struct Window {
    double l1, l2, h;
};

inline Window window_of(const Config& cfg) {
    if (!cfg.lambda_grid.empty()) {
        const auto g = io::parse_real_grid(cfg.lambda_grid);
        if (g.size() < 2) throw SchemaError("--lambda-grid", "need at least two points");
        return {g.front(), g.back(), g[1] - g[0]};
    }
    if (cfg.window.empty()) throw SchemaError("--window", "give --window a:b or --lambda-grid a:b:n");
    const auto colon = cfg.window.find(':');
    if (colon == std::string::npos) throw SchemaError("--window", "expected a:b");
    const double l1 = io::parse_complex(cfg.window.substr(0, colon)).real();
    const double l2 = io::parse_complex(cfg.window.substr(colon + 1)).real();
    if (!(l2 > l1)) throw SchemaError("--window", "expected a < b");
    if (!(cfg.step > 0)) throw SchemaError("--step", "must be positive");
    return {l1, l2, cfg.step};
}

inline VectorFunction bump_function(const CanonicalSystem& sys, TripleKind kind, const std::string& spec) {
    const double lo = sys.a;
    const double hi = kind == TripleKind::limit_point ? sys.a + 2.0 : sys.mesh_end();
    double center = 0.5 * (lo + hi), width = 0.1 * (hi - lo);
    if (!spec.empty()) {
        const auto comma = spec.find(',');
        if (comma == std::string::npos) throw SchemaError("--bump", "expected center,width");
        center = io::parse_complex(spec.substr(0, comma)).real();
        width = io::parse_complex(spec.substr(comma + 1)).real();
        if (!(width > 0)) throw SchemaError("--bump", "width must be positive");
    }
    const int n = 2 * sys.p;
    return {[=](double t) {
                CVec v = CVec::Zero(n);
                v(0) = std::exp(-std::pow((t - center) / width, 2));
                return v;
            },
            lo, kind == TripleKind::limit_point ? std::min(hi, center + 8 * width) : hi};
}

inline std::string sigma_json(const DistributionFunction& sigma) {
    nlohmann::json j = {{"atoms", nlohmann::json::array()}, {"grid", sigma.grid()}, {"density", nlohmann::json::array()}};
    for (const auto& a : sigma.atoms()) j["atoms"].push_back({{"lambda", a.lambda}, {"weight", matrix_json(a.weight)}});
    for (const auto& d : sigma.density()) j["density"].push_back(matrix_json(d));
    return j.dump();
}

inline int cmd_spectral(const Config& cfg, std::ostream& out, std::ostream& err) {
    const auto [sys, text] = load(cfg);
    const TripleKind kind = parse_kind(cfg.triple);
    require_kind(sys, kind);
    const TauParameter tau = io::parse_tau(cfg.tau, boundary_dim(sys, kind));
    const LRoute route = parse_route(cfg.route);
    const Window w = window_of(cfg);
    const AdmissibilityReport adm = admissibility_test(sys, kind, tau, parse_criterion(cfg.criterion));
    nlohmann::json report = {{"admissibility", adm.to_json()}};
    if (adm.verdict == Verdict::inadmissible && !cfg.force) {
        (cfg.out.empty() ? err : out) << report.dump(2) << "\n";
        throw PolicyError("tau is inadmissible for this triple; rerun with --force to emit sigma anyway");
    }
    const DistributionFunction sigma = spectral_function(sys, kind, tau, w.l1, w.l2, w.h, route);
    if (!cfg.bump.empty()) {
        const auto f = bump_function(sys, kind, cfg.bump);
        report["parseval_defect"] = parseval_check(sys, kind, sigma, f, f).defect;
    }
    report["atoms"] = static_cast<int>(sigma.atoms().size());
    if (cfg.format == "json") {
        report["sigma"] = nlohmann::json::parse(sigma_json(sigma));
        Emitter{cfg, out}.write(report.dump(2) + "\n");
        return kOk;
    }
    Emitter{cfg, out}.write(distribution_csv(sigma, sys.name, params_of("spectral", cfg) + "\n" + text));
    (cfg.out.empty() ? err : out) << report.dump(2) << "\n";
    return kOk;
}

inline int cmd_fourier_check(const Config& cfg, std::ostream& out, std::ostream&) {
    const auto [sys, text] = load(cfg);
    const TripleKind kind = parse_kind(cfg.triple);
    require_kind(sys, kind);
    const TauParameter tau = io::parse_tau(cfg.tau, boundary_dim(sys, kind));
    const Window w = window_of(cfg);
    const DistributionFunction sigma = spectral_function(sys, kind, tau, w.l1, w.l2, w.h, parse_route(cfg.route));
    const auto f = bump_function(sys, kind, cfg.bump);
    const auto full = parseval_check(sys, kind, sigma, f, f);
    const auto half = parseval_check(sys, kind, sigma.scaled(0.5), f, f);
    const bool pass = full.defect <= cfg.tol;
    const nlohmann::json j = {{"system", sys.name},
                              {"defect", full.defect},
                              {"lhs", {full.lhs.real(), full.lhs.imag()}},
                              {"rhs", {full.rhs.real(), full.rhs.imag()}},
                              {"halved_defect", half.defect},
                              {"tol", cfg.tol},
                              {"pass", pass}};
    Emitter{cfg, out}.write(j.dump(2) + "\n");
    return pass ? kOk : kNumeric;
}

inline int cmd_indivisible(const Config& cfg, std::ostream& out, std::ostream&) {
    const auto [sys, text] = load(cfg);
    const auto runs = detect_indivisible(sys);
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json("inf"); };
    if (cfg.format == "csv") {
        std::string s = header(sys, text, params_of("indivisible", cfg)) + "from,to,psi,first,last,at_left,at_right\n";
        for (const auto& r : runs)
            s += fmt(r.from) + "," + (std::isfinite(r.to) ? fmt(r.to) : "inf") + "," + fmt(r.psi) + "," +
                 std::to_string(r.first) + "," + std::to_string(r.last) + "," + (r.at_left ? "1" : "0") + "," +
                 (r.at_right ? "1" : "0") + "\n";
        Emitter{cfg, out}.write(s);
        return kOk;
    }
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : runs)
        j.push_back({{"from", r.from},
                     {"to", num(r.to)},
                     {"psi", r.psi},
                     {"first_segment", r.first},
                     {"last_segment", r.last},
                     {"at_left", r.at_left},
                     {"at_right", r.at_right}});
    Emitter{cfg, out}.write(nlohmann::json({{"system", sys.name}, {"runs", j}}).dump(2) + "\n");
    return kOk;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Weyl functions, resolvent matrices and spectral functions of canonical systems"};
    app.require_subcommand(1);
    Config cfg;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--system", cfg.system_path, "system JSON file")->required();
        sub->add_option("--out", cfg.out, "write the artifact here instead of stdout");
        sub->add_option("--format", cfg.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_flag("--strict", cfg.strict, "fail on the first spectral point in a grid");
        sub->add_option("--seed", cfg.seed, "seed recorded in artifact headers");
    };
    auto triple = [&](CLI::App* sub) { sub->add_option("--triple", cfg.triple, "full|neumann|limit-point"); };
    auto* solve = app.add_subcommand("solve", "monodromy matrix U(b, z) over a z grid");
    common(solve);
    solve->add_option("--z-grid", cfg.z_grid, "a:b:n or comma list of complex numbers");
    auto* weyl = app.add_subcommand("weyl", "Weyl function over a z grid");
    common(weyl);
    triple(weyl);
    weyl->add_option("--z-grid", cfg.z_grid, "a:b:n or comma list of complex numbers");
    auto* rm = app.add_subcommand("resolvent-matrix", "resolvent matrix over a z grid");
    common(rm);
    triple(rm);
    rm->add_option("--z-grid", cfg.z_grid, "a:b:n or comma list of complex numbers");
    rm->add_option("--side", cfg.side, "left|right|preresolvent");
    auto spectral_opts = [&](CLI::App* sub) {
        common(sub);
        triple(sub);
        sub->add_option("--tau", cfg.tau, "parameter as inline JSON");
        sub->add_option("--window", cfg.window, "spectral window a:b");
        sub->add_option("--step", cfg.step, "grid step inside the window");
        sub->add_option("--lambda-grid", cfg.lambda_grid, "window and step as a:b:n");
        sub->add_option("--route", cfg.route, "auto|left|right|boundary-pair");
        sub->add_option("--bump", cfg.bump, "Gaussian test function center,width");
    };
    auto* spectral = app.add_subcommand("spectral", "spectral function sigma of a parameter tau");
    spectral_opts(spectral);
    spectral->add_option("--criterion", cfg.criterion, "auto|weyl-inverse-sum|tau-growth|indivisible-endpoint");
    spectral->add_flag("--force", cfg.force, "emit sigma even for an inadmissible tau");
    auto* fc = app.add_subcommand("fourier-check", "Parseval defect of sigma on a Gaussian bump");
    spectral_opts(fc);
    fc->add_option("--tol", cfg.tol, "largest accepted defect");
    auto* ind = app.add_subcommand("indivisible", "H-indivisible intervals (p = 1)");
    common(ind);
    cfg.format = "csv";
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kInput;
    }
    try {
        if (ind->parsed() && !app.get_subcommand("indivisible")->count("--format")) cfg.format = "json";
        if (solve->parsed()) return cmd_solve(cfg, out, err);
        if (weyl->parsed()) return cmd_weyl(cfg, out, err);
        if (rm->parsed()) return cmd_resolvent_matrix(cfg, out, err);
        if (spectral->parsed()) return cmd_spectral(cfg, out, err);
        if (fc->parsed()) return cmd_fourier_check(cfg, out, err);
        if (ind->parsed()) return cmd_indivisible(cfg, out, err);
    } catch (const PolicyError& e) {
        err << "refused: " << e.what() << "\n";
        return kPolicy;
    } catch (const SchemaError& e) {
        err << "input error: " << e.what() << "\n";
        return kInput;
    } catch (const InvalidCoefficients& e) {
        err << "input error: " << e.what() << "\n";
        return kInput;
    } catch (const NotRegular& e) {
        err << "input error: " << e.what() << "\n";
        return kInput;
    } catch (const UnsupportedDimension& e) {
        err << "input error: " << e.what() << "\n";
        return kInput;
    } catch (const RankDeficientPair& e) {
        err << "input error: " << e.what() << "\n";
        return kInput;
    } catch (const std::invalid_argument& e) {
        err << "input error: " << e.what() << "\n";
        return kInput;
    } catch (const Error& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    }
    return kInput;
}

}  // namespace canspec::cli

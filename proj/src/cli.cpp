#include "grushin/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "grushin/frequency.hpp"
#include "grushin/geometry.hpp"
#include "grushin/hardy.hpp"
#include "grushin/quadrature.hpp"
#include "grushin/solver.hpp"
#include "grushin/util.hpp"

namespace grushin::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kSummaryVersion = 1;

// ---------------------------------------------------------------------------
// Config handling
// ---------------------------------------------------------------------------

struct KeySchema {
    std::set<std::string> keys;
    std::map<std::string, const KeySchema*> children;
};

const KeySchema kQuadSchema{{"method", "rel_tol", "gauss_order", "min_depth",
                             "max_level", "qmc_points", "qmc_seed",
                             "qmc_replicates", "qmc_shell_step"},
                            {}};
const KeySchema kSpaceSchema{{"m", "n", "alpha"}, {}};
const KeySchema kIdentSchema{{"points", "seed", "threshold"}, {}};
const KeySchema kSelftestSchema{{"r_min", "r_max", "per_decade"}, {}};
const KeySchema kHardySchema{{"radii", "fields"}, {}};
const KeySchema kPotentialSchema{{"type", "c0", "epsilon"}, {}};
const KeySchema kFrequencySchema{
    {"field", "r_min", "r_max", "per_decade", "r0", "expect_n", "expect_n_tol",
     "lemma42_tol", "potential", "solution_dir"},
    {{"potential", &kPotentialSchema}}};
const KeySchema kExcisionSchema{{"rho_min", "u_inner", "w_inner"}, {}};
const KeySchema kSolveSchema{{"ns", "nt", "S", "T", "method", "residual_target",
                              "max_iterations", "c0", "epsilon", "excision", "mms",
                              "mms_grids", "boundary", "chain_frequency"},
                             {{"excision", &kExcisionSchema}}};
const KeySchema kOutputSchema{{"dir"}, {}};
const KeySchema kRootSchema{
    {"space", "quadrature", "identities", "quad_selftest", "hardy", "frequency",
     "solve", "output", "threads"},
    {{"space", &kSpaceSchema},
     {"quadrature", &kQuadSchema},
     {"identities", &kIdentSchema},
     {"quad_selftest", &kSelftestSchema},
     {"hardy", &kHardySchema},
     {"frequency", &kFrequencySchema},
     {"solve", &kSolveSchema},
     {"output", &kOutputSchema}}};

void validate_keys(const json& j, const KeySchema& schema, const std::string& path) {
    if (!j.is_object())
        throw InputError("config: expected an object at " + (path.empty() ? "root" : path));
    for (const auto& [key, value] : j.items()) {
        if (!schema.keys.count(key))
            throw InputError("config: unknown key '" + path + key + "'");
        const auto it = schema.children.find(key);
        if (it != schema.children.end() && !value.is_null())
            validate_keys(value, *it->second, path + key + ".");
    }
}

struct Config {
    json doc;
    std::string raw_text;
    SpaceParams sp{5, 1, 1.0};
    QuadratureOptions quad;
    std::string out_dir = "out";
    int threads = 1;
};

template <typename T>
T get_or(const json& j, const std::string& key, T def) {
    if (!j.contains(key) || j.at(key).is_null()) return def;
    return j.at(key).get<T>();
}

Config load_config(const std::string& path, const std::string& out_override,
                   int threads_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();

    Config cfg;
    cfg.raw_text = ss.str();
    try {
        cfg.doc = json::parse(cfg.raw_text);
    } catch (const std::exception& e) {
        throw InputError(std::string("config parse error: ") + e.what());
    }
    validate_keys(cfg.doc, kRootSchema, "");

    const json space = cfg.doc.value("space", json::object());
    cfg.sp = SpaceParams(get_or<int>(space, "m", 5), get_or<int>(space, "n", 1),
                         get_or<double>(space, "alpha", 1.0));

    const json q = cfg.doc.value("quadrature", json::object());
    const std::string method = get_or<std::string>(q, "method", "reduced2d");
    if (method == "reduced2d")
        cfg.quad.method = QuadMethod::reduced2d;
    else if (method == "qmc")
        cfg.quad.method = QuadMethod::qmc;
    else
        throw InputError("config: quadrature.method must be reduced2d or qmc");
    cfg.quad.rel_tol = get_or<double>(q, "rel_tol", 1e-8);
    cfg.quad.gauss_order = get_or<int>(q, "gauss_order", 12);
    cfg.quad.min_depth = get_or<int>(q, "min_depth", 3);
    cfg.quad.max_level = get_or<int>(q, "max_level", 3);
    cfg.quad.qmc_points = get_or<std::uint64_t>(q, "qmc_points", 1u << 20);
    cfg.quad.qmc_seed = get_or<std::uint64_t>(q, "qmc_seed", 20240901);
    cfg.quad.qmc_replicates = get_or<int>(q, "qmc_replicates", 8);
    cfg.quad.qmc_shell_step = get_or<double>(q, "qmc_shell_step", 0.02);
    if (cfg.quad.rel_tol <= 0.0 || cfg.quad.gauss_order < 2 ||
        cfg.quad.qmc_points < 1024)
        throw InputError("config: quadrature settings out of range");

    cfg.out_dir = get_or<std::string>(cfg.doc.value("output", json::object()), "dir",
                                      "out");
    if (!out_override.empty()) cfg.out_dir = out_override;
    cfg.threads = get_or<int>(cfg.doc, "threads", 1);
    if (threads_override > 0) cfg.threads = threads_override;
    cfg.quad.threads = std::max(1, cfg.threads);
    return cfg;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

json config_echo(const Config& cfg) {
    json j;
    j["config_text"] = cfg.raw_text;
    j["config"] = cfg.doc;
    return j;
}

// ---------------------------------------------------------------------------
// Catalog field names
// ---------------------------------------------------------------------------

FieldPtr field_by_name(const std::string& name, const SpaceParams& sp,
                       double bump_radius) {
    if (name == "const") return constant_field(1.0, sp);
    if (name == "zero") return constant_field(0.0, sp);
    if (name == "x1") return coordinate_field(0, sp);
    if (name == "rho^2") return rho_power(2.0, sp);
    if (name == "rho^4") return rho_power(4.0, sp);
    if (name == "rho^6") return rho_power(6.0, sp);
    if (name == "rho^crit") return rho_power(2.0 * (sp.alpha + 1.0), sp);
    if (name == "x2") return biradial_polynomial({{1.0, 1.0, 0.0}}, sp);
    if (name == "y2") return biradial_polynomial({{1.0, 0.0, 1.0}}, sp);
    if (name == "x2y2") return biradial_polynomial({{1.0, 1.0, 1.0}}, sp);
    if (name == "mixed")
        return biradial_polynomial({{1.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, {1.0, 0.0, 2.0}},
                                   sp);
    if (name == "bump") return bump(bump_radius, sp);
    throw InputError("unknown catalog field name: '" + name + "'");
}

Potential potential_from(const json& p, const SpaceParams& sp) {
    const std::string type = get_or<std::string>(p, "type", "none");
    const double c0 = get_or<double>(p, "c0", 0.0);
    if (type == "none") return Potential::zero();
    if (type == "gauge_inverse4") return Potential::gauge_inverse4(c0, sp);
    if (type == "gauge_inverse4_reg")
        return Potential::gauge_inverse4_reg(c0, get_or<double>(p, "epsilon", 0.02),
                                             sp);
    throw InputError("config: unknown potential type '" + type + "'");
}

// ---------------------------------------------------------------------------
// identities
// ---------------------------------------------------------------------------

int cmd_identities(const Config& cfg, std::ostream& log) {
    const json sec = cfg.doc.value("identities", json::object());
    const int npoints = get_or<int>(sec, "points", 1000);
    const std::uint64_t seed = get_or<std::uint64_t>(sec, "seed", 31337);
    const double threshold = get_or<double>(sec, "threshold", 1e-6);
    if (npoints < 1) throw InputError("identities.points must be positive");

    const std::vector<FieldPtr> fields = {
        mixed_probe(cfg.sp), rho_power(2.0, cfg.sp),
        biradial_polynomial({{1.0, 1.0, 1.0}, {0.5, 2.0, 0.0}}, cfg.sp)};

    struct Row {
        std::string id;
        std::string field;
        double max_resid = 0.0;
    };
    std::vector<Row> rows;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.5, 1.5);
    for (const auto& f : fields) {
        Row rs[6];
        const char* ids[6] = {"lap_rho", "z_rho", "mixed_grad",
                              "grad_norm", "commutator", "z_bound"};
        for (int k = 0; k < 6; ++k) {
            rs[k].id = ids[k];
            rs[k].field = f->info().name;
        }
        for (int i = 0; i < npoints; ++i) {
            Point p(cfg.sp);
            do {
                for (int d = 0; d < cfg.sp.dim(); ++d) p.c[d] = uni(rng);
            } while (std::sqrt(p.x_norm2()) < 0.05 || std::sqrt(p.y_norm2()) < 0.05);
            const IdentityResiduals r = identity_residuals(p, cfg.sp, *f);
            const double v[6] = {r.lap_rho, r.z_rho, r.mixed_grad,
                                 r.grad_norm, r.commutator, r.z_bound};
            for (int k = 0; k < 6; ++k)
                rs[k].max_resid = std::max(rs[k].max_resid, v[k]);
        }
        for (int k = 0; k < 6; ++k) rows.push_back(rs[k]);
    }

    bool all_pass = true;
    {
        std::ofstream csv(fs::path(cfg.out_dir) / "identities.csv",
                          std::ios::binary);
        csv << "id,field,points,max_residual,threshold,pass\r\n";
        for (const auto& r : rows) {
            const bool ok = r.max_resid <= threshold;
            all_pass = all_pass && ok;
            csv << r.id << "," << r.field << "," << npoints << ","
                << format_double(r.max_resid) << "," << format_double(threshold)
                << "," << (ok ? "true" : "false") << "\r\n";
        }
    }
    json summary = config_echo(cfg);
    summary["summary_version"] = kSummaryVersion;
    summary["command"] = "identities";
    summary["points"] = npoints;
    summary["threshold"] = threshold;
    json jr = json::array();
    for (const auto& r : rows)
        jr.push_back({{"id", r.id},
                      {"field", r.field},
                      {"max_residual", r.max_resid},
                      {"pass", r.max_resid <= threshold}});
    summary["rows"] = jr;
    summary["pass"] = all_pass;
    write_json(fs::path(cfg.out_dir) / "identities.json", summary);
    log << "identities: " << rows.size() << " rows, "
        << (all_pass ? "all pass" : "FAILURES") << "\n";
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// quad-selftest
// ---------------------------------------------------------------------------

int cmd_quad_selftest(const Config& cfg, std::ostream& log) {
    const json sec = cfg.doc.value("quad_selftest", json::object());
    const double rmin = get_or<double>(sec, "r_min", 0.5);
    const double rmax = get_or<double>(sec, "r_max", 2.0);
    const int per_decade = get_or<int>(sec, "per_decade", 16);
    const SpaceParams& sp = cfg.sp;
    QuadratureOptions opt = cfg.quad;
    opt.method = QuadMethod::reduced2d;

    struct Row {
        std::string check;
        double value, expected, tol;
        bool pass;
    };
    std::vector<Row> rows;
    auto push = [&](const std::string& c, double v, double e, double tol) {
        rows.push_back({c, v, e, tol, std::abs(v - e) <= tol});
    };

    // scaling exponent of the ball volume
    {
        std::vector<double> lr, lv;
        for (double r : log_radius_grid(rmin, rmax, per_decade)) {
            lr.push_back(std::log(r));
            lv.push_back(std::log(
                ball_integral([](const Point&) { return 1.0; }, true, {}, r, sp, opt)
                    .value));
        }
        push("volume_exponent", fit_line(lr, lv).slope, sp.Q(), 1e-3);
    }
    // co-area consistency on a generic smooth bi-radial integrand
    {
        auto f = [&sp](const Point& p) {
            const double rho = gauge(p, sp);
            return 1.0 + rho * rho + 0.5 * p.y_norm2();
        };
        const double r = 0.5 * (rmin + rmax);
        const auto& [gx, gw] = gauss_legendre(32);
        double acc = 0.0, err_acc = 0.0;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            const double rho = 0.5 * r + 0.5 * r * gx[i];
            const auto sres = sphere_integral(f, true, {}, rho, sp, opt);
            acc += 0.5 * r * gw[i] * sres.value;
            err_acc += 0.5 * r * gw[i] * sres.error;
        }
        const auto b = ball_integral(f, true, {}, r, sp, opt);
        rows.push_back({"coarea_consistency", acc, b.value,
                        3.0 * (b.error + err_acc) + 1e-10 * std::abs(b.value),
                        std::abs(acc - b.value) <=
                            3.0 * (b.error + err_acc) + 1e-10 * std::abs(b.value)});
    }
    // divergence identity
    {
        const double r = rmax;
        const double lhs =
            sphere_integral([&sp](const Point& p) { return psi(p, sp); }, true, {},
                            r, sp, opt)
                .value;
        const double rhs =
            (sp.Q() - 1.0) *
            ball_integral(
                [&sp](const Point& p) { return psi(p, sp) / gauge(p, sp); }, true,
                WeightSpec{-1.0, 0.0}, r, sp, opt)
                .value;
        push("divergence_identity", lhs / rhs, 1.0, 1e-3);
    }
    // reduced2d vs qmc
    {
        QuadratureOptions qo = cfg.quad;
        qo.method = QuadMethod::qmc;
        const auto qv =
            ball_integral([](const Point&) { return 1.0; }, true, {}, rmax, sp, qo);
        const auto rv =
            ball_integral([](const Point&) { return 1.0; }, true, {}, rmax, sp, opt);
        rows.push_back({"reduced_vs_qmc", qv.value, rv.value,
                        3.0 * (qv.error + rv.error) + 1e-9 * rv.value,
                        std::abs(qv.value - rv.value) <=
                            3.0 * (qv.error + rv.error) + 1e-9 * rv.value});
    }

    bool all_pass = true;
    {
        std::ofstream csv(fs::path(cfg.out_dir) / "quad_selftest.csv",
                          std::ios::binary);
        csv << "check,value,expected,tolerance,pass\r\n";
        for (const auto& r : rows) {
            all_pass = all_pass && r.pass;
            csv << r.check << "," << format_double(r.value) << ","
                << format_double(r.expected) << "," << format_double(r.tol) << ","
                << (r.pass ? "true" : "false") << "\r\n";
        }
    }
    json summary = config_echo(cfg);
    summary["summary_version"] = kSummaryVersion;
    summary["command"] = "quad_selftest";
    json jr = json::array();
    for (const auto& r : rows)
        jr.push_back({{"check", r.check},
                      {"value", r.value},
                      {"expected", r.expected},
                      {"tolerance", r.tol},
                      {"pass", r.pass}});
    summary["rows"] = jr;
    summary["pass"] = all_pass;
    write_json(fs::path(cfg.out_dir) / "quad_selftest.json", summary);
    log << "quad-selftest: " << rows.size() << " checks, "
        << (all_pass ? "all pass" : "FAILURES") << "\n";
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// hardy
// ---------------------------------------------------------------------------

int cmd_hardy(const Config& cfg, std::ostream& log) {
    const json sec = cfg.doc.value("hardy", json::object());
    std::vector<double> radii = get_or<std::vector<double>>(
        sec, "radii", {0.5, 0.75, 1.0, 1.5, 2.0});
    std::vector<std::string> names = get_or<std::vector<std::string>>(
        sec, "fields",
        {"const", "rho^2", "rho^4", "rho^crit", "bump", "x2", "y2", "x2y2"});
    if (radii.empty() || names.empty())
        throw InputError("hardy: radii and fields must be nonempty");
    const double rmax = *std::max_element(radii.begin(), radii.end());

    std::vector<InequalityReport> reports;
    for (const auto& name : names) {
        const FieldPtr u = field_by_name(name, cfg.sp, rmax);
        for (double r : radii) {
            const auto batch = run_hardy_suite(u, r, cfg.sp, cfg.quad);
            reports.insert(reports.end(), batch.begin(), batch.end());
        }
    }
    write_reports_csv((fs::path(cfg.out_dir) / "hardy.csv").string(), reports);

    bool all_pass = true;
    int gated = 0;
    for (const auto& r : reports)
        if (r.verdict != Verdict::REPORTED) {
            ++gated;
            all_pass = all_pass && r.verdict == Verdict::PASS;
        }

    json summary = config_echo(cfg);
    summary["summary_version"] = kSummaryVersion;
    summary["command"] = "hardy";
    summary["rows"] = static_cast<int>(reports.size());
    summary["gated"] = gated;
    json ids = json::array();
    {
        std::set<std::string> seen;
        for (const auto& r : reports)
            if (seen.insert(r.id).second) ids.push_back(r.id);
    }
    summary["inequality_ids"] = ids;
    json emp = json::object();
    for (const auto& r : reports)
        if (r.verdict == Verdict::REPORTED)
            emp[r.id + "/" + r.field + "/r=" + format_double(r.r)] =
                r.empirical_constant;
    summary["empirical_constants"] = emp;
    summary["pass"] = all_pass;
    write_json(fs::path(cfg.out_dir) / "hardy.json", summary);
    log << "hardy: " << reports.size() << " rows (" << gated << " gated), "
        << (all_pass ? "all pass" : "FAILURES") << "\n";
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// frequency
// ---------------------------------------------------------------------------

int frequency_pipeline(const Config& cfg, const FieldPtr& u, const FieldPtr& w,
                       const Potential& V, const json& sec, std::ostream& log) {
    const double rmin = get_or<double>(sec, "r_min", 0.5);
    const double rmax = get_or<double>(sec, "r_max", 2.0);
    const int per_decade = get_or<int>(sec, "per_decade", 64);
    QuadratureOptions opt = cfg.quad;
    if (!u->info().biradial) opt.method = QuadMethod::qmc;

    const auto radii = log_radius_grid(rmin, rmax, per_decade);
    const FrequencyProfile prof = compute_profile(u, w, V, cfg.sp, radii, opt);
    write_profile_csv((fs::path(cfg.out_dir) / "frequency.csv").string(), prof);

    const auto hd = check_H_derivative(prof);
    const double r0 = get_or<double>(sec, "r0", prof.entries.back().r);
    const auto mono = check_monotonicity(prof, r0);
    const auto dbl = check_doubling(prof, mono.beta_hat);

    bool pass = true;
    json checks = json::object();
    if (sec.contains("lemma42_tol")) {
        const double tol = sec.at("lemma42_tol").get<double>();
        checks["lemma42_max_residual"] = hd.max_residual;
        checks["lemma42_tol"] = tol;
        checks["lemma42_pass"] = hd.max_residual <= tol;
        pass = pass && hd.max_residual <= tol;
    } else {
        checks["lemma42_max_residual"] = hd.max_residual;
    }
    if (sec.contains("expect_n")) {
        const double want = sec.at("expect_n").get<double>();
        const double tol = get_or<double>(sec, "expect_n_tol", 1e-2);
        double worst = 0.0;
        for (const auto& e : prof.entries)
            worst = std::max(worst, std::abs(e.N - want));
        checks["expect_n"] = want;
        checks["max_N_deviation"] = worst;
        checks["expect_n_pass"] = worst <= tol;
        pass = pass && worst <= tol;
    }

    json summary = config_echo(cfg);
    summary["summary_version"] = kSummaryVersion;
    summary["command"] = "frequency";
    summary["field"] = u->info().name;
    summary["potential"] = V.name;
    summary["entries"] = static_cast<int>(prof.entries.size());
    summary["truncated"] = prof.truncated;
    if (prof.truncated) summary["truncated_at"] = prof.truncated_at;
    summary["monotonicity"] = {{"r0", mono.r0},
                               {"n_r0", mono.n_r0},
                               {"omega_empty", mono.omega_empty},
                               {"omega_points", static_cast<int>(mono.omega.size())},
                               {"beta_hat", mono.beta_hat},
                               {"violation_measure", mono.violation_measure}};
    summary["doubling"] = {{"max_D", dbl.max_D},
                           {"gamma_hat", dbl.gamma_hat},
                           {"gamma_from_beta", dbl.gamma_from_beta},
                           {"A_hat", dbl.A_hat},
                           {"C_hat", dbl.C_hat},
                           {"A_fit", dbl.A_fit},
                           {"h_form_holds", dbl.h_form_holds}};
    summary["checks"] = checks;
    summary["pass"] = pass;
    write_json(fs::path(cfg.out_dir) / "frequency.json", summary);
    log << "frequency: " << prof.entries.size() << " radii, beta_hat="
        << mono.beta_hat << ", max_D=" << dbl.max_D << ", "
        << (pass ? "pass" : "FAILURES") << "\n";
    return pass ? 0 : 1;
}

int cmd_frequency(const Config& cfg, std::ostream& log) {
    const json sec = cfg.doc.value("frequency", json::object());
    if (!sec.contains("field"))
        throw InputError("frequency: config key 'frequency.field' is required");
    const std::string name = sec.at("field").get<std::string>();
    const Potential V =
        potential_from(sec.value("potential", json::object()), cfg.sp);

    if (name == "solution") {
        const std::string dir = get_or<std::string>(sec, "solution_dir", "");
        if (dir.empty())
            throw InputError("frequency: field 'solution' needs solution_dir");
        const GridField gu = GridField::read_csv((fs::path(dir) / "u.csv").string());
        const GridField gw = GridField::read_csv((fs::path(dir) / "w.csv").string());
        return frequency_pipeline(cfg, lift_to_ambient(gu, cfg.sp),
                                  lift_to_ambient(gw, cfg.sp), V, sec, log);
    }
    const double rmax = get_or<double>(sec, "r_max", 2.0);
    const FieldPtr u = field_by_name(name, cfg.sp, rmax);
    return frequency_pipeline(cfg, u, nullptr, V, sec, log);
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

int cmd_solve(const Config& cfg, std::ostream& log) {
    const json sec = cfg.doc.value("solve", json::object());
    SolverOptions sopt;
    const std::string method = get_or<std::string>(sec, "method", "sparse_lu");
    if (method == "sparse_lu")
        sopt.method = SolveMethod::sparse_lu;
    else if (method == "bicgstab")
        sopt.method = SolveMethod::bicgstab;
    else
        throw InputError("solve: unknown method '" + method + "'");
    sopt.residual_target = get_or<double>(sec, "residual_target", 1e-10);
    sopt.max_iterations = get_or<int>(sec, "max_iterations", 4000);

    const double S = get_or<double>(sec, "S", 1.0);
    const double T = get_or<double>(sec, "T", 0.5);
    const double c0 = get_or<double>(sec, "c0", 1.0);
    const double eps = get_or<double>(sec, "epsilon", 0.02);

    if (get_or<bool>(sec, "mms", false)) {
        const std::vector<int> grids =
            get_or<std::vector<int>>(sec, "mms_grids", {65, 129, 257});
        const MmsResult res = mms_study(cfg.sp, grids, S, T, c0, eps, sopt);
        {
            std::ofstream csv(fs::path(cfg.out_dir) / "mms_convergence.csv",
                              std::ios::binary);
            csv << "grid,h,l2_error,linf_error\r\n";
            for (std::size_t i = 0; i < res.grids.size(); ++i)
                csv << res.grids[i] << "," << format_double(res.h[i]) << ","
                    << format_double(res.l2[i]) << "," << format_double(res.linf[i])
                    << "\r\n";
        }
        const bool pass = res.order_l2 >= 1.9 &&
                          res.worst_residual <= sopt.residual_target;
        json summary = config_echo(cfg);
        summary["summary_version"] = kSummaryVersion;
        summary["command"] = "solve";
        summary["mode"] = "mms";
        summary["order_l2"] = res.order_l2;
        summary["order_linf"] = res.order_linf;
        summary["worst_residual"] = res.worst_residual;
        summary["pass"] = pass;
        write_json(fs::path(cfg.out_dir) / "solve.json", summary);
        log << "solve(mms): order_l2=" << res.order_l2
            << " order_linf=" << res.order_linf << " residual="
            << res.worst_residual << " " << (pass ? "pass" : "FAIL") << "\n";
        return pass ? 0 : 1;
    }

    const GridSpec grid{get_or<int>(sec, "ns", 129), get_or<int>(sec, "nt", 129), S,
                        T};
    const BiradialOperator op = assemble(grid, cfg.sp);
    BVPSpec spec;
    spec.grid = grid;
    const std::string boundary = get_or<std::string>(sec, "boundary", "ones");
    if (sec.contains("excision") && !sec.at("excision").is_null()) {
        const json je = sec.at("excision");
        spec.excision = Excision{get_or<double>(je, "rho_min", 0.05),
                                 get_or<double>(je, "u_inner", 1.0),
                                 get_or<double>(je, "w_inner", 0.0)};
        spec.V = Potential::gauge_inverse4(c0, cfg.sp);
    } else {
        spec.V = Potential::gauge_inverse4_reg(c0, eps, cfg.sp);
    }

    Solution sol;
    spec.w_boundary = [](double, double) { return 0.0; };
    if (boundary == "ones") {
        spec.u_boundary = [](double, double) { return 1.0; };
        sol = solve(spec, op, sopt);
    } else if (boundary == "mms") {
        const auto ut = mms_exact_u();
        const auto wt = power_laplacian(ut, cfg.sp);
        spec.u_boundary = [ut](double s, double t) {
            return eval_power_terms(ut, s * s, t * t);
        };
        spec.w_boundary = [wt](double s, double t) {
            return eval_power_terms(wt, s * s, t * t);
        };
        sol = solve(spec, op, sopt);
    } else if (boundary == "vanishing") {
        // Three basis solves combined by linearity so that both u and w
        // vanish at the origin; the combination still solves the system.
        auto run = [&](double p) {
            BVPSpec s2 = spec;
            s2.u_boundary = [p](double s, double t) {
                return std::pow(s * s + 2.0 * t * t, p);
            };
            return solve(s2, op, sopt);
        };
        const Solution s0 = run(0.0), s1 = run(1.0), s2 = run(2.0);
        const double a11 = s0.u.at(0, 0), a12 = s1.u.at(0, 0);
        const double a21 = s0.w.at(0, 0), a22 = s1.w.at(0, 0);
        const double det = a11 * a22 - a12 * a21;
        if (std::abs(det) < 1e-14)
            throw SingularSystem("solve: vanishing combination is degenerate");
        const double b1 = -s2.u.at(0, 0), b2 = -s2.w.at(0, 0);
        const double g0 = (b1 * a22 - a12 * b2) / det;
        const double g1 = (a11 * b2 - b1 * a21) / det;
        std::vector<double> cu(static_cast<std::size_t>(grid.ns) * grid.nt);
        std::vector<double> cw(cu.size());
        for (int i = 0; i < grid.ns; ++i)
            for (int j = 0; j < grid.nt; ++j) {
                const std::size_t k = static_cast<std::size_t>(i) * grid.nt + j;
                cu[k] = g0 * s0.u.at(i, j) + g1 * s1.u.at(i, j) + s2.u.at(i, j);
                cw[k] = g0 * s0.w.at(i, j) + g1 * s1.w.at(i, j) + s2.w.at(i, j);
            }
        sol.u = GridField(grid, std::move(cu));
        sol.w = GridField(grid, std::move(cw));
        sol.report = s2.report;
        sol.report.residual =
            std::max({s0.report.residual, s1.report.residual, s2.report.residual}) *
            (std::abs(g0) + std::abs(g1) + 1.0);
    } else {
        throw InputError("solve: unknown boundary selection '" + boundary + "'");
    }
    sol.u.write_csv((fs::path(cfg.out_dir) / "u.csv").string());
    sol.w.write_csv((fs::path(cfg.out_dir) / "w.csv").string());

    json summary = config_echo(cfg);
    summary["summary_version"] = kSummaryVersion;
    summary["command"] = "solve";
    summary["mode"] = "bvp";
    summary["grid"] = {{"ns", grid.ns}, {"nt", grid.nt}, {"S", S}, {"T", T}};
    summary["c0"] = c0;
    summary["epsilon"] = spec.excision ? 0.0 : eps;
    summary["excised"] = spec.excision.has_value();
    summary["residual"] = sol.report.residual;
    summary["solver"] = sol.report.method;
    const SmallnessVerdict sv = smallness_check(c0, cfg.sp);
    summary["smallness"] = {{"cond_1", sv.cond_1},     {"cond_2", sv.cond_2},
                            {"cond_0", sv.cond_0},     {"margin_1", sv.margin_1},
                            {"margin_2", sv.margin_2}, {"margin_0", sv.margin_0}};
    summary["pass"] = true;
    write_json(fs::path(cfg.out_dir) / "solve.json", summary);
    log << "solve: residual=" << sol.report.residual << " (" << sol.report.method
        << ")\n";

    if (get_or<bool>(sec, "chain_frequency", false)) {
        const json fsec = cfg.doc.value("frequency", json::object());
        return frequency_pipeline(cfg, lift_to_ambient(sol.u, cfg.sp),
                                  lift_to_ambient(sol.w, cfg.sp), spec.V, fsec, log);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const Config& cfg, std::ostream& log) {
    const fs::path dir(cfg.out_dir);
    const char* names[] = {"identities.json", "quad_selftest.json", "hardy.json",
                           "frequency.json", "solve.json"};
    json components = json::object();
    bool all_pass = true;
    int found = 0;
    for (const char* n : names) {
        const fs::path p = dir / n;
        if (!fs::exists(p)) continue;
        ++found;
        std::ifstream in(p, std::ios::binary);
        json j = json::parse(std::string(std::istreambuf_iterator<char>(in), {}));
        j.erase("config_text");
        j.erase("config");
        components[j.value("command", std::string(n))] = j;
        if (j.contains("pass")) all_pass = all_pass && j.at("pass").get<bool>();
    }
    if (found == 0)
        throw InputError("report: no summaries found in '" + cfg.out_dir + "'");

    json summary = config_echo(cfg);
    summary["summary_version"] = kSummaryVersion;
    summary["command"] = "report";
    summary["components"] = components;

    // carry the fitted constants up to the top level
    json constants = json::object();
    if (components.contains("frequency")) {
        const json& f = components["frequency"];
        if (f.contains("monotonicity"))
            constants["beta_hat"] = f["monotonicity"]["beta_hat"];
        if (f.contains("doubling")) {
            constants["A_hat"] = f["doubling"]["A_hat"];
            constants["gamma_hat"] = f["doubling"]["gamma_hat"];
            constants["C_hat"] = f["doubling"]["C_hat"];
        }
    }
    if (components.contains("hardy") &&
        components["hardy"].contains("empirical_constants"))
        constants["hardy_empirical"] = components["hardy"]["empirical_constants"];
    summary["constants"] = constants;
    summary["pass"] = all_pass;
    write_json(dir / "report.json", summary);
    log << "report: merged " << found << " components, "
        << (all_pass ? "all pass" : "FAILURES") << "\n";
    return all_pass ? 0 : 1;
}

} // namespace

int run_command(const std::string& command, const std::string& config_path,
                const std::string& out_override, int threads_override,
                std::ostream& log) {
    try {
        const Config cfg = load_config(config_path, out_override, threads_override);
        fs::create_directories(cfg.out_dir);
        if (command == "identities") return cmd_identities(cfg, log);
        if (command == "quad-selftest") return cmd_quad_selftest(cfg, log);
        if (command == "hardy") return cmd_hardy(cfg, log);
        if (command == "frequency") return cmd_frequency(cfg, log);
        if (command == "solve") return cmd_solve(cfg, log);
        if (command == "report") return cmd_report(cfg, log);
        log << "error: unknown command '" << command << "'\n";
        return 2;
    } catch (const SolveFailure& e) {
        log << "solve failure: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace grushin::cli

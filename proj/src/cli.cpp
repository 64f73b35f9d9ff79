#include "subharnack/cli.hpp"

#include "subharnack/coupling.hpp"
#include "subharnack/harness.hpp"
#include "subharnack/random.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace subharnack::cli {

namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

std::string join(std::string_view prefix, std::string_view key) {
    return prefix.empty() ? std::string(key) : fmt::format("{}.{}", prefix, key);
}

std::string where(const toml::node& node) {
    const auto& src = node.source();
    return src.begin.line > 0 ? fmt::format(" (line {})", src.begin.line) : std::string();
}

const toml::node& require_node(const toml::table& t, std::string_view prefix, std::string_view key) {
    const toml::node* n = t.get(key);
    if (!n) throw ConfigError(fmt::format("missing field '{}'", join(prefix, key)));
    return *n;
}

double as_double(const toml::node& n, const std::string& name) {
    if (auto v = n.value<double>()) return *v;
    throw ConfigError(fmt::format("field '{}' must be a number{}", name, where(n)));
}

double get_double(const toml::table& t, std::string_view prefix, std::string_view key) {
    return as_double(require_node(t, prefix, key), join(prefix, key));
}

double get_double(const toml::table& t, std::string_view prefix, std::string_view key, double fallback) {
    const toml::node* n = t.get(key);
    return n ? as_double(*n, join(prefix, key)) : fallback;
}

std::size_t get_count(const toml::table& t, std::string_view prefix, std::string_view key, std::size_t fallback) {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    const auto v = n->value<std::int64_t>();
    if (!v || *v < 0) throw ConfigError(fmt::format("field '{}' must be a nonnegative integer{}", join(prefix, key), where(*n)));
    return static_cast<std::size_t>(*v);
}

std::string get_string(const toml::table& t, std::string_view prefix, std::string_view key) {
    const toml::node& n = require_node(t, prefix, key);
    if (auto v = n.value<std::string>()) return *v;
    throw ConfigError(fmt::format("field '{}' must be a string{}", join(prefix, key), where(n)));
}

// A number or an array of numbers.
std::vector<double> get_numbers(const toml::node& n, const std::string& name) {
    if (const auto* arr = n.as_array()) {
        std::vector<double> out;
        for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(as_double(*arr->get(i), fmt::format("{}[{}]", name, i)));
        if (out.empty()) throw ConfigError(fmt::format("field '{}' must not be empty{}", name, where(n)));
        return out;
    }
    return {as_double(n, name)};
}

std::vector<double> get_numbers(const toml::table& t, std::string_view prefix, std::string_view key,
                                std::vector<double> fallback) {
    const toml::node* n = t.get(key);
    return n ? get_numbers(*n, join(prefix, key)) : fallback;
}

const toml::table& require_table(const toml::table& t, std::string_view prefix, std::string_view key) {
    const toml::node& n = require_node(t, prefix, key);
    if (const auto* tab = n.as_table()) return *tab;
    throw ConfigError(fmt::format("field '{}' must be a table{}", join(prefix, key), where(n)));
}

ModelDescriptor parse_model(const toml::table& root) {
    const toml::table& m = require_table(root, "", "model");
    ModelDescriptor desc;
    desc.r0 = get_double(m, "model", "r0");
    const auto dim = get_count(m, "model", "dim", 1);
    if (dim == 0) throw ConfigError("field 'model.dim' must be positive");
    const toml::table& drift = require_table(m, "model", "drift");
    const std::string kind = get_string(drift, "model.drift", "kind");
    if (kind == "linear") {
        desc.drift = LinearDriftDesc{dim, get_numbers(require_node(drift, "model.drift", "matrix"), "model.drift.matrix")};
    } else if (kind == "cubic") {
        desc.drift = CubicDriftDesc{dim, get_double(drift, "model.drift", "K"), get_double(drift, "model.drift", "a")};
    } else {
        throw ConfigError(fmt::format("field 'model.drift.kind' must be linear or cubic, got '{}'", kind));
    }
    if (const toml::node* delay = m.get("delay")) {
        const auto* tab = delay->as_table();
        if (!tab) throw ConfigError("field 'model.delay' must be a table");
        const std::string dk = get_string(*tab, "model.delay", "kind");
        if (dk == "integral") {
            desc.delay = IntegralDelayDesc{get_double(*tab, "model.delay", "c0", 0.0), get_double(*tab, "model.delay", "c1", 0.0)};
        } else if (dk != "zero") {
            throw ConfigError(fmt::format("field 'model.delay.kind' must be zero or integral, got '{}'", dk));
        }
    }
    return desc;
}

BernsteinSpec parse_subordinator(const toml::table& root) {
    const toml::table& s = require_table(root, "", "subordinator");
    BernsteinSpec spec;
    spec.kappa = get_double(s, "subordinator", "kappa");
    if (const toml::node* levy = s.get("levy")) {
        const auto* tab = levy->as_table();
        if (!tab) throw ConfigError("field 'subordinator.levy' must be a table");
        const std::string kind = get_string(*tab, "subordinator.levy", "kind");
        const std::string_view p = "subordinator.levy";
        if (kind == "stable") {
            spec.levy = StableJumps{get_double(*tab, p, "alpha"), get_double(*tab, p, "c")};
        } else if (kind == "compound_exp") {
            spec.levy = CompoundExpJumps{get_double(*tab, p, "rate"), get_double(*tab, p, "mean")};
        } else if (kind == "point_mass") {
            spec.levy = PointMassJumps{get_double(*tab, p, "rate"), get_double(*tab, p, "size")};
        } else if (kind != "none") {
            throw ConfigError(fmt::format("field 'subordinator.levy.kind' unknown: '{}'", kind));
        }
    }
    try {
        spec.validate();
    } catch (const std::domain_error& e) {
        throw ConfigError(fmt::format("field 'subordinator': {}", e.what()));
    }
    return spec;
}

Segment parse_segment(const toml::table& segs, std::string_view key, const ModelDescriptor& model, std::size_t dim,
                      const std::filesystem::path& base_dir) {
    const std::string prefix = join("segments", key);
    const toml::table& t = require_table(segs, "segments", key);
    const std::string kind = get_string(t, prefix, "kind");
    const std::size_t intervals = model.r0 > 0.0 ? get_count(t, prefix, "intervals", 64) : 0;
    auto vec = [&](std::string_view field) {
        std::vector<double> v = get_numbers(require_node(t, prefix, field), join(prefix, field));
        if (v.size() == 1 && dim > 1) v.assign(dim, v.front());
        if (v.size() != dim) throw ConfigError(fmt::format("field '{}' must have {} entries", join(prefix, field), dim));
        return v;
    };
    Segment out = Segment::constant(0.0, 0, {0.0});
    if (kind == "constant") {
        out = Segment::constant(model.r0, intervals, vec("value"));
    } else if (kind == "linear") {
        out = Segment::linear(model.r0, intervals, vec("at_zero"), vec("slope"));
    } else if (kind == "csv") {
        std::filesystem::path path = get_string(t, prefix, "path");
        if (path.is_relative()) path = base_dir / path;
        if (!std::filesystem::exists(path))
            throw ConfigError(fmt::format("field '{}.path': file not found: {}", prefix, path.string()));
        try {
            out = read_segment_csv(path);
        } catch (const std::exception& e) {
            throw ConfigError(fmt::format("field '{}.path': {}", prefix, e.what()));
        }
        if (std::abs(out.r0() - model.r0) > 1e-9 || out.dim() != dim)
            throw ConfigError(fmt::format("field '{}.path': segment does not match model.r0 / model.dim", prefix));
    } else {
        throw ConfigError(fmt::format("field '{}.kind' must be constant, linear or csv, got '{}'", prefix, kind));
    }
    return out;
}

std::size_t model_dim(const ModelDescriptor& d) {
    return std::visit([](const auto& drift) { return drift.dim; }, d.drift);
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

std::string num(double v) { return fmt::format("{}", v); }

json jnum(double v) {
    if (std::isfinite(v)) return v;
    return num(v);
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string());
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

json summary_header(const ExperimentConfig& c, std::string_view command) {
    json j;
    j["schema"] = 1;
    j["command"] = command;
    j["config_hash"] = fmt::format("{:016x}", c.config_hash);
    j["seed"] = c.seed;
    return j;
}

void write_summary(const ExperimentConfig& c, const json& j) {
    auto out = open_out(c.out_dir / "summary.json");
    out << j.dump(2) << '\n';
}

ModelSpec build_model(const ExperimentConfig& c) {
    try {
        return make_model(c.model);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("field 'model': {}", e.what()));
    }
}

McParams mc_params(const ExperimentConfig& c) {
    McParams mc;
    mc.n_outer = c.n_outer;
    mc.n_inner = c.n_inner;
    mc.n_moment = c.n_moment;
    mc.seed = c.seed;
    mc.solver = c.solver;
    return mc;
}

json report_json(const VerificationReport& r) {
    json j;
    j["name"] = r.name;
    j["lhs"] = jnum(r.lhs);
    j["lhs_se"] = jnum(r.lhs_se);
    j["rhs"] = jnum(r.rhs);
    j["rhs_se"] = jnum(r.rhs_se);
    j["margin"] = jnum(r.margin);
    j["margin_se"] = jnum(r.margin_se);
    j["pass"] = r.pass;
    j["vacuous"] = r.vacuous;
    json meta = json::object();
    for (const auto& [k, v] : r.metadata) meta[k] = v;
    j["metadata"] = meta;
    return j;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                              std::optional<std::uint64_t> seed_override) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        throw ConfigError(fmt::format("config line {}, column {}: {}", e.source().begin.line, e.source().begin.column,
                                      e.description()));
    }
    ExperimentConfig c;
    c.config_hash = fnv1a(text);
    if (seed_override) {
        c.seed = *seed_override;
    } else {
        const toml::node& n = require_node(root, "", "seed");
        const auto v = n.value<std::int64_t>();
        if (!v || *v < 0) throw ConfigError(fmt::format("field 'seed' must be a nonnegative integer{}", where(n)));
        c.seed = static_cast<std::uint64_t>(*v);
    }
    c.T = get_double(root, "", "T");
    c.model = parse_model(root);
    if (!(c.T > c.model.r0)) throw ConfigError("field 'T' must exceed model.r0");
    c.subordinator = parse_subordinator(root);
    c.p = get_numbers(root, "", "p", c.p);
    for (double p : c.p)
        if (!(p > 1.0)) throw ConfigError(fmt::format("field 'p': p must exceed 1, got {}", p));
    c.epsilons = get_numbers(root, "", "epsilons", c.epsilons);
    for (double e : c.epsilons)
        if (!(e > 0.0 && e < 1.0)) throw ConfigError(fmt::format("field 'epsilons': need 0 < eps < 1, got {}", e));
    c.solver.step = get_double(root, "", "step", 0.0);
    c.solver.clock_grid_step = get_double(root, "", "grid_step", 0.0);
    if (c.solver.step < 0.0 || c.solver.clock_grid_step < 0.0) throw ConfigError("fields 'step' and 'grid_step' must be >= 0");

    const std::size_t dim = model_dim(c.model);
    const toml::table& segs = require_table(root, "", "segments");
    c.xi = parse_segment(segs, "xi", c.model, dim, base_dir);
    c.eta = segs.get("eta") ? parse_segment(segs, "eta", c.model, dim, base_dir) : c.xi;

    if (const toml::node* mcn = root.get("mc")) {
        const auto* mc = mcn->as_table();
        if (!mc) throw ConfigError("field 'mc' must be a table");
        c.n_outer = get_count(*mc, "mc", "n_outer", c.n_outer);
        c.n_inner = get_count(*mc, "mc", "n_inner", c.n_inner);
        c.n_couplings = get_count(*mc, "mc", "n_couplings", c.n_couplings);
        c.n_moment = get_count(*mc, "mc", "n_moment", c.n_moment);
        c.n_bins = get_count(*mc, "mc", "n_bins", c.n_bins);
    }
    if (const toml::node* on = root.get("output")) {
        const auto* o = on->as_table();
        if (!o) throw ConfigError("field 'output' must be a table");
        if (o->get("dir")) {
            c.out_dir = get_string(*o, "output", "dir");
            if (c.out_dir.is_relative()) c.out_dir = base_dir / c.out_dir;
        }
    }
    if (const toml::node* vn = root.get("verify")) {
        const auto* v = vn->as_table();
        if (!v) throw ConfigError("field 'verify' must be a table");
        if (const toml::node* pn = v->get("payoffs")) {
            const auto* arr = pn->as_array();
            if (!arr || arr->empty()) throw ConfigError("field 'verify.payoffs' must be a nonempty array of names");
            c.payoffs.clear();
            for (const auto& e : *arr) {
                const auto s = e.value<std::string>();
                if (!s) throw ConfigError("field 'verify.payoffs' must contain strings");
                try {
                    (void)make_payoff(*s);
                } catch (const std::invalid_argument&) {
                    throw ConfigError(fmt::format("field 'verify.payoffs': unknown payoff '{}'", *s));
                }
                c.payoffs.push_back(*s);
            }
        }
        c.scaling_horizons = get_numbers(*v, "verify", "horizons", c.scaling_horizons);
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    ExperimentConfig c = parse_config(buf.str(), path.parent_path(), seed_override);
    return c;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_simulate(const ExperimentConfig& c, std::ostream& log) {
    const ModelSpec model = build_model(c);
    ensure_dir(c.out_dir);
    const double clock_step = c.solver.resolved_clock_step(model.r0);
    const SubordinatorPath clock =
        sample_path(c.subordinator, c.T, clock_step, derive_seed(c.seed, stream::subordinator, 0));
    GaussianNoise noise(derive_seed(c.seed, stream::brownian, 0));
    const Trajectory traj = solve_path(model, c.xi, clock, c.T, noise, c.solver);
    {
        auto out = open_out(c.out_dir / "trajectory.csv");
        traj.write_csv(out);
    }

    json summary = summary_header(c, "simulate");
    summary["T"] = c.T;
    summary["steps"] = traj.grid().size() - traj.origin() - 1;
    json terminal = json::array();
    for (double v : traj.point(traj.grid().size() - 1)) terminal.push_back(jnum(v));
    summary["terminal"] = terminal;

    // Semigroup statistics for the configured payoffs.
    std::vector<Payoff> payoffs;
    for (const auto& name : c.payoffs) payoffs.push_back(make_payoff(name));
    const auto est = semigroup_estimate(model, c.xi, c.subordinator, payoffs, c.T, c.n_outer, c.n_inner,
                                        derive_seed(c.seed, stream::outer, 0), c.solver);
    {
        auto out = open_out(c.out_dir / "statistics.csv");
        out << "payoff,mean,std_error,between_variance,within_variance,n_outer,n_inner,nan_count\n";
        json stats = json::array();
        for (std::size_t i = 0; i < est.size(); ++i) {
            const auto& e = est[i];
            out << fmt::format("{},{},{},{},{},{},{},{}\n", c.payoffs[i], e.mean, e.std_error, e.between_variance,
                               e.within_variance, e.n_outer, e.n_inner, e.nan_count);
            stats.push_back({{"payoff", c.payoffs[i]}, {"mean", jnum(e.mean)}, {"std_error", jnum(e.std_error)}});
        }
        summary["statistics"] = stats;
    }
    write_summary(c, summary);
    log << fmt::format("simulate: wrote {}\n", c.out_dir.string());
    return 0;
}

int cmd_couple(const ExperimentConfig& c, std::ostream& log) {
    const ModelSpec model = build_model(c);
    ensure_dir(c.out_dir);
    if (c.n_couplings < 2) throw ConfigError("field 'mc.n_couplings' must be at least 2");
    const double clock_step = c.solver.resolved_clock_step(model.r0);
    const double h = c.solver.resolved_step(model.r0);

    auto out = open_out(c.out_dir / "couple.csv");
    out << "epsilon,run,tau,forced,R,M,QV,qv_bound,margin,vacuous,terminal_equal\n";
    json summary = summary_header(c, "couple");
    json per_eps = json::array();
    bool ok = true;
    for (std::size_t e = 0; e < c.epsilons.size(); ++e) {
        const double eps = c.epsilons[e];
        std::vector<CouplingRecord> recs(c.n_couplings);
        parallel_for(c.n_couplings, c.solver.exec, [&](std::size_t i) {
            // The clock is sampled on [0, T + 1] so that ell^eps covers [0, T].
            const SubordinatorPath path =
                sample_path(c.subordinator, c.T + 1.0, clock_step, derive_seed(c.seed, stream::subordinator, i));
            const RegularizedPath reg = regularize(path, eps);
            recs[i] = run_coupling(model, c.xi, c.eta, reg, c.T, derive_seed(c.seed, stream::coupling, i), c.solver,
                                   false);
        });
        std::vector<double> R(recs.size());
        std::size_t violations = 0, vacuous = 0, unequal = 0, late = 0, forced = 0;
        double max_tau = 0.0;
        for (std::size_t i = 0; i < recs.size(); ++i) {
            const CouplingRecord& r = recs[i];
            R[i] = r.R;
            out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", eps, i, r.tau, r.forced ? 1 : 0, r.R, r.M_terminal,
                               r.QV_terminal, r.qv_bound, r.margin(), r.vacuous() ? 1 : 0, r.terminal_equal ? 1 : 0);
            if (r.vacuous()) ++vacuous;
            else if (r.margin() < 0.0) ++violations;
            if (!r.terminal_equal) ++unequal;
            if (r.tau > c.T - model.r0 + 2.0 * h) ++late;
            if (r.forced) ++forced;
            max_tau = std::max(max_tau, r.tau);
        }
        const Estimate mr = estimate_mean(R);
        const bool unit_mean = std::abs(mr.mean - 1.0) <= 3.0 * mr.std_error;
        ok = ok && violations == 0 && unequal == 0 && late == 0;
        per_eps.push_back({{"epsilon", eps},
                           {"n", recs.size()},
                           {"mean_R", jnum(mr.mean)},
                           {"R_std_error", jnum(mr.std_error)},
                           {"mean_R_within_3se", unit_mean},
                           {"qv_violations", violations},
                           {"vacuous_count", vacuous},
                           {"forced_meetings", forced},
                           {"max_tau", max_tau},
                           {"terminal_unequal", unequal},
                           {"late_meetings", late}});
        log << fmt::format("couple eps={}: mean_R={} +- {}, qv violations {}, vacuous {}\n", eps, mr.mean,
                           mr.std_error, violations, vacuous);
    }
    summary["runs"] = per_eps;
    write_summary(c, summary);
    return ok ? 0 : 1;
}

int cmd_verify(const ExperimentConfig& c, const std::vector<std::string>& which, std::ostream& log) {
    const ModelSpec model = build_model(c);
    ensure_dir(c.out_dir);
    const McParams mc = mc_params(c);
    std::vector<std::pair<std::string, VerificationReport>> reports;  // (payoff, report)
    json scaling_json;

    for (const std::string& w : which) {
        if (w == "log") {
            for (const auto& name : c.payoffs) {
                if (!payoff_at_least_one(name))
                    throw ConfigError(fmt::format("field 'verify.payoffs': '{}' is not >= 1, unusable for log", name));
                reports.emplace_back(name, verify_log_harnack(model, c.xi, c.eta, make_payoff(name), c.T,
                                                              c.subordinator, mc));
            }
        } else if (w == "power") {
            for (const auto& name : c.payoffs)
                for (double p : c.p) {
                    VerificationReport r =
                        verify_power_harnack(model, c.xi, c.eta, make_payoff(name), c.T, p, c.subordinator, mc);
                    reports.emplace_back(name, std::move(r));
                }
        } else if (w == "tv") {
            TvReport tv = entropy_tv_report(model, c.xi, c.eta, c.T, c.subordinator, mc, c.n_bins, c.p.front());
            reports.emplace_back("first_coordinate", std::move(tv.pinsker));
        } else if (w == "scaling") {
            ScalingReport s;
            try {
                s = stable_scaling_check(0.0, c.subordinator, c.scaling_horizons, c.n_moment,
                                         derive_seed(c.seed, stream::probe, 1), c.solver.resolved_clock_step(0.0),
                                         c.solver.exec);
            } catch (const std::domain_error& e) {
                throw ConfigError(fmt::format("field 'subordinator': {}", e.what()));
            }
            VerificationReport r;
            r.name = "scaling";
            r.pass = s.pass;
            if (s.drift_regime) {
                r.lhs = *std::ranges::min_element(s.drift_products);
                r.rhs = 0.5;
                r.margin = r.lhs - r.rhs;
            } else {
                r.lhs = s.slope;
                r.rhs = s.target_slope;
                r.margin = 0.15 - std::abs(s.slope - s.target_slope);
            }
            json rows = json::array();
            for (std::size_t j = 0; j < s.horizons.size(); ++j)
                rows.push_back({{"horizon", s.horizons[j]}, {"moment", jnum(s.moment[j])}, {"moment_se", jnum(s.moment_se[j])},
                                {"drift_product", jnum(s.drift_products[j])}});
            scaling_json = {{"slope", s.slope}, {"intercept", s.intercept}, {"target_slope", s.target_slope},
                            {"drift_regime", s.drift_regime}, {"horizons", rows}};
            r.metadata["subordinator"] = c.subordinator.describe();
            r.metadata["n_moment"] = fmt::format("{}", c.n_moment);
            reports.emplace_back("", std::move(r));
        } else {
            throw ConfigError(fmt::format("--which: unknown verification '{}'", w));
        }
    }

    auto out = open_out(c.out_dir / "verify.csv");
    out << "name,payoff,p,lhs,lhs_se,rhs,rhs_se,margin,margin_se,pass,vacuous\n";
    std::size_t pass = 0, fail = 0, vac = 0;
    double worst = kInfinity;
    json list = json::array();
    for (const auto& [payoff, r] : reports) {
        const auto pit = r.metadata.find("p");
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.name, payoff, pit == r.metadata.end() ? "" : pit->second,
                           r.lhs, r.lhs_se, r.rhs, r.rhs_se, r.margin, r.margin_se, r.pass ? 1 : 0, r.vacuous ? 1 : 0);
        if (r.vacuous) ++vac;
        if (r.pass) ++pass;
        else ++fail;
        if (!r.vacuous) worst = std::min(worst, r.margin);
        json j = report_json(r);
        j["payoff"] = payoff;
        list.push_back(j);
        log << fmt::format("{} {} {}: margin {} ({})\n", r.pass ? "PASS" : "FAIL", r.name, payoff, r.margin,
                           r.vacuous ? "vacuous" : fmt::format("se {}", r.margin_se));
    }
    json summary = summary_header(c, "verify");
    summary["pass_count"] = pass;
    summary["fail_count"] = fail;
    summary["vacuous_count"] = vac;
    summary["worst_margin"] = jnum(worst);
    summary["reports"] = list;
    if (!scaling_json.is_null()) summary["scaling"] = scaling_json;
    write_summary(c, summary);
    return fail == 0 ? 0 : 1;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"subharnack: coupling and Harnack-bound experiments for subordinated functional SDEs"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::size_t jobs = 1;
    std::vector<std::string> which{"log", "power", "tv"};
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "TOML experiment config")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--jobs", jobs, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    };
    CLI::App* simulate = app.add_subcommand("simulate", "one trajectory plus semigroup statistics");
    CLI::App* couple = app.add_subcommand("couple", "coupling runs with Girsanov densities");
    CLI::App* verify = app.add_subcommand("verify", "Monte Carlo checks of the Harnack-type bounds");
    common(simulate);
    common(couple);
    common(verify);
    verify->add_option("--which", which, "log, power, tv, scaling")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }
    try {
        ExperimentConfig c = load_config(config_path, seed);
        if (!out_dir.empty()) c.out_dir = out_dir;
        c.solver.exec.jobs = jobs;
        if (simulate->parsed()) return cmd_simulate(c, out);
        if (couple->parsed()) return cmd_couple(c, out);
        return cmd_verify(c, which, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace subharnack::cli

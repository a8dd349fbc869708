#include "anderson/cli.hpp"

#include "anderson/closed_forms.hpp"
#include "anderson/numerics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace anderson {

namespace {

const std::set<std::string> kCommands = {"bounds", "gap", "converge", "holder", "simulate"};

const std::map<std::string, std::set<std::string>> kKeys = {
    {"run", {"command", "equation", "seeds", "seed_base", "m"}},
    {"noise", {"regime", "alpha", "h", "dim", "h0", "g0_tau", "g0_values"}},
    {"sequence", {"values", "sign", "scale", "j_start", "j_end"}},
    {"grid", {"t", "x"}},
    {"lattice", {"tau_max", "xi_max", "n_tau", "n_xi"}},
    {"quadrature", {"backend", "level", "qmc_points", "qmc_shifts", "qmc_seed", "tolerance", "orders"}},
    {"gap", {"tolerance"}},
    {"converge", {"quadrature"}},
    {"bounds", {"values", "halfwidth", "m_max"}},
    {"holder", {"direction", "p", "beta", "delta", "thetas", "start", "step", "count", "fixed", "tolerance"}},
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : v) {
        if (ch == ',' || ch == ' ' || ch == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

class Entries {
public:
    explicit Entries(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    std::optional<std::string> get(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return std::nullopt;
        return it->second;
    }
    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    double number(const std::string& key, double def) const {
        const auto v = get(key);
        return v ? parse_number(key, *v) : def;
    }
    long long integer(const std::string& key, long long def) const {
        const auto v = get(key);
        return v ? parse_integer(key, *v) : def;
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> def) const {
        const auto v = get(key);
        if (!v) return def;
        std::vector<double> out;
        for (const auto& s : split_list(*v)) out.push_back(parse_number(key, s));
        if (out.empty()) throw ConfigError(key + ": empty list");
        return out;
    }
    std::string word(const std::string& key, const std::string& def) const { return get(key).value_or(def); }
    bool flag(const std::string& key, bool def) const {
        const auto v = get(key);
        if (!v) return def;
        if (*v == "true" || *v == "yes" || *v == "1") return true;
        if (*v == "false" || *v == "no" || *v == "0") return false;
        throw ConfigError(key + ": expected true or false, got '" + *v + "'");
    }

    static double parse_number(const std::string& key, const std::string& s) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(s, &pos);
            if (pos != s.size() || !std::isfinite(d)) throw std::invalid_argument(s);
            return d;
        } catch (const std::exception&) {
            throw ConfigError(key + ": not a number: '" + s + "'");
        }
    }
    static long long parse_integer(const std::string& key, const std::string& s) {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(key + ": not an integer: '" + s + "'");
        }
    }

private:
    std::map<std::string, std::string> kv_;
};

std::map<std::string, std::string> read_entries(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!kKeys.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        if (section.empty()) throw ConfigError(where + "key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!kKeys.at(section).count(key)) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
        const std::string full = section + "." + key;
        if (kv.count(full)) throw ConfigError(where + "duplicate key " + full);
        if (value.empty()) throw ConfigError(where + "empty value for " + full);
        kv[full] = value;
    }
    return kv;
}

template <class F>
void as_config_error(const std::string& what, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string na() { return "NA"; }

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : na(); }

// decreasing with at most `allowed` rises between neighbours, and last < first
bool decreasing_trend(const std::vector<double>& v, int allowed) {
    if (v.size() < 2) return false;
    int rises = 0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
        if (!(v[i + 1] < v[i])) ++rises;
    return rises <= allowed && v.back() < v.front();
}

}  // namespace

NoiseParam RunConfig::param(double theta) const {
    NoiseParam p = rough ? make_rough(theta, temporal.h0) : make_regular(theta, dim, temporal.h0);
    p.temporal = temporal;
    return p;
}

std::vector<NoiseParam> RunConfig::theta_sequence() const {
    std::vector<NoiseParam> out;
    if (!sequence.empty()) {
        for (double v : sequence) out.push_back(param(v));
        return out;
    }
    for (int j = j_start; j <= j_end; ++j) out.push_back(param(theta_star + dyadic_sign * dyadic_scale * std::ldexp(1.0, -j)));
    return out;
}

std::vector<SpaceTimePoint> RunConfig::grid_points() const {
    std::vector<SpaceTimePoint> pts;
    for (double t : t_grid)
        for (double x : x_grid) {
            SpaceTimePoint p;
            p.t = t;
            p.x = Eigen::VectorXd::Zero(dim);
            p.x[0] = x;
            pts.push_back(p);
        }
    return pts;
}

Lattice RunConfig::lattice_for(double t_horizon) const { return lattice ? *lattice : default_lattice(t_horizon, dim); }

RunConfig parse_config(const std::string& text, const std::string& command) {
    if (!kCommands.count(command)) throw ConfigError("unknown command '" + command + "'");
    const auto kv = read_entries(text);
    const Entries e(kv);
    RunConfig c;
    c.command = command;
    c.echo = kv;
    if (auto cmd = e.get("run.command"); cmd && *cmd != command)
        throw ConfigError("config is for command '" + *cmd + "', invoked as '" + command + "'");
    as_config_error("run.equation", [&] { c.equation = parse_equation(e.word("run.equation", "heat")); });
    const long long seeds = e.integer("run.seeds", 1000);
    if (seeds < 1) throw ConfigError("run.seeds must be positive");
    c.seeds = static_cast<std::size_t>(seeds);
    const long long base = e.integer("run.seed_base", 0);
    if (base < 0) throw ConfigError("run.seed_base must be non-negative");
    c.seed_base = static_cast<std::uint64_t>(base);
    c.m = static_cast<int>(e.integer("run.m", 2));
    if (c.m < 0 || c.m > 3) throw ConfigError("run.m must lie in 0..3");

    const std::string regime = e.word("noise.regime", "regular");
    if (regime != "regular" && regime != "rough") throw ConfigError("noise.regime must be regular or rough");
    c.rough = regime == "rough";
    if (c.rough && e.has("noise.alpha")) throw ConfigError("noise.alpha applies to the regular regime");
    if (!c.rough && e.has("noise.h")) throw ConfigError("noise.h applies to the rough regime");
    if (c.rough && e.has("noise.dim") && e.integer("noise.dim", 1) != 1)
        throw ConfigError("the rough regime is one-dimensional");
    c.theta_star = c.rough ? e.number("noise.h", 0.3) : e.number("noise.alpha", 0.5);
    c.dim = static_cast<int>(e.integer("noise.dim", 1));
    c.temporal.h0 = e.number("noise.h0", 0.75);
    if (e.has("noise.g0_tau") != e.has("noise.g0_values"))
        throw ConfigError("noise.g0_tau and noise.g0_values go together");
    if (e.has("noise.g0_tau")) {
        c.temporal.table_tau = e.numbers("noise.g0_tau", {});
        c.temporal.table_g0 = e.numbers("noise.g0_values", {});
    }
    as_config_error("noise", [&] { require_admissible(c.target(), c.equation); });

    c.sequence = e.numbers("sequence.values", {});
    const std::string sign = e.word("sequence.sign", "+");
    if (sign != "+" && sign != "-") throw ConfigError("sequence.sign must be + or -");
    c.dyadic_sign = sign == "+" ? 1.0 : -1.0;
    c.dyadic_scale = e.number("sequence.scale", 1.0);
    if (!(c.dyadic_scale > 0.0)) throw ConfigError("sequence.scale must be positive");
    c.j_start = static_cast<int>(e.integer("sequence.j_start", 1));
    c.j_end = static_cast<int>(e.integer("sequence.j_end", c.j_start + 5));
    if (c.j_start < 0 || c.j_end < c.j_start || c.j_end > 60) throw ConfigError("sequence.j_start..j_end is invalid");

    c.t_grid = e.numbers("grid.t", {1.0});
    c.x_grid = e.numbers("grid.x", {0.0});
    for (double t : c.t_grid)
        if (!(t > 0.0)) throw ConfigError("grid.t values must be positive");

    if (e.has("lattice.tau_max") || e.has("lattice.xi_max") || e.has("lattice.n_tau") || e.has("lattice.n_xi")) {
        const double horizon = *std::max_element(c.t_grid.begin(), c.t_grid.end());
        Lattice l = default_lattice(horizon, c.dim);
        l.tau_max = e.number("lattice.tau_max", l.tau_max);
        l.xi_max = e.number("lattice.xi_max", l.xi_max);
        l.n_tau = static_cast<int>(e.integer("lattice.n_tau", l.n_tau));
        l.n_xi = static_cast<int>(e.integer("lattice.n_xi", l.n_xi));
        as_config_error("lattice", [&] { check_lattice(l); });
        c.lattice = l;
    }

    const std::string backend = e.word("quadrature.backend", "auto");
    if (backend == "auto")
        c.quad.backend = QuadratureConfig::Backend::Auto;
    else if (backend == "tensor")
        c.quad.backend = QuadratureConfig::Backend::Tensor;
    else if (backend == "qmc")
        c.quad.backend = QuadratureConfig::Backend::QMC;
    else
        throw ConfigError("quadrature.backend must be auto, tensor or qmc");
    c.quad.level = static_cast<int>(e.integer("quadrature.level", c.quad.level));
    if (c.quad.level < 2) throw ConfigError("quadrature.level must be at least 2");
    const long long qp = e.integer("quadrature.qmc_points", static_cast<long long>(c.quad.qmc_points));
    if (qp < 16) throw ConfigError("quadrature.qmc_points must be at least 16");
    c.quad.qmc_points = static_cast<std::size_t>(qp);
    c.quad.qmc_shifts = static_cast<int>(e.integer("quadrature.qmc_shifts", c.quad.qmc_shifts));
    if (c.quad.qmc_shifts < 2) throw ConfigError("quadrature.qmc_shifts must be at least 2");
    const long long qs = e.integer("quadrature.qmc_seed", static_cast<long long>(c.quad.qmc_seed));
    if (qs < 0) throw ConfigError("quadrature.qmc_seed must be non-negative");
    c.quad.qmc_seed = static_cast<std::uint64_t>(qs);
    c.quad.tolerance = e.number("quadrature.tolerance", 0.0);
    if (c.quad.tolerance < 0.0) throw ConfigError("quadrature.tolerance must be non-negative");
    c.orders.clear();
    for (double k : e.numbers("quadrature.orders", {1.0})) {
        if (k != std::floor(k) || k < 1 || k > 6) throw ConfigError("quadrature.orders must be integers in 1..6");
        c.orders.push_back(static_cast<int>(k));
    }
    c.gap_tolerance = e.number("gap.tolerance", c.gap_tolerance);
    c.converge_quadrature = e.flag("converge.quadrature", true);

    c.bound_values = e.numbers("bounds.values", {});
    c.bound_halfwidth = e.number("bounds.halfwidth", c.bound_halfwidth);
    if (!(c.bound_halfwidth > 0.0)) throw ConfigError("bounds.halfwidth must be positive");
    c.bound_m_max = static_cast<int>(e.integer("bounds.m_max", c.bound_m_max));
    if (c.bound_m_max < 1 || c.bound_m_max > 1000) throw ConfigError("bounds.m_max must lie in 1..1000");

    const std::string dir = e.word("holder.direction", "time");
    if (dir != "time" && dir != "space") throw ConfigError("holder.direction must be time or space");
    c.direction = dir == "time" ? Direction::Time : Direction::Space;
    c.p = e.number("holder.p", 2.0);
    if (!(c.p >= 2.0)) throw ConfigError("holder.p must be at least 2");
    if (e.has("holder.beta")) c.beta = e.number("holder.beta", 0.0);
    if (e.has("holder.delta")) c.delta = e.number("holder.delta", 0.0);
    if (c.beta && !(*c.beta > 0.0 && *c.beta < 1.0)) throw ConfigError("holder.beta must lie in (0, 1)");
    if (c.delta && !(*c.delta > 0.0 && *c.delta < 1.0)) throw ConfigError("holder.delta must lie in (0, 1)");
    c.holder_thetas = e.numbers("holder.thetas", {});
    c.transect_start = e.number("holder.start", c.direction == Direction::Time ? 0.5 : 0.0);
    c.transect_step = e.number("holder.step", 0.0625);
    c.transect_count = static_cast<int>(e.integer("holder.count", 9));
    c.transect_fixed = e.number("holder.fixed", c.direction == Direction::Time ? 0.0 : 1.0);
    c.slope_tolerance = e.number("holder.tolerance", 0.1);
    if (!(c.transect_step > 0.0)) throw ConfigError("holder.step must be positive");

    // command-specific checks
    auto admissible = [&](const std::string& what, const std::vector<double>& vals) {
        for (double v : vals) as_config_error(what, [&] { require_admissible(c.param(v), c.equation); });
    };
    if (command == "gap" || command == "converge") {
        as_config_error("sequence", [&] {
            for (const auto& p : c.theta_sequence()) require_admissible(p, c.equation);
        });
    }
    if (command == "simulate") admissible("sequence.values", c.sequence);
    if (command == "bounds") {
        for (double v : c.bound_values) as_config_error("bounds.values", [&] { check_structure(c.param(v)); });
    }
    if (command == "holder") {
        admissible("holder.thetas", c.holder_thetas);
        if (c.transect_count < 3) throw ConfigError("holder.count must be at least 3");
        if (c.direction == Direction::Time && !(c.transect_start > 0.0))
            throw ConfigError("time transect must start at t > 0");
        if (c.direction == Direction::Space && !(c.transect_fixed > 0.0))
            throw ConfigError("space transect needs holder.fixed = t > 0");
        if (c.rough && !c.delta) throw ConfigError("holder.delta is required for the rough regime");
        if (!c.rough && !c.beta) {
            // just above the smallest admissible beta over the theta set
            const auto& th = c.holder_thetas;
            const double amin = th.empty() ? c.theta_star : *std::min_element(th.begin(), th.end());
            c.beta = std::min(0.5 * (c.dim - amin) + 0.1, 0.99);
        }
    }
    if ((command == "converge" || command == "simulate" || command == "holder") && c.dim > 1 &&
        c.equation == Equation::Wave)
        throw ConfigError("Monte Carlo for the wave equation is limited to d = 1");
    return c;
}

RunConfig load_config(const std::filesystem::path& path, const std::string& command) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), command);
}

std::string config_hash(const RunConfig& c, const RunOptions& o) {
    std::string canon = c.command + "\n";
    for (const auto& [k, v] : c.echo) canon += k + "=" + v + "\n";
    canon += "seed_offset=" + std::to_string(o.seed_offset) + "\n";
    return hex64(fnv1a64(canon));
}

std::string render_csv(const CsvTable& t, const std::string& comment) {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += csv_field(fields[i]);
        }
        out += '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("KS statistic needs two nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double loglog_slope(const std::vector<IncrementStat>& stats) {
    std::vector<double> lx, ly;
    for (const auto& s : stats)
        if (s.estimate > 0.0 && s.lag > 0.0) {
            lx.push_back(std::log(s.lag));
            ly.push_back(std::log(s.estimate));
        }
    if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::Map<const Eigen::ArrayXd> X(lx.data(), static_cast<Eigen::Index>(lx.size()));
    const Eigen::Map<const Eigen::ArrayXd> Y(ly.data(), static_cast<Eigen::Index>(ly.size()));
    const double mx = X.mean(), my = Y.mean();
    const double sxx = (X - mx).square().sum();
    if (!(sxx > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return ((X - mx) * (Y - my)).sum() / sxx;
}

std::vector<std::uint64_t> seed_list(const RunConfig& c, const RunOptions& o) {
    std::vector<std::uint64_t> s(c.seeds);
    for (std::size_t i = 0; i < c.seeds; ++i) s[i] = c.seed_base + o.seed_offset + i;
    return s;
}

CommandResult cmd_bounds(const RunConfig& c, const RunOptions&) {
    const std::vector<double> values = c.bound_values.empty() ? std::vector<double>{c.theta_star} : c.bound_values;
    const double t = c.t_grid.front();
    const Equation eq = c.equation;
    CsvTable tab;
    tab.name = "bounds";
    tab.header = {"theta", "admissible", "condition", "margin", "ell", "k_value", "k_bound", "r_alpha",
                  "k_alpha_t", "c_h1", "c_h2", "m0"};
    for (int m = 1; m <= c.bound_m_max; ++m) tab.header.push_back("tail_m" + std::to_string(m));
    bool value_le_bound = true;
    bool tails_monotone = true;
    for (double v : values) {
        const NoiseParam p = c.param(v);
        const ExistenceReport rep = validate_existence(p, eq);
        std::vector<std::string> row = {theta_label(p), rep.admissible ? "true" : "false", rep.condition_checked,
                                        fmt(rep.margin), fmt(lower_endpoint_ell(eq, p.temporal.h0))};
        std::vector<std::string> tails(static_cast<std::size_t>(c.bound_m_max), na());
        std::string m0s = na();
        if (p.is_regular()) {
            const int d = p.regular().dim;
            const double a = p.regular().alpha;
            const bool strip = a > std::max(d - 2, 0) && a < d;
            if (strip) {
                const DalangConstant k = dalang_constant(d, a);
                if (!(k.value <= k.bound)) value_le_bound = false;
                row.insert(row.end(), {fmt(k.value), fmt(k.bound), fmt(k.r(eq)), fmt(heat_k_alpha(t, d, a))});
            } else {
                row.insert(row.end(), {na(), na(), na(), na()});
            }
            row.insert(row.end(), {na(), na()});
            const double lo = a - c.bound_halfwidth, hi = a + c.bound_halfwidth;
            const bool strip_ab = lo > std::max(d - 2, 0) && hi < d;
            if (strip_ab && !p.temporal.tabulated()) {
                const double g0t = gamma0_window(t, p.temporal.h0);
                const int m0 = tail_threshold(eq, d, lo);
                m0s = std::to_string(m0);
                double prev = std::numeric_limits<double>::infinity();
                for (int m = m0; m <= c.bound_m_max; ++m) {
                    const double tb = chaos_tail_bound(eq, d, lo, hi, t, m, g0t);
                    if (tb > prev) tails_monotone = false;
                    prev = tb;
                    tails[static_cast<std::size_t>(m - 1)] = fmt(tb);
                }
            }
        } else {
            row.insert(row.end(), {na(), na(), na(), na()});
            std::string c1 = na(), c2 = na();
            try {
                const RoughConstants rc = rough_constants(eq, p.rough().h, p.temporal.h0);
                c1 = fmt(rc.c_h1);
                c2 = fmt(rc.c_h2);
            } catch (const std::domain_error&) {
            }
            row.insert(row.end(), {c1, c2});
        }
        row.push_back(m0s);
        row.insert(row.end(), tails.begin(), tails.end());
        tab.rows.push_back(std::move(row));
    }
    CommandResult r;
    r.tables.push_back(std::move(tab));
    r.summary["rows"] = std::to_string(values.size());
    r.summary["value_le_bound"] = value_le_bound ? "true" : "false";
    r.summary["tails_monotone"] = tails_monotone ? "true" : "false";
    return r;
}

CommandResult cmd_gap(const RunConfig& c, const RunOptions& o) {
    std::vector<NoiseParam> list = c.theta_sequence();
    const std::size_t n_seq = list.size();
    list.push_back(c.target());
    const double t = c.t_grid.front();
    QuadratureConfig q = c.quad;
    q.threads = o.threads;
    q.tolerance = 0.0;  // checked below against the larger of the two moments
    CommandResult r;
    CsvTable tab;
    tab.name = "gap";
    tab.header = {"k", "n", "theta", "q", "error", "method", "clipped", "moment", "moment_target"};
    CsvTable sum;
    sum.name = "gap_summary";
    sum.header = {"k", "q_first", "q_last", "status"};
    auto finish = [&]() {
        CommandResult out = r;
        out.tables = {tab, sum};
        return out;
    };
    for (int k : c.orders) {
        MomentSweep sw;
        try {
            sw = moment_sweep(list, n_seq, c.equation, t, k, q);
        } catch (const std::runtime_error& e) {
            throw NumericalFailure(e.what(), finish());
        }
        std::vector<double> qs;
        std::string failure;
        for (std::size_t n = 0; n < n_seq; ++n) {
            const MomentResult& g = sw.gap[n];
            qs.push_back(g.value);
            tab.rows.push_back({std::to_string(k), std::to_string(n + 1), theta_label(list[n]), fmt(g.value),
                                fmt(g.error_estimate), to_string(g.method), g.clipped ? "true" : "false",
                                fmt(sw.moment[n].value), fmt(sw.moment[n_seq].value)});
            const double scale = std::max(sw.moment[n].value, sw.moment[n_seq].value);
            if (failure.empty() && c.quad.tolerance > 0.0 && g.error_estimate > c.quad.tolerance * scale)
                failure = "gap error estimate " + format_double(g.error_estimate) + " exceeds tolerance at k=" +
                          std::to_string(k) + ", n=" + std::to_string(n + 1);
        }
        const std::size_t tail = std::min<std::size_t>(3, qs.size());
        bool dec = tail >= 2;
        for (std::size_t i = qs.size() - tail; i + 1 < qs.size(); ++i)
            if (!(qs[i + 1] < qs[i])) dec = false;
        const bool conv = dec && qs.back() < c.gap_tolerance;
        sum.rows.push_back({std::to_string(k), fmt(qs.front()), fmt(qs.back()), conv ? "CONVERGENT" : "NOT_CONVERGENT"});
        r.summary["k" + std::to_string(k)] = conv ? "CONVERGENT" : "NOT_CONVERGENT";
        if (!failure.empty()) throw NumericalFailure(failure, finish());
    }
    return finish();
}

CommandResult cmd_converge(const RunConfig& c, const RunOptions& o, std::vector<KSReport>* reports) {
    std::vector<NoiseParam> list = c.theta_sequence();
    const std::size_t n_seq = list.size();
    list.push_back(c.target());
    SpaceTimePoint pt;
    pt.t = c.t_grid.front();
    pt.x = Eigen::VectorXd::Zero(c.dim);
    pt.x[0] = c.x_grid.front();
    SamplerConfig sc;
    sc.threads = o.threads;
    const EnsembleTable tab =
        coupled_ensemble(seed_list(c, o), list, c.equation, {pt}, c.m, c.lattice_for(pt.t), sc);
    const std::size_t ns = tab.seeds.size();

    std::vector<double> qsum(n_seq, 0.0), qerr(n_seq, 0.0);
    if (c.converge_quadrature) {
        QuadratureConfig q = c.quad;
        q.threads = o.threads;
        for (int k = 1; k <= c.m; ++k) {
            const MomentSweep sw = moment_sweep(list, n_seq, c.equation, pt.t, k, q);
            for (std::size_t n = 0; n < n_seq; ++n) {
                qsum[n] += sw.gap[n].value;
                qerr[n] += sw.gap[n].error_estimate;
            }
        }
    }
    std::vector<double> target(ns);
    for (std::size_t s = 0; s < ns; ++s) target[s] = tab.value(s, n_seq, 0);

    CsvTable out;
    out.name = "converge";
    out.header = {"n", "theta", "coupled_gap", "gap_se", "ks", "sample_size", "quad_gap", "quad_error", "allowance",
                  "within"};
    std::vector<double> gaps, kss;
    bool all_within = true;
    for (std::size_t n = 0; n < n_seq; ++n) {
        std::vector<double> u(ns);
        Eigen::ArrayXd d2(static_cast<Eigen::Index>(ns));
        for (std::size_t s = 0; s < ns; ++s) {
            u[s] = tab.value(s, n, 0);
            d2[static_cast<Eigen::Index>(s)] = (u[s] - target[s]) * (u[s] - target[s]);
        }
        const double gap = d2.mean();
        const double se =
            ns > 1 ? std::sqrt((d2 - gap).square().sum() / static_cast<double>(ns - 1) / static_cast<double>(ns)) : 0.0;
        const double ks = ks_two_sample(u, target);
        gaps.push_back(gap);
        kss.push_back(ks);
        if (reports) reports->push_back({list[n], ks, ns});
        std::vector<std::string> row = {std::to_string(n + 1), theta_label(list[n]), fmt(gap), fmt(se), fmt(ks),
                                        std::to_string(ns)};
        if (c.converge_quadrature) {
            // Monte Carlo, quadrature and lattice truncation (5 % of the continuum value)
            const double allowance = 3.0 * se + qerr[n] + 0.05 * qsum[n];
            const bool within = std::abs(gap - qsum[n]) <= allowance;
            all_within = all_within && within;
            row.insert(row.end(), {fmt(qsum[n]), fmt(qerr[n]), fmt(allowance), within ? "true" : "false"});
        } else {
            row.insert(row.end(), {na(), na(), na(), na()});
        }
        out.rows.push_back(std::move(row));
    }
    CommandResult r;
    r.tables.push_back(std::move(out));
    r.summary["gap_trend"] = decreasing_trend(gaps, 1) ? "DECREASING" : "NOT_DECREASING";
    r.summary["ks_trend"] = decreasing_trend(kss, 1) ? "DECREASING" : "NOT_DECREASING";
    r.summary["quadrature_match"] = c.converge_quadrature ? (all_within ? "true" : "false") : "NA";
    return r;
}

CommandResult cmd_holder(const RunConfig& c, const RunOptions& o) {
    const std::vector<double> thetas = c.holder_thetas.empty() ? std::vector<double>{c.theta_star} : c.holder_thetas;
    std::vector<NoiseParam> list;
    for (double v : thetas) list.push_back(c.param(v));
    std::vector<SpaceTimePoint> pts;
    for (int i = 0; i < c.transect_count; ++i) {
        SpaceTimePoint p;
        p.x = Eigen::VectorXd::Zero(c.dim);
        const double z = c.transect_start + i * c.transect_step;
        if (c.direction == Direction::Time) {
            p.t = z;
            p.x[0] = c.transect_fixed;
        } else {
            p.t = c.transect_fixed;
            p.x[0] = z;
        }
        pts.push_back(p);
    }
    double horizon = 0.0;
    for (const auto& p : pts) horizon = std::max(horizon, p.t);
    SamplerConfig sc;
    sc.threads = o.threads;
    const EnsembleTable tab = coupled_ensemble(seed_list(c, o), list, c.equation, pts, c.m, c.lattice_for(horizon), sc);

    double theory;
    if (c.rough)
        theory = c.direction == Direction::Time ? c.p * *c.delta / 2.0 : c.p * *c.delta;
    else if (c.direction == Direction::Space || c.equation == Equation::Wave)
        theory = c.p * (1.0 - *c.beta);
    else
        theory = c.p * (1.0 - *c.beta) / 2.0;

    CsvTable inc;
    inc.name = "holder_increments";
    inc.header = {"theta", "lag", "p", "estimate", "std_error"};
    CsvTable slopes;
    slopes.name = "holder";
    slopes.header = {"theta", "slope", "theory", "tolerance", "verdict"};
    double min_slope = std::numeric_limits<double>::infinity();
    bool undefined = false;
    for (std::size_t th = 0; th < list.size(); ++th) {
        const auto stats = increment_moments(tab, c.direction, c.p, th);
        for (const auto& s : stats)
            inc.rows.push_back({theta_label(list[th]), fmt(s.lag), fmt(s.p), fmt(s.estimate), fmt(s.std_error)});
        const double slope = loglog_slope(stats);
        if (std::isnan(slope)) undefined = true;
        else min_slope = std::min(min_slope, slope);
        const std::string verdict = std::isnan(slope) ? na() : (slope >= theory - c.slope_tolerance ? "PASS" : "FAIL");
        slopes.rows.push_back({theta_label(list[th]), fmt(slope), fmt(theory), fmt(c.slope_tolerance), verdict});
    }
    CommandResult r;
    r.tables = {slopes, inc};
    r.summary["theory"] = fmt(theory);
    r.summary["min_slope"] = undefined ? na() : fmt(min_slope);
    r.summary["verdict"] = undefined ? na() : (min_slope >= theory - c.slope_tolerance ? "PASS" : "FAIL");
    return r;
}

CommandResult cmd_simulate(const RunConfig& c, const RunOptions& o) {
    std::vector<NoiseParam> list = {c.target()};
    for (double v : c.sequence) list.push_back(c.param(v));
    const auto pts = c.grid_points();
    SamplerConfig sc;
    sc.threads = o.threads;
    const double horizon = *std::max_element(c.t_grid.begin(), c.t_grid.end());
    const EnsembleTable tab = coupled_ensemble(seed_list(c, o), list, c.equation, pts, c.m, c.lattice_for(horizon), sc);
    CsvTable out;
    out.name = "simulate";
    out.header = {"seed", "theta", "t", "x", "value"};
    std::vector<std::string> labels, ts, xs;
    for (const auto& p : list) labels.push_back(theta_label(p));
    for (const auto& p : pts) {
        ts.push_back(format_double(p.t));
        std::string x;
        for (Eigen::Index i = 0; i < p.x.size(); ++i) x += (i ? " " : "") + format_double(p.x[i]);
        xs.push_back(x);
    }
    double sum = 0.0;
    for (std::size_t s = 0; s < tab.seeds.size(); ++s)
        for (std::size_t th = 0; th < list.size(); ++th)
            for (std::size_t p = 0; p < pts.size(); ++p) {
                const double v = tab.value(s, th, p);
                if (th == 0 && p == 0) sum += v;
                out.rows.push_back({std::to_string(tab.seeds[s]), labels[th], ts[p], xs[p], format_double(v)});
            }
    CommandResult r;
    r.tables.push_back(std::move(out));
    r.summary["samples"] = std::to_string(tab.samples.size());
    r.summary["mean_first"] = fmt(sum / static_cast<double>(tab.seeds.size()));
    return r;
}

namespace {

void write_outputs(const RunConfig& c, const RunOptions& o, const CommandResult& r, const std::string& status,
                   const std::string& message, double wall) {
    std::filesystem::create_directories(o.out_dir);
    const std::string hash = config_hash(c, o);
    const std::string comment = std::string("anderson-chaos v") + kVersion + " config-hash=" + hash;
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& t : r.tables) {
        const auto path = o.out_dir / (t.name + ".csv");
        std::ofstream f(path, std::ios::binary);
        f << render_csv(t, comment);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        outputs.push_back(path.filename().string());
    }
    nlohmann::json man;
    man["tool"] = "anderson-chaos";
    man["version"] = kVersion;
    man["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                           std::to_string(EIGEN_MINOR_VERSION);
    man["command"] = c.command;
    man["config_hash"] = hash;
    man["config"] = c.echo;
    man["seed_offset"] = o.seed_offset;
    man["threads"] = resolve_threads(o.threads);
    man["wall_time_s"] = wall;
    man["status"] = status;
    if (!message.empty()) man["message"] = message;
    man["summary"] = r.summary;
    man["outputs"] = outputs;
    std::ofstream f(o.out_dir / (c.command + ".json"), std::ios::binary);
    f << man.dump(2) << '\n';
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Chaos-expansion diagnostics for Anderson models with Gaussian noise"};
    std::string command, config;
    std::string out_dir = ".";
    int threads = 0;
    std::uint64_t seed_offset = 0;
    app.add_option("command", command, "bounds | gap | converge | holder | simulate")->required();
    app.add_option("--config", config, "key = value config file")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (overrides ANDERSON_CHAOS_THREADS)")->check(CLI::PositiveNumber);
    app.add_option("--seed-offset", seed_offset, "added to every seed");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    RunOptions o;
    o.out_dir = out_dir;
    o.threads = threads;
    o.seed_offset = seed_offset;
    RunConfig c;
    try {
        c = load_config(config, command);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    CommandResult r;
    try {
        if (command == "bounds") r = cmd_bounds(c, o);
        else if (command == "gap") r = cmd_gap(c, o);
        else if (command == "converge") r = cmd_converge(c, o);
        else if (command == "holder") r = cmd_holder(c, o);
        else r = cmd_simulate(c, o);
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        try {
            write_outputs(c, o, e.partial, "failed", e.what(), elapsed());
        } catch (const std::exception& w) {
            err << "error: " << w.what() << '\n';
        }
        return 3;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    try {
        write_outputs(c, o, r, "ok", "", elapsed());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
    for (const auto& [k, v] : r.summary) out << k << " = " << v << '\n';
    return 0;
}

}  // namespace anderson

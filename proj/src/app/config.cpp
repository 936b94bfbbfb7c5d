#include "pdeinv/app/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

namespace pdeinv {

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& msg)
    : InvalidArgument(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + msg), line_(line) {}

namespace {

struct Cursor {
    const std::string& s;
    std::size_t i = 0;
    void skip() {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    }
    bool done() {
        skip();
        return i >= s.size();
    }
};

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
    if (k.empty() || k.front() == '.' || k.back() == '.') return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    return true;
}

ConfigValue parse_value(Cursor& c, const std::string& src, std::size_t line) {
    c.skip();
    if (c.i >= c.s.size()) throw ConfigError(src, line, "missing value");
    ConfigValue v;
    v.line = line;
    const char ch = c.s[c.i];
    if (ch == '"') {
        const auto end = c.s.find('"', c.i + 1);
        if (end == std::string::npos) throw ConfigError(src, line, "unterminated string");
        v.kind = ConfigValue::Kind::string;
        v.text = c.s.substr(c.i + 1, end - c.i - 1);
        c.i = end + 1;
        return v;
    }
    if (ch == '[') {
        v.kind = ConfigValue::Kind::array;
        ++c.i;
        c.skip();
        if (c.i < c.s.size() && c.s[c.i] == ']') {
            ++c.i;
            return v;
        }
        for (;;) {
            v.items.push_back(parse_value(c, src, line));
            c.skip();
            if (c.i >= c.s.size()) throw ConfigError(src, line, "unterminated array");
            if (c.s[c.i] == ',') {
                ++c.i;
                c.skip();
                if (c.i < c.s.size() && c.s[c.i] == ']') {
                    ++c.i;
                    return v;
                }
                continue;
            }
            if (c.s[c.i] == ']') {
                ++c.i;
                return v;
            }
            throw ConfigError(src, line, "expected ',' or ']' in array");
        }
    }
    std::size_t end = c.i;
    while (end < c.s.size() && c.s[end] != ',' && c.s[end] != ']' && c.s[end] != ' ' && c.s[end] != '\t') ++end;
    const std::string tok = c.s.substr(c.i, end - c.i);
    c.i = end;
    if (tok == "true" || tok == "false") {
        v.kind = ConfigValue::Kind::boolean;
        v.boolean = tok == "true";
        return v;
    }
    double x = 0;
    const char* first = tok.data() + (tok.size() > 1 && tok[0] == '+' ? 1 : 0);
    const auto res = std::from_chars(first, tok.data() + tok.size(), x);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(x))
        throw ConfigError(src, line, "cannot parse value '" + tok + "' (strings need double quotes)");
    v.kind = ConfigValue::Kind::number;
    v.number = x;
    v.text = tok;
    return v;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source) {
    ConfigFile f;
    f.source_ = source;
    std::istringstream in(text);
    std::string raw, section;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(source, line, "malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (!valid_key(section)) throw ConfigError(source, line, "invalid section name '" + section + "'");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line, "expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        if (!valid_key(key)) throw ConfigError(source, line, "invalid key '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        const std::string rest = s.substr(eq + 1);
        Cursor c{rest};
        ConfigValue v = parse_value(c, source, line);
        if (!c.done()) throw ConfigError(source, line, "unexpected text after value");
        if (f.values_.count(full))
            throw ConfigError(source, line,
                              "duplicate key '" + full + "' (first set on line " +
                                  std::to_string(f.values_[full].line) + ")");
        f.values_[full] = std::move(v);
    }
    return f;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), 0, "cannot open configuration file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::size_t ConfigFile::line_of(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? 0 : it->second.line;
}

void ConfigFile::fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(source_, line_of(key), key + ": " + msg);
}

const ConfigValue* ConfigFile::find(const std::string& key) const {
    used_[key] = true;
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

double ConfigFile::number(const std::string& key, double fallback) const {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (v->kind != ConfigValue::Kind::number) fail(key, "expected a number");
    return v->number;
}

std::int64_t ConfigFile::integer(const std::string& key, std::int64_t fallback) const {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (v->kind != ConfigValue::Kind::number || v->number != std::floor(v->number) || std::abs(v->number) > 9e15)
        fail(key, "expected an integer");
    return static_cast<std::int64_t>(v->number);
}

bool ConfigFile::flag(const std::string& key, bool fallback) const {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (v->kind != ConfigValue::Kind::boolean) fail(key, "expected true or false");
    return v->boolean;
}

std::string ConfigFile::text(const std::string& key, const std::string& fallback) const {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (v->kind != ConfigValue::Kind::string) fail(key, "expected a quoted string");
    return v->text;
}

std::vector<double> ConfigFile::numbers(const std::string& key, const std::vector<double>& fallback) const {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (v->kind != ConfigValue::Kind::array) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& item : v->items) {
        if (item.kind != ConfigValue::Kind::number) fail(key, "expected an array of numbers");
        out.push_back(item.number);
    }
    return out;
}

std::vector<std::vector<double>> ConfigFile::rows(const std::string& key,
                                                  const std::vector<std::vector<double>>& fallback) const {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (v->kind != ConfigValue::Kind::array) fail(key, "expected an array of arrays");
    std::vector<std::vector<double>> out;
    for (const auto& row : v->items) {
        if (row.kind != ConfigValue::Kind::array) fail(key, "expected an array of arrays");
        std::vector<double> r;
        for (const auto& item : row.items) {
            if (item.kind != ConfigValue::Kind::number) fail(key, "expected numbers");
            r.push_back(item.number);
        }
        out.push_back(std::move(r));
    }
    return out;
}

void ConfigFile::check_all_used() const {
    for (const auto& [key, v] : values_)
        if (!used_.count(key)) throw ConfigError(source_, v.line, "unknown key '" + key + "'");
}

std::string_view to_string(ProblemKind p) { return p == ProblemKind::poisson ? "poisson" : "advdiff"; }

std::vector<std::string> RunConfig::stage_plan() const {
    std::vector<std::string> plan{"setup"};
    if (stages.sample_prior) plan.emplace_back("sample-prior");
    if (stages.map) plan.emplace_back("map");
    if (stages.eigens) plan.emplace_back("eigens");
    if (stages.variance) plan.emplace_back("variance");
    if (stages.sample_posterior) plan.emplace_back("sample-posterior");
    return plan;
}

namespace {

Rect to_rect(const ConfigFile& f, const std::string& key, const std::vector<double>& v) {
    if (v.size() != 4) f.fail(key, "expected [x0, y0, x1, y1]");
    const Rect r{v[0], v[1], v[2], v[3]};
    if (!(r.x0 < r.x1 && r.y0 < r.y1 && r.x0 >= 0 && r.y0 >= 0 && r.x1 <= 1 && r.y1 <= 1))
        f.fail(key, "rectangle must satisfy 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1");
    return r;
}

double positive(const ConfigFile& f, const std::string& key, double fallback) {
    const double v = f.number(key, fallback);
    if (!(v > 0)) f.fail(key, "must be positive");
    return v;
}

std::size_t count(const ConfigFile& f, const std::string& key, std::size_t fallback, std::size_t min = 0) {
    const std::int64_t v = f.integer(key, static_cast<std::int64_t>(fallback));
    if (v < static_cast<std::int64_t>(min)) f.fail(key, "must be at least " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

std::uint64_t seed(const ConfigFile& f, const std::string& key, std::uint64_t fallback) {
    const std::int64_t v = f.integer(key, static_cast<std::int64_t>(fallback));
    if (v < 0) f.fail(key, "seeds are non-negative integers");
    return static_cast<std::uint64_t>(v);
}

}  // namespace

RunConfig parse_run_config(const ConfigFile& f) {
    RunConfig c;
    const std::string problem = f.text("problem", "");
    if (problem == "poisson") c.problem = ProblemKind::poisson;
    else if (problem == "advdiff") c.problem = ProblemKind::advdiff;
    else if (problem.empty()) throw ConfigError(f.source(), 0, "problem: required (\"poisson\" or \"advdiff\")");
    else f.fail("problem", "unknown problem '" + problem + "' (poisson, advdiff)");
    const bool pois = c.problem == ProblemKind::poisson;
    c.name = f.text("name", std::filesystem::path(f.source()).stem().string());

    std::filesystem::path out = f.text("output", "runs/" + c.name);
    if (const char* root = std::getenv("PDEINV_OUTPUT_ROOT"); root && *root)
        c.output = std::filesystem::path(root) / (out.is_absolute() ? out.filename() : out);
    else
        c.output = out;

    c.mesh_n = count(f, "mesh.n", pois ? 32 : 24, 2);
    std::vector<std::vector<double>> holes;
    if (!pois) holes = {{0.25, 0.125, 0.5, 0.375}, {0.625, 0.625, 0.75, 0.875}};
    for (const auto& h : f.rows("mesh.holes", holes)) c.holes.push_back(to_rect(f, "mesh.holes", h));

    c.prior.gamma = positive(f, "prior.gamma", pois ? 0.1 : 1.0);
    c.prior.delta = positive(f, "prior.delta", pois ? 0.5 : 8.0);
    c.prior_angle = f.number("prior.angle", pois ? std::numbers::pi / 4 : 0.0);
    c.theta1 = positive(f, "prior.theta1", pois ? 2.0 : 1.0);
    c.theta2 = positive(f, "prior.theta2", pois ? 0.5 : 1.0);
    c.prior.theta = anisotropic_tensor(c.prior_angle, c.theta1, c.theta2);
    c.prior.robin_constant = positive(f, "prior.robin_constant", 1.42);

    c.obs_count = count(f, "observations.count", pois ? 50 : 80);
    c.obs_window = to_rect(f, "observations.window",
                           f.numbers("observations.window", pois ? std::vector<double>{0.1, 0.1, 0.9, 0.5}
                                                                 : std::vector<double>{0, 0, 1, 1}));

    if (pois) {
        c.noise_sigma = positive(f, "noise.sigma", 0.01);
        c.poisson.sigma = c.noise_sigma;
        const auto deg = f.integer("poisson.state_degree", 2);
        if (deg != 1 && deg != 2) f.fail("poisson.state_degree", "must be 1 or 2");
        c.poisson.state_degree = static_cast<int>(deg);
        c.poisson.u_bottom = f.number("poisson.u_bottom", 0.0);
        c.poisson.u_top = f.number("poisson.u_top", 1.0);
    } else {
        c.advdiff.sigma2 = positive(f, "noise.sigma2", 2.45e-7);
        c.noise_sigma = std::sqrt(c.advdiff.sigma2);
        const auto deg = f.integer("advdiff.state_degree", 1);
        if (deg != 1 && deg != 2) f.fail("advdiff.state_degree", "must be 1 or 2");
        c.advdiff.state_degree = static_cast<int>(deg);
        c.advdiff.kappa = positive(f, "advdiff.kappa", 1e-3);
        c.advdiff.t_final = positive(f, "advdiff.t_final", 4.0);
        c.advdiff.steps = count(f, "advdiff.steps", 40, 1);
        c.advdiff.obs_start = f.number("advdiff.obs_start", 1.0);
        c.advdiff.obs_interval = positive(f, "advdiff.obs_interval", 0.2);
        c.advdiff.obs_end = f.number("advdiff.obs_end", -1.0);
        c.advdiff.gls = f.flag("advdiff.gls", true);
        c.velocity_file = f.text("advdiff.velocity_file", "");
        if (!c.velocity_file.empty() && c.velocity_file.is_relative())
            c.velocity_file = std::filesystem::path(f.source()).parent_path() / c.velocity_file;
        try {
            (void)observation_nodes(c.advdiff);
        } catch (const InvalidArgument& e) {
            f.fail(f.has("advdiff.obs_start") ? "advdiff.obs_start" : "advdiff.obs_interval", e.what());
        }
    }

    c.newton.max_iter = count(f, "newton.max_iter", 50);
    c.newton.max_backtracking_iter = count(f, "newton.max_backtracking_iter", 10);
    c.newton.grad_tol = positive(f, "newton.grad_tol", 1e-9);
    c.newton.rel_grad_tol = positive(f, "newton.rel_grad_tol", 1e-6);
    c.newton.c_armijo = positive(f, "newton.c_armijo", 1e-4);
    if (c.newton.c_armijo >= 0.5) f.fail("newton.c_armijo", "must be below 0.5");
    c.newton.cg_max_iter = count(f, "newton.cg_max_iter", 500);
    const std::string hm = f.text("newton.hessian", "full");
    if (hm != "full" && hm != "gauss_newton") f.fail("newton.hessian", "must be \"full\" or \"gauss_newton\"");
    c.newton.hessian = parse_hessian_mode(hm);

    try {
        c.solver = parse_ghep_solver(f.text("eigen.solver", "double"));
    } catch (const InvalidArgument& e) {
        f.fail("eigen.solver", e.what());
    }
    c.eig_r = count(f, "eigen.r", 50, 1);
    c.eig_l = count(f, "eigen.l", pois ? 20 : 10);
    c.lambda_cut = f.number("eigen.lambda_cut", 0.07);
    if (c.lambda_cut < 0) f.fail("eigen.lambda_cut", "must be non-negative");
    const std::string eh = f.text("eigen.hessian", "gauss_newton");
    if (eh != "full" && eh != "gauss_newton") f.fail("eigen.hessian", "must be \"full\" or \"gauss_newton\"");
    c.gauss_newton = eh == "gauss_newton";

    c.rbar = count(f, "variance.rbar", 300, 1);
    c.prior_samples = count(f, "samples.prior", 3);
    c.posterior_samples = count(f, "samples.posterior", 3);

    c.stages.sample_prior = f.flag("stages.sample_prior", true);
    c.stages.map = f.flag("stages.map", true);
    c.stages.eigens = f.flag("stages.eigens", true);
    c.stages.variance = f.flag("stages.variance", true);
    c.stages.sample_posterior = f.flag("stages.sample_posterior", true);
    if (c.stages.eigens && !c.stages.map) f.fail("stages.eigens", "requires the map stage");
    if (c.stages.variance && !c.stages.eigens) f.fail("stages.variance", "requires the eigens stage");
    if (c.stages.sample_posterior && !c.stages.eigens) f.fail("stages.sample_posterior", "requires the eigens stage");

    c.seeds.prior = seed(f, "seed.prior", 1);
    c.seeds.noise = seed(f, "seed.noise", 2);
    c.seeds.eigensolver = seed(f, "seed.eigensolver", 3);
    c.seeds.obs_points = seed(f, "seed.obs_points", 4);
    c.threads = static_cast<unsigned>(count(f, "threads", 1, 1));

    f.check_all_used();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const ConfigFile f = ConfigFile::load(path);
    RunConfig c = parse_run_config(f);
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    c.config_text = ss.str();
    return c;
}

std::pair<double, double> parse_window(const std::string& text) {
    std::string s = text;
    if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    const auto sep = s.find_first_of(":,");
    if (sep == std::string::npos) throw InvalidArgument("window '" + text + "': expected T1:T2");
    double a = 0, b = 0;
    const std::string sa = trim(s.substr(0, sep)), sb = trim(s.substr(sep + 1));
    const auto ra = std::from_chars(sa.data(), sa.data() + sa.size(), a);
    const auto rb = std::from_chars(sb.data(), sb.data() + sb.size(), b);
    if (ra.ec != std::errc() || rb.ec != std::errc() || ra.ptr != sa.data() + sa.size() ||
        rb.ptr != sb.data() + sb.size())
        throw InvalidArgument("window '" + text + "': expected T1:T2");
    if (!(a >= 0 && b > a)) throw InvalidArgument("window '" + text + "': need 0 <= T1 < T2");
    return {a, b};
}

}  // namespace pdeinv

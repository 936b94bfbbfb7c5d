#pragma once

// Line-oriented `key = value` configuration with [sections] (a TOML subset):
// strings in double quotes, numbers, true/false, flat or nested arrays of
// numbers, `#` comments. Keys are addressed as "section.key".

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/fem/mesh.hpp"
#include "pdeinv/newtoncg.hpp"
#include "pdeinv/posterior.hpp"
#include "pdeinv/prior.hpp"
#include "pdeinv/problems/advdiff.hpp"
#include "pdeinv/problems/poisson.hpp"

namespace pdeinv {

/// Validation error tied to a source location ("file:line: message").
class ConfigError : public InvalidArgument {
public:
    ConfigError(const std::string& source, std::size_t line, const std::string& msg);
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ConfigValue {
    enum class Kind { string, number, boolean, array };
    Kind kind = Kind::number;
    std::string text;  // string value, or the raw token for numbers
    double number = 0;
    bool boolean = false;
    std::vector<ConfigValue> items;
    std::size_t line = 0;
};

class ConfigFile {
public:
    static ConfigFile parse(const std::string& text, const std::string& source = "<config>");
    static ConfigFile load(const std::filesystem::path& path);

    [[nodiscard]] const std::string& source() const { return source_; }
    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    [[nodiscard]] std::size_t line_of(const std::string& key) const;

    // Typed getters; a missing key yields the fallback. Each lookup marks the key as used.
    double number(const std::string& key, double fallback) const;
    std::int64_t integer(const std::string& key, std::int64_t fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::string text(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::vector<double>> rows(const std::string& key, const std::vector<std::vector<double>>& fallback) const;

    /// Throws for the first key never looked up (typos, unsupported options).
    void check_all_used() const;
    [[noreturn]] void fail(const std::string& key, const std::string& msg) const;

private:
    const ConfigValue* find(const std::string& key) const;

    std::string source_;
    std::map<std::string, ConfigValue> values_;
    mutable std::map<std::string, bool> used_;
};

enum class ProblemKind { poisson, advdiff };
std::string_view to_string(ProblemKind p);

struct StageToggles {
    bool sample_prior = true, map = true, eigens = true, variance = true, sample_posterior = true;
};

struct Seeds {
    std::uint64_t prior = 1, noise = 2, eigensolver = 3, obs_points = 4;
};

struct RunConfig {
    std::string name;
    ProblemKind problem = ProblemKind::poisson;
    std::filesystem::path output;  // resolved directory
    std::string config_text;       // verbatim input

    std::size_t mesh_n = 32;
    std::vector<Rect> holes;

    PriorParams prior;
    double prior_angle = 0, theta1 = 1, theta2 = 1;

    std::size_t obs_count = 50;
    Rect obs_window{0.1, 0.1, 0.9, 0.5};
    double noise_sigma = 0.01;  // standard deviation of the synthetic noise

    PoissonConfig poisson;
    AdvDiffConfig advdiff;
    std::filesystem::path velocity_file;  // empty: built-in cellular flow

    NewtonConfig newton;
    GhepSolver solver = GhepSolver::double_pass;
    std::size_t eig_r = 50, eig_l = 20;
    double lambda_cut = 0.07;
    bool gauss_newton = true;
    std::size_t rbar = 300;
    std::size_t prior_samples = 3, posterior_samples = 3;

    StageToggles stages;
    Seeds seeds;
    unsigned threads = 1;

    /// Stage names in execution order, enabled ones only.
    [[nodiscard]] std::vector<std::string> stage_plan() const;
};

/// Problem defaults, overridden by the file. The output
/// directory is `output` (default runs/<name>) under $PDEINV_OUTPUT_ROOT when
/// set, else relative to the working directory.
RunConfig parse_run_config(const ConfigFile& file);
RunConfig load_run_config(const std::filesystem::path& path);

/// Parses "a:b" or "a,b" observation windows for the spectrum verb.
std::pair<double, double> parse_window(const std::string& text);

}  // namespace pdeinv

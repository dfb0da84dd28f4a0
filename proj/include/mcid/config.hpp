#pragma once

// Flat key/value configuration with [dotted] sections, e.g.
//
//     [pipeline]
//     budget = 2000
//     split = [0.125, 0.25, 0.625]
//     mode = "cv"
//
// Every key must appear in known_keys(); anything else is rejected by name.
// Command-line overrides are applied with set() and beat file values.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mcid/bench_harness.hpp"
#include "mcid/datagen.hpp"
#include "mcid/pipeline.hpp"

namespace mcid {

struct KeyInfo {
    std::string key;
    std::string type;       // int, real, string, bool, reals, strings
    std::string fallback;   // default shown in --help
    std::string help;
};

const std::vector<KeyInfo>& known_keys();
const KeyInfo* find_key(std::string_view key);

class Config {
public:
    /// Throws ConfigError on a syntax error, a duplicate or an unknown key.
    static Config parse(std::istream& is, const std::string& source = "<config>");
    static Config load(const std::string& path);

    /// Sets or replaces one key; throws ConfigError for an unknown key.
    void set(const std::string& key, const std::string& value);
    /// "key=value" form used on the command line.
    void set_assignment(const std::string& assignment);

    bool has(std::string_view key) const;
    std::string get_string(std::string_view key) const;
    double get_real(std::string_view key) const;
    std::int64_t get_int(std::string_view key) const;
    bool get_bool(std::string_view key) const;
    std::vector<double> get_reals(std::string_view key) const;
    std::vector<std::string> get_strings(std::string_view key) const;

    const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

private:
    const std::string& raw(std::string_view key) const;
    std::map<std::string, std::string, std::less<>> entries_;  // values as written, quotes kept
};

/// Splits "[a, "b", 3]" or "a, b" into items with surrounding quotes removed.
std::vector<std::string> split_list(std::string_view text);
std::string unquote(std::string_view text);

ModelSpec model_from(const Config& cfg);
FitSettings fit_from(const Config& cfg);
TwoStepConfig two_step_from(const Config& cfg);
/// K-step settings from pipeline.k, pipeline.split, pipeline.delta, pipeline.b and pipeline.lambda.
PipelineConfig k_step_from(const Config& cfg);
ExperimentConfig experiment_from(const Config& cfg);
/// "auto10" style or an explicit list.
BGrid b_grid_from_text(std::string_view text);

}  // namespace mcid

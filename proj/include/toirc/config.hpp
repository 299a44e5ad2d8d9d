#pragma once

// key=value run configuration with a fixed schema of namespaced keys.

#include "error.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace toirc {

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct ConfigKey {
    std::string name;
    std::string default_value;
    std::string help;
    /// Throws UsageError when the value is unacceptable.
    std::function<void(const std::string&)> check;
};

namespace config_check {

inline double real(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos == v.size()) {
            return d;
        }
    } catch (const std::exception&) {
    }
    throw UsageError(key + ": expected a number, got '" + v + "'");
}

inline long long integer(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos == v.size()) {
            return i;
        }
    } catch (const std::exception&) {
    }
    throw UsageError(key + ": expected an integer, got '" + v + "'");
}

inline bool boolean(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw UsageError(key + ": expected true or false, got '" + v + "'");
}

inline auto any() { return [](const std::string&) {}; }
inline auto int_at_least(std::string key, long long lo)
{
    return [key, lo](const std::string& v) {
        if (integer(key, v) < lo) {
            throw UsageError(key + " must be >= " + std::to_string(lo));
        }
    };
}
inline auto real_in(std::string key, double lo, double hi)
{
    return [key, lo, hi](const std::string& v) {
        const double d = real(key, v);
        if (!(d >= lo && d <= hi)) {
            throw UsageError(key + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + v);
        }
    };
}
inline auto positive_or_auto(std::string key)
{
    return [key](const std::string& v) {
        if (v != "auto" && !(real(key, v) >= 0.0)) {
            throw UsageError(key + " must be >= 0 or 'auto'");
        }
    };
}
inline auto flag(std::string key)
{
    return [key](const std::string& v) { boolean(key, v); };
}
inline auto one_of(std::string key, std::vector<std::string> options)
{
    return [key, options](const std::string& v) {
        for (const auto& o : options) {
            if (o == v) {
                return;
            }
        }
        std::string all;
        for (const auto& o : options) {
            all += (all.empty() ? "" : ", ") + o;
        }
        throw UsageError(key + " must be one of {" + all + "}, got '" + v + "'");
    };
}

} // namespace config_check

/// Every accepted key with its default.
inline const std::vector<ConfigKey>& config_schema()
{
    using namespace config_check;
    static const std::vector<ConfigKey> schema = {
        {"seed", "1", "global seed: folds, dataset completion, hyperopt", int_at_least("seed", 0)},
        {"cache", "cache", "cache directory", any()},
        {"dataset.manifest", "", "manifest path (empty with dataset.synthetic=true)", any()},
        {"dataset.scenario", "s1", "s1..s4 or full", one_of("dataset.scenario", {"s1", "s2", "s3", "s4", "full"})},
        {"dataset.complete", "true", "fill missing grid cells before splitting", flag("dataset.complete")},
        {"dataset.check_frames", "true", "verify frame files when loading the manifest", flag("dataset.check_frames")},
        {"dataset.synthetic", "false", "use the procedural surrogate instead of a manifest", flag("dataset.synthetic")},
        {"dataset.synthetic_seed", "7", "surrogate rendering seed", int_at_least("dataset.synthetic_seed", 0)},
        {"dataset.synthetic_subjects", "25", "surrogate subjects", int_at_least("dataset.synthetic_subjects", 1)},
        {"dataset.synthetic_repetitions", "4", "surrogate repetitions", int_at_least("dataset.synthetic_repetitions", 1)},
        {"preprocess.subsample_factor", "3", "keep every n-th frame", int_at_least("preprocess.subsample_factor", 1)},
        {"preprocess.sigma", "2.0", "Gaussian blur sigma (pixels)", real_in("preprocess.sigma", 0.0, 50.0)},
        {"preprocess.threshold", "0.15", "background difference threshold", real_in("preprocess.threshold", 0.0, 1.0)},
        {"preprocess.min_blob", "10", "remove components up to this size", int_at_least("preprocess.min_blob", 0)},
        {"preprocess.connectivity", "4", "4 or 8", one_of("preprocess.connectivity", {"4", "8"})},
        {"features.cell", "8", "HOG cell size (pixels)", int_at_least("features.cell", 1)},
        {"features.block", "2", "HOG block size (cells)", int_at_least("features.block", 1)},
        {"features.bins", "9", "orientation bins", int_at_least("features.bins", 2)},
        {"features.block_stride", "1", "block stride (cells)", int_at_least("features.block_stride", 1)},
        {"features.voting", "bilinear", "bilinear or nearest", one_of("features.voting", {"bilinear", "nearest"})},
        {"features.epsilon", "1e-6", "block normalization epsilon", real_in("features.epsilon", 0.0, 1.0)},
        {"features.variability", "0.75", "retained PCA variance fraction", real_in("features.variability", 1e-6, 0.99)},
        {"features.pca_per_fold", "false", "refit PCA on each training split", flag("features.pca_per_fold")},
        {"reservoir.nodes", "600", "N", int_at_least("reservoir.nodes", 1)},
        {"reservoir.alpha", "1.5", "feedback strength", real_in("reservoir.alpha", -100.0, 100.0)},
        {"reservoir.beta", "auto", "input strength, or auto to derive it from sigma_input", positive_or_auto("reservoir.beta")},
        {"reservoir.sigma_input", "0.014", "target std of beta*M*u when beta=auto", real_in("reservoir.sigma_input", 0.0, 1e6)},
        {"reservoir.reset", "true", "reset the state before every sequence", flag("reservoir.reset")},
        {"reservoir.reset_mode", "hard_zero", "hard_zero or null_washout", one_of("reservoir.reset_mode", {"hard_zero", "null_washout"})},
        {"reservoir.washout_steps", "2", "zero-input steps for null_washout", int_at_least("reservoir.washout_steps", 0)},
        {"reservoir.lag", "delayed", "delayed (node 0 reads x_{N-1}(n-1)) or strict", one_of("reservoir.lag", {"delayed", "strict"})},
        {"readout.toi", "1,5,8,9,10", "timesteps of interest", any()},
        {"readout.lambda", "auto", "ridge lambda, or auto to derive it from lambda_rescaled", positive_or_auto("readout.lambda")},
        {"readout.lambda_rescaled", "4.07", "lambda / VAR(training states) when lambda=auto", real_in("readout.lambda_rescaled", 0.0, 1e12)},
        {"readout.bias", "false", "append a constant feature", flag("readout.bias")},
        {"readout.mode", "toi", "toi or classical_average", one_of("readout.mode", {"toi", "classical_average"})},
        {"readout.toi_search_size", "3", "subset size for toi-search", int_at_least("readout.toi_search_size", 1)},
        {"readout.toi_search_mode", "ranked", "exhaustive or ranked", one_of("readout.toi_search_mode", {"exhaustive", "ranked"})},
        {"hyperopt.budget", "200", "total objective evaluations", int_at_least("hyperopt.budget", 27)},
        {"hyperopt.refit_interval", "5", "kernel re-search interval (iterations)", int_at_least("hyperopt.refit_interval", 1)},
        {"hyperopt.gp_starts", "16", "likelihood search starts", int_at_least("hyperopt.gp_starts", 1)},
        {"hyperopt.noise_floor", "1e-6", "GP noise variance floor", real_in("hyperopt.noise_floor", 0.0, 1.0)},
        {"hyperopt.alpha_min", "0.1", "", real_in("hyperopt.alpha_min", -100.0, 100.0)},
        {"hyperopt.alpha_max", "2.5", "", real_in("hyperopt.alpha_max", -100.0, 100.0)},
        {"hyperopt.sigma_min", "1e-4", "", real_in("hyperopt.sigma_min", 1e-300, 1e6)},
        {"hyperopt.sigma_max", "1", "", real_in("hyperopt.sigma_max", 1e-300, 1e6)},
        {"hyperopt.lambda_min", "1e-5", "lambda / VAR(x) lower bound", real_in("hyperopt.lambda_min", 1e-300, 1e12)},
        {"hyperopt.lambda_max", "1e2", "lambda / VAR(x) upper bound", real_in("hyperopt.lambda_max", 1e-300, 1e12)},
        {"hyperopt.mask_seeds", "1", "mask seeds averaged by the objective", any()},
        {"eval.k_folds", "4", "K", int_at_least("eval.k_folds", 2)},
        {"eval.split", "stratified", "stratified or subject", one_of("eval.split", {"stratified", "subject"})},
        {"eval.mask_seeds", "1,2,3,4,5", "input mask seeds", any()},
        {"eval.timing", "true", "measure wall-clock fields (fps, train_s)", flag("eval.timing")},
        {"eval.throughput_frames", "1000", "minimum frames per throughput run", int_at_least("eval.throughput_frames", 1)},
        {"eval.throughput_runs", "5", "throughput runs (median reported)", int_at_least("eval.throughput_runs", 1)},
    };
    return schema;
}

/// Resolved configuration: schema defaults overridden by a file and --set.
class RunConfig {
public:
    RunConfig()
    {
        for (const auto& k : config_schema()) {
            values_[k.name] = k.default_value;
        }
    }

    /// Applies one "key=value" assignment.
    void set(const std::string& assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) {
            throw UsageError("expected key=value, got '" + assignment + "'");
        }
        set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
    }

    void set(const std::string& key, const std::string& value)
    {
        const ConfigKey* k = find(key);
        if (!k) {
            throw UsageError("unknown config key '" + key + "'");
        }
        k->check(value);
        values_[key] = value;
    }

    /// Reads "key = value" lines; '#' starts a comment.
    void load(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in) {
            throw UsageError("cannot open config " + path.string());
        }
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            const auto hash = line.find('#');
            if (hash != std::string::npos) {
                line.erase(hash);
            }
            if (trim(line).empty()) {
                continue;
            }
            try {
                set(line);
            } catch (const UsageError& e) {
                throw UsageError(path.string() + ":" + std::to_string(n) + ": " + e.what());
            }
        }
    }

    const std::string& get(const std::string& key) const
    {
        auto it = values_.find(key);
        if (it == values_.end()) {
            throw UsageError("unknown config key '" + key + "'");
        }
        return it->second;
    }
    double real(const std::string& key) const { return config_check::real(key, get(key)); }
    long long integer(const std::string& key) const { return config_check::integer(key, get(key)); }
    bool flag(const std::string& key) const { return config_check::boolean(key, get(key)); }

    /// Canonical text: sorted "key=value" lines.
    std::string str(const std::vector<std::string>& prefixes = {}) const
    {
        std::string out;
        for (const auto& [k, v] : values_) {
            if (k == "cache" || !matches(k, prefixes)) {
                continue;
            }
            out += k + "=" + v + "\n";
        }
        return out;
    }

    /// Hash of the canonical text restricted to keys under the given
    /// prefixes (all keys when empty). The cache location never enters it.
    std::string hash(const std::vector<std::string>& prefixes = {}) const { return hex64(fnv1a64(str(prefixes))); }

private:
    static const ConfigKey* find(const std::string& name)
    {
        for (const auto& k : config_schema()) {
            if (k.name == name) {
                return &k;
            }
        }
        return nullptr;
    }

    static bool matches(const std::string& key, const std::vector<std::string>& prefixes)
    {
        if (prefixes.empty()) {
            return true;
        }
        for (const auto& p : prefixes) {
            if (key == p || key.rfind(p + ".", 0) == 0) {
                return true;
            }
        }
        return false;
    }

    static std::string trim(const std::string& s)
    {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) {
            return "";
        }
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
};

/// "1,2,3" -> {1, 2, 3}.
inline std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& text)
{
    std::vector<std::uint64_t> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string tok = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const long long v = config_check::integer(key, tok);
        if (v < 0) {
            throw UsageError(key + ": seeds must be >= 0");
        }
        out.push_back(std::uint64_t(v));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    if (out.empty()) {
        throw UsageError(key + ": at least one seed is required");
    }
    return out;
}

} // namespace toirc

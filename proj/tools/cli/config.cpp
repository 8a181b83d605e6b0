#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace geofuse::cli {

ConfigError::ConfigError(const std::string& message, std::size_t line_)
    : std::runtime_error(message), line(line_) {}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    return std::all_of(key.begin(), key.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    });
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    return static_cast<std::size_t>(parse_u64(key, v));
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string show(double v) { return format_number(v); }
std::string show(std::size_t v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }

struct Field {
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T, typename Access>
Field numeric(Access access) {
    Field f;
    f.set = [access](ExperimentConfig& c, const std::string& k, const std::string& v) {
        if constexpr (std::is_same_v<T, double>) {
            access(c) = parse_double(k, v);
        } else if constexpr (std::is_same_v<T, bool>) {
            access(c) = parse_bool(k, v);
        } else {
            access(c) = static_cast<T>(parse_u64(k, v));
        }
    };
    f.get = [access](const ExperimentConfig& c) {
        if constexpr (std::is_same_v<T, double> || std::is_same_v<T, bool>) {
            return show(access(const_cast<ExperimentConfig&>(c)));
        } else {
            return show(static_cast<std::size_t>(access(const_cast<ExperimentConfig&>(c))));
        }
    };
    return f;
}

template <typename Access>
Field optional_double(Access access) {
    Field f;
    f.set = [access](ExperimentConfig& c, const std::string& k, const std::string& v) {
        if (v.empty() || v == "none") {
            access(c).reset();
        } else {
            access(c) = parse_double(k, v);
        }
    };
    f.get = [access](const ExperimentConfig& c) {
        const auto& o = access(const_cast<ExperimentConfig&>(c));
        return o ? show(*o) : std::string("none");
    };
    return f;
}

#define NUM(T, expr) numeric<T>([](ExperimentConfig& c) -> auto& { return expr; })
#define OPT(expr) optional_double([](ExperimentConfig& c) -> auto& { return expr; })

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        t["seed"] = NUM(std::uint64_t, c.seed);
        t["out"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
                    [](const ExperimentConfig& c) { return c.out_dir.string(); }};

        t["scene.classes"] = NUM(std::size_t, c.scene.classes);
        t["scene.bands"] = NUM(std::size_t, c.scene.bands);
        t["scene.height"] = NUM(std::size_t, c.scene.height);
        t["scene.width"] = NUM(std::size_t, c.scene.width);
        t["scene.layout"] = {
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if (v == "blobs") {
                    c.scene.layout = SceneLayout::Blobs;
                } else if (v == "half_split") {
                    c.scene.layout = SceneLayout::HalfSplit;
                } else {
                    throw ConfigError(k + ": expected blobs or half_split, got '" + v + "'");
                }
            },
            [](const ExperimentConfig& c) {
                return std::string(c.scene.layout == SceneLayout::Blobs ? "blobs" : "half_split");
            }};
        t["scene.sites"] = NUM(std::size_t, c.scene.background_sites);
        t["scene.blobs"] = NUM(std::size_t, c.scene.blob_count);
        t["scene.blob_radius_min"] = NUM(double, c.scene.blob_radius_min);
        t["scene.blob_radius_max"] = NUM(double, c.scene.blob_radius_max);
        t["scene.smoothing"] = NUM(std::size_t, c.scene.smoothing_passes);
        t["scene.noise_sigma"] = NUM(double, c.scene.noise_sigma);
        t["scene.mixed_width"] = NUM(std::size_t, c.scene.mixed_width);

        t["preprocess.equalize"] = NUM(bool, c.preprocess.equalize);
        t["preprocess.levels"] = NUM(std::size_t, c.preprocess.equalize_levels);
        t["preprocess.stretch"] = NUM(bool, c.preprocess.stretch);
        t["preprocess.pca_retain"] = NUM(std::size_t, c.preprocess.pca_retain);
        t["preprocess.d_max"] = {
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if (v.empty() || v == "none") {
                    c.preprocess.d_max.reset();
                } else {
                    c.preprocess.d_max = parse_size(k, v);
                }
            },
            [](const ExperimentConfig& c) {
                return c.preprocess.d_max ? std::to_string(*c.preprocess.d_max) : std::string("none");
            }};

        t["data.patch_size"] = NUM(std::size_t, c.data.patch_size);
        t["data.samples"] = NUM(std::size_t, c.data.samples);

        t["search.algorithm"] = {
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if (v != "pso" && v != "ga" && v != "none") {
                    throw ConfigError(k + ": expected pso, ga or none, got '" + v + "'");
                }
                c.search.algorithm = v;
            },
            [](const ExperimentConfig& c) { return c.search.algorithm; }};
        t["search.objective"] = {
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if (v != "eq23" && v != "eq1") throw ConfigError(k + ": expected eq23 or eq1, got '" + v + "'");
                c.search.objective = v;
            },
            [](const ExperimentConfig& c) { return c.search.objective; }};
        t["search.population"] = NUM(std::size_t, c.search.population);
        t["search.iterations"] = NUM(std::size_t, c.search.iterations);
        t["search.threads"] = NUM(std::size_t, c.search.threads);
        t["search.plateau_window"] = NUM(std::size_t, c.search.plateau_window);
        t["search.tolerance"] = NUM(double, c.search.tolerance);
        t["search.seed_baseline"] = NUM(bool, c.search.seed_baseline);
        t["space.learning_rate.low"] = NUM(double, c.search.space.learning_rate.low);
        t["space.learning_rate.high"] = NUM(double, c.search.space.learning_rate.high);
        t["space.num_filters.low"] = NUM(long, c.search.space.num_filters.low);
        t["space.num_filters.high"] = NUM(long, c.search.space.num_filters.high);
        t["space.kernel_size.low"] = NUM(long, c.search.space.kernel_size.low);
        t["space.kernel_size.high"] = NUM(long, c.search.space.kernel_size.high);
        t["space.batch_size.low"] = NUM(long, c.search.space.batch_size.low);
        t["space.batch_size.high"] = NUM(long, c.search.space.batch_size.high);
        t["space.dropout_rate.low"] = NUM(double, c.search.space.dropout_rate.low);
        t["space.dropout_rate.high"] = NUM(double, c.search.space.dropout_rate.high);
        t["space.epochs.low"] = NUM(long, c.search.space.epochs.low);
        t["space.epochs.high"] = NUM(long, c.search.space.epochs.high);

        t["baseline.learning_rate"] = NUM(double, c.baseline.learning_rate);
        t["baseline.num_filters"] = NUM(std::size_t, c.baseline.num_filters);
        t["baseline.kernel_size"] = NUM(std::size_t, c.baseline.kernel_size);
        t["baseline.batch_size"] = NUM(std::size_t, c.baseline.batch_size);
        t["baseline.dropout_rate"] = NUM(double, c.baseline.dropout_rate);
        t["baseline.epochs"] = NUM(std::size_t, c.baseline.epochs);
        t["baseline.regularization"] = {
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                const auto r = parse_regularization(v);
                if (!r) throw ConfigError(k + ": expected L1, L2 or None, got '" + v + "'");
                c.baseline.regularization = *r;
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.baseline.regularization)); }};
        t["baseline.optimizer"] = {
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                const auto o = parse_optimizer(v);
                if (!o) throw ConfigError(k + ": expected Adam, RMSProp or SGD, got '" + v + "'");
                c.baseline.optimizer = *o;
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.baseline.optimizer)); }};

        t["train.lambda"] = NUM(double, c.train.lambda);
        t["train.plateau_window"] = NUM(std::size_t, c.train.plateau_window);
        t["train.plateau_threshold"] = NUM(double, c.train.plateau_threshold);
        t["train.rms_rho"] = NUM(double, c.train.optimizer.rms_rho);

        t["objective.alpha"] = NUM(double, c.objective.alpha);
        t["objective.beta"] = NUM(double, c.objective.beta);
        t["objective.lambda"] = NUM(double, c.objective.lambda);

        t["timeseries.steps"] = NUM(std::size_t, c.timeseries.steps);
        t["timeseries.height"] = NUM(std::size_t, c.timeseries.height);
        t["timeseries.width"] = NUM(std::size_t, c.timeseries.width);
        t["timeseries.noise_sigma"] = NUM(double, c.timeseries.noise_sigma);
        t["timeseries.rule"] = {
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if (v == "identity") {
                    c.timeseries.rule.kind = TransitionKind::Identity;
                } else if (v == "annex") {
                    c.timeseries.rule.kind = TransitionKind::Annex;
                } else {
                    throw ConfigError(k + ": expected identity or annex, got '" + v + "'");
                }
            },
            [](const ExperimentConfig& c) {
                return std::string(c.timeseries.rule.kind == TransitionKind::Identity ? "identity" : "annex");
            }};
        t["timeseries.grower"] = NUM(std::uint16_t, c.timeseries.rule.grower);
        t["timeseries.ring_width"] = NUM(std::size_t, c.timeseries.rule.ring_width);
        t["timeseries.period"] = NUM(std::size_t, c.timeseries.rule.period);
        t["timeseries.history"] = NUM(std::size_t, c.timeseries.history);
        t["timeseries.band"] = NUM(std::size_t, c.timeseries.band);
        t["timeseries.sequences"] = NUM(std::size_t, c.timeseries.sequences);
        t["timeseries.hidden"] = NUM(std::size_t, c.timeseries.hidden);
        t["timeseries.update_frequency"] = NUM(double, c.timeseries.update_frequency);

        t["evaluate.boundary_tolerance"] = NUM(std::size_t, c.evaluate.boundary_tolerance);

        t["audit.enabled"] = {
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                std::set<int> ids;
                std::stringstream ss(v);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    item = trim(item);
                    if (item.empty()) continue;
                    const auto id = parse_u64(k, item);
                    if (id < 2 || id > 16) throw ConfigError(k + ": constraint ids must be 2..16");
                    ids.insert(static_cast<int>(id));
                }
                c.audit.enabled = ids;
            },
            [](const ExperimentConfig& c) {
                std::string out;
                for (int id : c.audit.enabled) out += (out.empty() ? "" : ",") + std::to_string(id);
                return out;
            }};
        t["audit.v_max"] = OPT(c.audit.v_max);
        t["audit.d_max"] = OPT(c.audit.d_max);
        t["audit.a_min"] = OPT(c.audit.a_min);
        t["audit.c_available"] = OPT(c.audit.c_available);
        t["audit.beta_resource"] = OPT(c.audit.beta_resource);
        t["audit.t_required"] = OPT(c.audit.t_required);
        t["audit.b_min"] = OPT(c.audit.b_min);
        t["audit.similarity_exponent"] = OPT(c.audit.similarity_exponent);
        t["audit.s_max"] = OPT(c.audit.s_max);
        t["audit.v_max_intra"] = OPT(c.audit.v_max_intra);
        t["audit.overfit_tolerance"] = OPT(c.audit.overfit_tolerance);
        t["audit.m_max"] = OPT(c.audit.m_max);
        t["audit.gamma"] = OPT(c.audit.gamma);
        t["audit.i_required"] = OPT(c.audit.i_required);
        t["audit.alpha_iter"] = OPT(c.audit.alpha_iter);
        t["audit.beta_iter"] = OPT(c.audit.beta_iter);
        t["audit.r_min"] = OPT(c.audit.r_min);
        t["audit.c_min"] = OPT(c.audit.c_min);
        t["audit.omega"] = OPT(c.audit.omega);
        t["audit.convergence_tolerance"] = OPT(c.audit.convergence_tolerance);
        t["audit.convergence_window"] = NUM(std::size_t, c.audit.convergence_window);
        return t;
    }();
    return table;
}

#undef NUM
#undef OPT

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& source) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(line) + ": expected 'key = value'", line);
        }
        const std::string key = trim(content.substr(0, eq));
        const std::string value = trim(content.substr(eq + 1));
        if (!valid_key(key)) {
            throw ConfigError(source + ":" + std::to_string(line) + ": invalid key '" + key + "'", line);
        }
        if (!out.emplace(key, value).second) {
            throw ConfigError(source + ":" + std::to_string(line) + ": duplicate key '" + key + "'", line);
        }
    }
    return out;
}

ExperimentConfig::ExperimentConfig() {
    scene.noise_sigma = 0.15;
    audit.v_max = 1e9;
    audit.d_max = 6.0;
    audit.a_min = 0.7;
    audit.c_available = 1e6;
    audit.beta_resource = 0.1;
    audit.t_required = 1e-3;
    audit.b_min = 1.0;
    audit.similarity_exponent = 2.0;
    audit.s_max = 100.0;
    audit.v_max_intra = 10.0;
    audit.overfit_tolerance = 0.1;
    audit.m_max = 1024.0;
    audit.gamma = 0.0;
    audit.i_required = 4.0;
    audit.alpha_iter = 0.5;
    audit.beta_iter = 0.1;
    audit.r_min = 0.7;
    audit.c_min = 0.05;
    audit.omega = 0.2;
    audit.convergence_tolerance = 0.05;
}

SceneSpec ExperimentConfig::scene_spec() const {
    SceneSpec s = scene;
    s.seed = stage_seed("scene");
    return s;
}

SceneSpec ExperimentConfig::timeseries_spec() const {
    SceneSpec s = scene;
    s.height = timeseries.height;
    s.width = timeseries.width;
    s.noise_sigma = timeseries.noise_sigma;
    s.seed = stage_seed("timeseries");
    return s;
}

std::uint64_t ExperimentConfig::stage_seed(const std::string& stage) const { return derive_seed(seed, stage); }

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
    const auto& table = fields();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second.set(config, key, value);
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides) {
    ExperimentConfig config;
    if (path) {
        std::ifstream in(*path);
        if (!in) throw ConfigError("cannot read config file " + path->string());
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string text = buf.str();
        const auto entries = parse_config_text(text, path->string());
        // Re-scan for line numbers so value errors point at the right line.
        std::map<std::string, std::size_t> lines;
        std::istringstream scan(text);
        std::string raw;
        for (std::size_t n = 1; std::getline(scan, raw); ++n) {
            const auto eq = raw.find('=');
            if (eq != std::string::npos) lines.emplace(trim(raw.substr(0, eq)), n);
        }
        for (const auto& [key, value] : entries) {
            try {
                apply_setting(config, key, value);
            } catch (const ConfigError& e) {
                const std::size_t line = lines.count(key) ? lines.at(key) : 0;
                throw ConfigError(path->string() + ":" + std::to_string(line) + ": " + e.what(), line);
            }
        }
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
        try {
            apply_setting(config, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("--set ") + o + ": " + e.what());
        }
    }
    try {
        config.scene_spec().validate();
        config.baseline.validate();
        config.search.space.validate();
        config.timeseries.rule.validate(config.scene.classes);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    if (config.preprocess.pca_retain == 0 || config.preprocess.pca_retain > config.scene.bands) {
        throw ConfigError("preprocess.pca_retain must be in 1..scene.bands");
    }
    if (config.data.patch_size == 0 || config.data.patch_size % 2 != 0) {
        throw ConfigError("data.patch_size must be even and positive");
    }
    if (config.search.population < 2) throw ConfigError("search.population must be at least 2");
    if (config.timeseries.steps < 2) throw ConfigError("timeseries.steps must be at least 2");
    if (config.timeseries.band >= config.scene.bands) throw ConfigError("timeseries.band out of range");
    if (config.timeseries.history == 0 || config.timeseries.history + 1 > config.timeseries.steps) {
        throw ConfigError("timeseries.history must be in 1..steps-1");
    }
    return config;
}

std::string dump_config(const ExperimentConfig& config) {
    std::string out;
    for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
    return out;
}

}  // namespace geofuse::cli

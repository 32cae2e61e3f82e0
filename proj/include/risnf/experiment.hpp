#pragma once

#include "risnf/channel.hpp"
#include "risnf/codebook.hpp"
#include "risnf/geometry.hpp"
#include "risnf/optimizer.hpp"
#include "risnf/rate.hpp"
#include "risnf/rng.hpp"
#include "risnf/training.hpp"

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace risnf {

enum class Scale { Desk, Paper };

inline const char* to_string(Scale s) { return s == Scale::Desk ? "desk" : "paper"; }

inline std::optional<Scale> parse_scale(const std::string& s) {
    if (s == "desk") return Scale::Desk;
    if (s == "paper") return Scale::Paper;
    return std::nullopt;
}

/// P[W] = 10^((P[dBm] - 30) / 10).
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// Configuration error tied to a line of the config document (0 = not line specific).
class ConfigError : public std::invalid_argument {
public:
    ConfigError(int line, const std::string& msg)
        : std::invalid_argument(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct Sweep {
    std::string param;
    std::vector<double> values;
};

struct ExperimentConfig {
    Scale scale = Scale::Desk;
    std::string experiment = "rate"; ///< rate | overhead

    double carrier_hz = 30e9;
    double spacing_lambda = 0.5;
    int n_bs = 8;
    int n_ue = 4;
    int m_x = 16;
    int m_y = 2;
    /// Positions in metres at full scale; multiplied by position_scale when the geometry is built.
    Vec3 bs_position{0.0, 0.0, 0.0};
    Vec3 ue_position{24.0, 0.0, 0.0};
    Vec3 ris_position{10.0, 0.0, 8.0};
    double position_scale = 0.08;
    double ue_jitter_m = 0.0;
    /// Height assumed by the distance codewords; the node's own z when unset.
    std::optional<double> bs_codebook_z;
    std::optional<double> ue_codebook_z;

    int nlos_paths = 2;
    double nlos_variance = 0.01;
    FarGainMode far_gain = FarGainMode::Matched;

    std::vector<Design> designs{{ModelTag::NN, TrainingScheme::Hierarchical},
                                {ModelTag::NF, TrainingScheme::TwoStage},
                                {ModelTag::FN, TrainingScheme::TwoStage},
                                {ModelTag::NN, TrainingScheme::Angular},
                                {ModelTag::FF, TrainingScheme::Angular}};
    int layers = 12;
    int s_x = 2;
    int s_y = 2;
    double half_range_lambda = 1000.0;
    double step_d = 0.0; ///< overhead experiment: when > 0, layers follow from the step

    double power_dbm = 30.0;
    double noise_dbm = -105.0;
    double p_max_w = 1.0;
    double noise_w = dbm_to_watts(-105.0);

    std::vector<std::uint64_t> seeds;
    int max_iterations = 20;
    double tolerance = 1e-4;
    int streams = 0; ///< 0 = model default

    std::optional<Sweep> sweep;
    std::string output;
    bool json = false;
    int workers = 1;
    bool record_timing = false;

    GeometryParams geometry_params() const {
        GeometryParams p;
        p.carrier_hz = carrier_hz;
        p.spacing_m = spacing_lambda * kSpeedOfLight / carrier_hz;
        p.n_bs = n_bs;
        p.n_ue = n_ue;
        p.m_x = m_x;
        p.m_y = m_y;
        p.bs_mid = position_scale * bs_position;
        p.ue_mid = position_scale * ue_position;
        p.ris_mid = position_scale * ris_position;
        return p;
    }
    SystemGeometry geometry() const { return SystemGeometry(geometry_params()); }

    double half_range_m() const { return half_range_lambda * (kSpeedOfLight / carrier_hz) * position_scale; }

    SamplingGrid range_for(Node node) const {
        const bool bs = node == Node::BS;
        const Vec3 c = position_scale * (bs ? bs_position : ue_position);
        const auto z = bs ? bs_codebook_z : ue_codebook_z;
        return SamplingGrid::centred(c.x, c.y, half_range_m(), s_x, s_y, z ? position_scale * *z : c.z);
    }

    TrainingBudget budget() const { return {layers, s_x, s_y}; }
};

/// Scale defaults that explicit keys override: array sizes, realization count, position scale.
inline void apply_scale_defaults(ExperimentConfig& c, Scale s) {
    c.scale = s;
    if (s == Scale::Desk) {
        c.n_bs = 8;
        c.n_ue = 4;
        c.m_x = 16;
        c.m_y = 2;
        c.position_scale = 0.08;
        c.seeds.clear();
        for (std::uint64_t i = 1; i <= 20; ++i) c.seeds.push_back(i);
    } else {
        c.n_bs = 16;
        c.n_ue = 8;
        c.m_x = 60;
        c.m_y = 2;
        c.position_scale = 1.0;
        c.seeds.clear();
        for (std::uint64_t i = 1; i <= 500; ++i) c.seeds.push_back(i);
    }
}

inline ExperimentConfig default_config(Scale s = Scale::Desk) {
    ExperimentConfig c;
    apply_scale_defaults(c, s);
    return c;
}

/// Parameters accepted by `sweep: <param> in [...]`.
inline const std::set<std::string>& sweepable_params() {
    static const std::set<std::string> p{"ris_x", "ris_y", "ris_z", "ue_x", "ue_y", "power_dbm", "noise_dbm", "m_x",
                                         "m_y", "n_bs", "n_ue", "layers", "samples", "half_range_lambda", "step_d",
                                         "ue_jitter_m", "bs_codebook_z", "ue_codebook_z"};
    return p;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& s, int line, const std::string& key) {
    const std::string t = trim(s);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &pos);
    } catch (const std::exception&) {
        throw ConfigError(line, "'" + key + "' expects a number, got '" + t + "'");
    }
    if (pos != t.size() || !std::isfinite(v)) throw ConfigError(line, "'" + key + "' expects a number, got '" + t + "'");
    return v;
}

inline int parse_int(const std::string& s, int line, const std::string& key, int lo, int hi) {
    const double v = parse_number(s, line, key);
    if (v != std::floor(v)) throw ConfigError(line, "'" + key + "' expects an integer");
    if (v < lo || v > hi)
        throw ConfigError(line, "'" + key + "' out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(v);
}

inline std::vector<std::string> parse_list(const std::string& s, int line, const std::string& key) {
    const std::string t = trim(s);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') throw ConfigError(line, "'" + key + "' expects a list [a, b, ...]");
    std::vector<std::string> out;
    std::stringstream ss(t.substr(1, t.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(line, "'" + key + "' has an empty list entry");
        out.push_back(item);
    }
    return out;
}

inline Vec3 parse_vec3(const std::string& s, int line, const std::string& key) {
    const auto items = parse_list(s, line, key);
    if (items.size() != 3) throw ConfigError(line, "'" + key + "' expects [x, y, z]");
    return {parse_number(items[0], line, key), parse_number(items[1], line, key), parse_number(items[2], line, key)};
}

inline bool parse_bool(const std::string& s, int line, const std::string& key) {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(line, "'" + key + "' expects true or false");
}

inline void require_positive(double v, int line, const std::string& key) {
    if (!(v > 0.0)) throw ConfigError(line, "'" + key + "' must be positive");
}

} // namespace detail

/// Sets one scalar parameter by name; shared by the parser and by sweeps.
inline void set_param(ExperimentConfig& c, const std::string& key, double v, int line = 0) {
    auto as_int = [&](int lo, int hi) {
        if (v != std::floor(v)) throw ConfigError(line, "'" + key + "' expects an integer");
        if (v < lo || v > hi)
            throw ConfigError(line, "'" + key + "' out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return static_cast<int>(v);
    };
    if (key == "ris_x") c.ris_position.x = v;
    else if (key == "ris_y") c.ris_position.y = v;
    else if (key == "ris_z") c.ris_position.z = v;
    else if (key == "bs_codebook_z") c.bs_codebook_z = v;
    else if (key == "ue_codebook_z") c.ue_codebook_z = v;
    else if (key == "ue_x") c.ue_position.x = v;
    else if (key == "ue_y") c.ue_position.y = v;
    else if (key == "power_dbm") {
        c.power_dbm = v;
        c.p_max_w = dbm_to_watts(v);
    } else if (key == "noise_dbm") {
        c.noise_dbm = v;
        c.noise_w = dbm_to_watts(v);
    } else if (key == "m_x") c.m_x = as_int(1, 4096);
    else if (key == "m_y") c.m_y = as_int(1, 4096);
    else if (key == "n_bs") c.n_bs = as_int(1, 4096);
    else if (key == "n_ue") c.n_ue = as_int(1, 4096);
    else if (key == "layers") c.layers = as_int(0, 24);
    else if (key == "samples") c.s_x = c.s_y = as_int(1, 64);
    else if (key == "samples_x") c.s_x = as_int(1, 64);
    else if (key == "samples_y") c.s_y = as_int(1, 64);
    else if (key == "half_range_lambda") {
        detail::require_positive(v, line, key);
        c.half_range_lambda = v;
    } else if (key == "step_d") {
        if (v < 0.0) throw ConfigError(line, "'step_d' must be >= 0");
        c.step_d = v;
    } else if (key == "ue_jitter_m") {
        if (v < 0.0) throw ConfigError(line, "'ue_jitter_m' must be >= 0");
        c.ue_jitter_m = v;
    } else throw ConfigError(line, "unknown key '" + key + "'");
}

/// YAML mapping of scalar or flow-list values, e.g. `layers: 6`, `models: [NN, FF]`;
/// a sweep is `sweep: <param> in [v1, v2, ...]`. Absent keys keep their defaults.
/// `scale` is applied before every other key regardless of position; without one the
/// document starts from `fallback` (full-size arrays by default).
inline ExperimentConfig parse_config(const std::string& text, std::optional<Scale> scale_override = std::nullopt,
                                     Scale fallback = Scale::Paper) {
    struct Entry {
        int line;
        std::string key;
        std::string value;
    };
    YAML::Node doc;
    try {
        doc = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(e.mark.is_null() ? 0 : e.mark.line + 1, e.msg);
    }
    if (!doc.IsNull() && !doc.IsMap()) throw ConfigError(doc.Mark().line + 1, "expected 'key: value' entries");

    std::vector<Entry> entries;
    std::optional<Scale> scale;
    std::set<std::string> seen;
    for (const auto& kv : doc) {
        const int line = kv.first.Mark().line + 1;
        if (!kv.first.IsScalar()) throw ConfigError(line, "keys must be plain names");
        const std::string key = kv.first.Scalar();
        std::string value;
        if (kv.second.IsScalar()) value = kv.second.Scalar();
        else if (kv.second.IsSequence()) {
            value = "[";
            for (std::size_t i = 0; i < kv.second.size(); ++i) {
                if (!kv.second[i].IsScalar()) throw ConfigError(line, "'" + key + "' list entries must be scalars");
                value += (i ? ", " : "") + kv.second[i].Scalar();
            }
            value += "]";
        } else throw ConfigError(line, "'" + key + "' needs a value");
        if (key == "sweep" && seen.count("sweep")) throw ConfigError(line, "only one sweep parameter is allowed per run");
        if (key != "sweep" && seen.count(key)) throw ConfigError(line, "duplicate key '" + key + "'");
        seen.insert(key);
        if (key == "scale") {
            scale = parse_scale(value);
            if (!scale) throw ConfigError(line, "'scale' must be desk or paper");
            continue;
        }
        entries.push_back({line, key, value});
    }

    ExperimentConfig c = default_config(scale_override.value_or(scale.value_or(fallback)));
    std::optional<std::uint64_t> seed_base;
    std::optional<int> realizations;
    for (const auto& [line, key, value] : entries) {
        if (key == "experiment") {
            if (value != "rate" && value != "overhead") throw ConfigError(line, "'experiment' must be rate or overhead");
            c.experiment = value;
        } else if (key == "carrier_ghz") {
            const double v = detail::parse_number(value, line, key);
            detail::require_positive(v, line, key);
            c.carrier_hz = v * 1e9;
        } else if (key == "spacing_lambda") {
            const double v = detail::parse_number(value, line, key);
            detail::require_positive(v, line, key);
            c.spacing_lambda = v;
        } else if (key == "bs_position") c.bs_position = detail::parse_vec3(value, line, key);
        else if (key == "ue_position") c.ue_position = detail::parse_vec3(value, line, key);
        else if (key == "ris_position") c.ris_position = detail::parse_vec3(value, line, key);
        else if (key == "position_scale") {
            const double v = detail::parse_number(value, line, key);
            detail::require_positive(v, line, key);
            c.position_scale = v;
        } else if (key == "nlos_paths") c.nlos_paths = detail::parse_int(value, line, key, 0, 64);
        else if (key == "nlos_variance") {
            const double v = detail::parse_number(value, line, key);
            if (v < 0.0) throw ConfigError(line, "'nlos_variance' must be >= 0");
            c.nlos_variance = v;
        } else if (key == "far_gain") {
            if (value == "matched") c.far_gain = FarGainMode::Matched;
            else if (value == "unit") c.far_gain = FarGainMode::Unit;
            else throw ConfigError(line, "'far_gain' must be matched or unit");
        } else if (key == "models") {
            c.designs.clear();
            for (const auto& item : detail::parse_list(value, line, key)) {
                const auto d = parse_design(item);
                if (!d) throw ConfigError(line, "unknown model '" + item + "'");
                c.designs.push_back(*d);
            }
        } else if (key == "seed") {
            seed_base = static_cast<std::uint64_t>(detail::parse_int(value, line, key, 0, 2147483647));
        } else if (key == "realizations") {
            realizations = detail::parse_int(value, line, key, 1, 1000000);
        } else if (key == "seeds") {
            c.seeds.clear();
            for (const auto& item : detail::parse_list(value, line, key))
                c.seeds.push_back(static_cast<std::uint64_t>(detail::parse_int(item, line, key, 0, 2147483647)));
        } else if (key == "max_iterations") c.max_iterations = detail::parse_int(value, line, key, 0, 10000);
        else if (key == "tolerance") {
            const double v = detail::parse_number(value, line, key);
            if (v < 0.0) throw ConfigError(line, "'tolerance' must be >= 0");
            c.tolerance = v;
        } else if (key == "streams") c.streams = detail::parse_int(value, line, key, 0, 4096);
        else if (key == "output") c.output = value;
        else if (key == "json") c.json = detail::parse_bool(value, line, key);
        else if (key == "workers") c.workers = detail::parse_int(value, line, key, 1, 256);
        else if (key == "record_timing") c.record_timing = detail::parse_bool(value, line, key);
        else if (key == "sweep") {
            const auto in_pos = value.find(" in ");
            if (in_pos == std::string::npos) throw ConfigError(line, "sweep expects '<param> in [v1, v2, ...]'");
            Sweep sw;
            sw.param = detail::trim(value.substr(0, in_pos));
            if (!sweepable_params().count(sw.param)) throw ConfigError(line, "parameter '" + sw.param + "' cannot be swept");
            for (const auto& item : detail::parse_list(value.substr(in_pos + 4), line, "sweep"))
                sw.values.push_back(detail::parse_number(item, line, "sweep"));
            ExperimentConfig probe = c;
            for (double v : sw.values) set_param(probe, sw.param, v, line);
            c.sweep = std::move(sw);
        } else {
            set_param(c, key, detail::parse_number(value, line, key), line);
        }
    }
    if (seen.count("seeds") && (seed_base || realizations))
        throw ConfigError(0, "'seeds' cannot be combined with 'seed' or 'realizations'");
    if (seed_base || realizations) {
        const std::uint64_t base = seed_base.value_or(1);
        const int n = realizations.value_or(static_cast<int>(c.seeds.size()));
        c.seeds.clear();
        for (int i = 0; i < n; ++i) c.seeds.push_back(base + static_cast<std::uint64_t>(i));
    }
    if (c.seeds.empty()) throw ConfigError(0, "no seeds");
    if (c.designs.empty()) throw ConfigError(0, "no models");
    c.geometry(); // validates the geometry block
    return c;
}

/// Replaces the seed list by `count` seeds starting at `base` (count 0 keeps the count).
inline void rebase_seeds(ExperimentConfig& c, std::uint64_t base, std::size_t count = 0) {
    const std::size_t n = count ? count : c.seeds.size();
    c.seeds.clear();
    for (std::size_t i = 0; i < n; ++i) c.seeds.push_back(base + i);
}

/// Layers whose final step (range width / (2^L S_x)) is at most step_d element spacings.
inline int layers_for_step(const ExperimentConfig& c) {
    const double width_d = 2.0 * c.half_range_lambda / c.spacing_lambda;
    int l = 1;
    while (width_d / (std::ldexp(1.0, l) * c.s_x) > c.step_d && l < 24) ++l;
    return l;
}

struct ResultRow {
    std::uint64_t seed = 0;
    std::string sweep_param = "none";
    double sweep_value = 0.0;
    std::string model;
    double rate_bps_hz = 0.0;
    std::uint64_t evaluations = 0; ///< one training pass
    int iterations = 0;
    double ms = 0.0;
};

struct FailedCell {
    std::uint64_t seed = 0;
    double sweep_value = 0.0;
    std::string model;
    std::string message;
};

struct SummaryRow {
    std::string sweep_param;
    double sweep_value = 0.0;
    std::string model;
    std::size_t count = 0;
    double rate_mean = 0.0;
    double rate_std = 0.0;
    double evaluations_mean = 0.0;
    double iterations_mean = 0.0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<FailedCell> failures;
};

/// Mean and sample standard deviation (n - 1; zero for a single value).
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

/// Per (sweep value, model) statistics over seeds, in first-appearance order.
inline std::vector<SummaryRow> aggregate(const ResultTable& t) {
    std::vector<SummaryRow> out;
    std::vector<std::vector<const ResultRow*>> groups;
    for (const auto& r : t.rows) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const SummaryRow& s) { return s.sweep_value == r.sweep_value && s.model == r.model; });
        if (it == out.end()) {
            out.push_back({r.sweep_param, r.sweep_value, r.model, 0, 0.0, 0.0, 0.0, 0.0});
            groups.emplace_back();
            it = out.end() - 1;
        }
        groups[static_cast<std::size_t>(it - out.begin())].push_back(&r);
    }
    for (std::size_t g = 0; g < out.size(); ++g) {
        std::vector<double> rates;
        double evals = 0.0;
        double iters = 0.0;
        for (const auto* r : groups[g]) {
            rates.push_back(r->rate_bps_hz);
            evals += static_cast<double>(r->evaluations);
            iters += r->iterations;
        }
        const auto [m, s] = mean_std(rates);
        out[g].count = groups[g].size();
        out[g].rate_mean = m;
        out[g].rate_std = s;
        out[g].evaluations_mean = evals / static_cast<double>(groups[g].size());
        out[g].iterations_mean = iters / static_cast<double>(groups[g].size());
    }
    return out;
}

/// One realization at one sweep point: every design is optimized on its own model of
/// the scenario and the resulting (W, Theta) is scored on the physical channel.
inline std::vector<ResultRow> run_cell(const ExperimentConfig& c, std::uint64_t seed, const std::string& sweep_param,
                                       double sweep_value, std::vector<FailedCell>& failures) {
    GeometryParams gp = c.geometry_params();
    if (c.ue_jitter_m > 0.0) {
        auto jr = CounterRng::keyed({seed, 2});
        gp.ue_mid.x += jr.uniform(-c.ue_jitter_m, c.ue_jitter_m);
        gp.ue_mid.y += jr.uniform(-c.ue_jitter_m, c.ue_jitter_m);
    }
    const SystemGeometry g(gp);
    auto rng = CounterRng::keyed({seed, 1});
    const Scenario scn = draw_scenario(g, ScenarioOptions{c.nlos_paths, c.nlos_variance, c.far_gain}, rng);
    const ChannelRealization phys = scn.physical();

    std::vector<ResultRow> rows;
    for (const auto& d : c.designs) {
        ResultRow row;
        row.seed = seed;
        row.sweep_param = sweep_param;
        row.sweep_value = sweep_value;
        row.model = d.label();
        try {
            const auto t0 = std::chrono::steady_clock::now();
            AOConfig ao;
            ao.design = d;
            ao.range_bs = c.range_for(Node::BS);
            ao.range_ue = c.range_for(Node::UE);
            ao.budget = c.budget();
            ao.p_max = c.p_max_w;
            ao.noise_var = c.noise_w;
            ao.max_iterations = c.max_iterations;
            ao.tolerance = c.tolerance;
            ao.streams = c.streams > 0 ? c.streams : default_streams(d.model, g, 1 + c.nlos_paths, 1 + c.nlos_paths);
            const AOState st = ao_loop(scn.model(d.model, g), g, ao);
            row.rate_bps_hz = achievable_rate(cascade(phys, st.phase.coeffs), st.precoder.w, c.noise_w);
            row.evaluations = st.evaluations_per_pass;
            row.iterations = st.iterations;
            if (c.record_timing)
                row.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            rows.push_back(row);
        } catch (const std::exception& e) {
            failures.push_back({seed, sweep_value, row.model, e.what()});
        }
    }
    return rows;
}

/// Seeds x sweep values, each cell an independent job. Rows are merged in
/// (sweep value, seed, model) order whatever the worker count.
inline ResultTable run_experiment(const ExperimentConfig& c) {
    if (c.experiment != "rate") throw std::invalid_argument("run_experiment: use run_overhead for experiment 'overhead'");
    const std::string param = c.sweep ? c.sweep->param : "none";
    const std::vector<double> values = c.sweep ? c.sweep->values : std::vector<double>{0.0};
    std::vector<ExperimentConfig> points;
    for (double v : values) {
        ExperimentConfig p = c;
        if (c.sweep) set_param(p, param, v);
        points.push_back(std::move(p));
    }
    const std::size_t n_cells = values.size() * c.seeds.size();
    std::vector<std::vector<ResultRow>> cell_rows(n_cells);
    std::vector<std::vector<FailedCell>> cell_fail(n_cells);
    auto work = [&](std::size_t i) {
        const std::size_t vi = i / c.seeds.size();
        const std::size_t si = i % c.seeds.size();
        try {
            cell_rows[i] = run_cell(points[vi], c.seeds[si], param, values[vi], cell_fail[i]);
        } catch (const std::exception& e) {
            cell_fail[i].push_back({c.seeds[si], values[vi], "*", e.what()});
        }
    };
    const int workers = std::max(1, std::min<int>(c.workers, static_cast<int>(n_cells)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n_cells; ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n_cells; i = next++) work(i);
            });
        for (auto& t : pool) t.join();
    }
    ResultTable out;
    for (std::size_t i = 0; i < n_cells; ++i) {
        out.rows.insert(out.rows.end(), cell_rows[i].begin(), cell_rows[i].end());
        out.failures.insert(out.failures.end(), cell_fail[i].begin(), cell_fail[i].end());
    }
    return out;
}

inline const char* kResultHeader = "seed,sweep_param,sweep_value,model,rate_bps_hz,evaluations,iterations,ms";

namespace detail {
inline std::string fmt12(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    return f;
}

inline void check_written(std::ostream& f, const std::string& path) {
    f.flush();
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}
} // namespace detail

inline void write_results_csv(std::ostream& os, const ResultTable& t) {
    os << kResultHeader << '\n';
    for (const auto& r : t.rows)
        os << r.seed << ',' << r.sweep_param << ',' << detail::fmt12(r.sweep_value) << ',' << r.model << ','
           << detail::fmt12(r.rate_bps_hz) << ',' << r.evaluations << ',' << r.iterations << ',' << detail::fmt12(r.ms)
           << '\n';
}

inline std::vector<ResultRow> read_results_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kResultHeader) throw std::invalid_argument("results csv: unexpected header");
    std::vector<ResultRow> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 8) throw std::invalid_argument("results csv: expected 8 columns");
        out.push_back({std::stoull(f[0]), f[1], std::stod(f[2]), f[3], std::stod(f[4]), std::stoull(f[5]), std::stoi(f[6]),
                       std::stod(f[7])});
    }
    return out;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& s) {
    os << "sweep_param,sweep_value,model,count,rate_mean,rate_std,evaluations_mean,iterations_mean\n";
    for (const auto& r : s)
        os << r.sweep_param << ',' << detail::fmt12(r.sweep_value) << ',' << r.model << ',' << r.count << ','
           << detail::fmt12(r.rate_mean) << ',' << detail::fmt12(r.rate_std) << ',' << detail::fmt12(r.evaluations_mean)
           << ',' << detail::fmt12(r.iterations_mean) << '\n';
}

inline nlohmann::json results_to_json(const ResultTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"seed", r.seed},
                        {"sweep_param", r.sweep_param},
                        {"sweep_value", r.sweep_value},
                        {"model", r.model},
                        {"rate_bps_hz", r.rate_bps_hz},
                        {"evaluations", r.evaluations},
                        {"iterations", r.iterations},
                        {"ms", r.ms}});
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& s : aggregate(t))
        summary.push_back({{"sweep_param", s.sweep_param},
                           {"sweep_value", s.sweep_value},
                           {"model", s.model},
                           {"count", s.count},
                           {"rate_mean", s.rate_mean},
                           {"rate_std", s.rate_std}});
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : t.failures)
        failures.push_back({{"seed", f.seed}, {"sweep_value", f.sweep_value}, {"model", f.model}, {"message", f.message}});
    return {{"rows", rows}, {"summary", summary}, {"failures", failures}};
}

/// `<stem>_summary.csv` next to the results file.
inline std::string summary_path(const std::string& path) {
    const auto dot = path.rfind('.');
    const auto slash = path.find_last_of('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    return (has_ext ? path.substr(0, dot) : path) + "_summary.csv";
}

/// Writes the results CSV, its summary, and optionally a JSON mirror (<path>.json).
inline void emit_results(const ResultTable& t, const std::string& path, bool json = false) {
    {
        auto f = detail::open_out(path);
        write_results_csv(f, t);
        detail::check_written(f, path);
    }
    {
        const std::string sp = summary_path(path);
        auto f = detail::open_out(sp);
        write_summary_csv(f, aggregate(t));
        detail::check_written(f, sp);
    }
    if (json) {
        const std::string jp = path + ".json";
        auto f = detail::open_out(jp);
        f << results_to_json(t).dump(2) << '\n';
        detail::check_written(f, jp);
    }
}

struct OverheadRow {
    std::string sweep_param = "none";
    double sweep_value = 0.0;
    int layers = 0;
    int s_x = 0;
    int s_y = 0;
    int m = 0;
    std::uint64_t angular = 0;
    std::uint64_t hierarchical = 0;
    std::uint64_t hierarchical_es = 0;
    std::uint64_t nn_lattice = 0;
    std::uint64_t two_stage = 0;
    std::uint64_t hybrid_es = 0;
    double two_stage_ratio = 0.0; ///< two-stage / hybrid ES
};

/// Closed-form training overheads at every sweep point.
inline std::vector<OverheadRow> run_overhead(const ExperimentConfig& c) {
    const std::string param = c.sweep ? c.sweep->param : "none";
    const std::vector<double> values = c.sweep ? c.sweep->values : std::vector<double>{0.0};
    std::vector<OverheadRow> out;
    for (double v : values) {
        ExperimentConfig p = c;
        if (c.sweep) set_param(p, param, v);
        OverheadRow r;
        r.sweep_param = param;
        r.sweep_value = v;
        r.layers = p.step_d > 0.0 ? layers_for_step(p) : p.layers;
        r.s_x = p.s_x;
        r.s_y = p.s_y;
        r.m = p.m_x * p.m_y;
        r.angular = overhead::angular(r.m);
        r.hierarchical = overhead::hierarchical(r.layers, r.s_x, r.s_y);
        r.hierarchical_es = overhead::hierarchical_es(r.layers, r.s_x, r.s_y);
        r.nn_lattice = r.layers <= 14 ? overhead::nn_lattice(r.layers, r.s_x, r.s_y) : 0;
        r.two_stage = overhead::two_stage(r.m, r.layers, r.s_x, r.s_y);
        r.hybrid_es = overhead::hybrid_es(r.m, r.layers, r.s_x, r.s_y);
        r.two_stage_ratio = r.hybrid_es ? static_cast<double>(r.two_stage) / static_cast<double>(r.hybrid_es) : 0.0;
        out.push_back(r);
    }
    return out;
}

inline void write_overhead_csv(std::ostream& os, const std::vector<OverheadRow>& rows) {
    os << "sweep_param,sweep_value,layers,s_x,s_y,m,angular,hierarchical,hierarchical_es,nn_lattice,two_stage,hybrid_es,"
          "two_stage_ratio\n";
    for (const auto& r : rows)
        os << r.sweep_param << ',' << detail::fmt12(r.sweep_value) << ',' << r.layers << ',' << r.s_x << ',' << r.s_y << ','
           << r.m << ',' << r.angular << ',' << r.hierarchical << ',' << r.hierarchical_es << ',' << r.nn_lattice << ','
           << r.two_stage << ',' << r.hybrid_es << ',' << detail::fmt12(r.two_stage_ratio) << '\n';
}

} // namespace risnf

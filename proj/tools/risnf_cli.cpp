#include "risnf/risnf.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

risnf::ExperimentConfig load_config(const std::string& path, const std::string& scale) {
    std::optional<risnf::Scale> s;
    if (!scale.empty()) s = risnf::parse_scale(scale);
    const std::string text = path.empty() ? std::string() : read_file(path);
    try {
        return risnf::parse_config(text, s, risnf::Scale::Desk);
    } catch (const risnf::ConfigError& e) {
        throw std::runtime_error((path.empty() ? std::string("config") : path) + ": " + e.what());
    }
}

template <class F>
void with_output(const std::string& path, F&& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    write(f);
    if (!f.flush()) throw std::runtime_error("write to '" + path + "' failed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RIS near-field beam training and rate optimization"};
    app.require_subcommand(1);

    std::string scale;
    std::string out;
    std::optional<std::uint64_t> seed;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scale", scale, "desk or paper defaults")->check(CLI::IsMember({"desk", "paper"}));
        sub->add_option("--out", out, "output path (stdout when omitted)");
        sub->add_option("--seed", seed, "first seed");
    };

    auto* run = app.add_subcommand("run", "run an experiment config");
    std::string config_path;
    int workers = 0;
    run->add_option("config", config_path, "config file")->required();
    run->add_option("--workers", workers, "parallel workers")->check(CLI::Range(1, 256));
    add_common(run);

    auto* codebook = app.add_subcommand("codebook", "codebook tools");
    auto* cb_dump = codebook->add_subcommand("dump", "write a codebook as CSV");
    codebook->require_subcommand(1);
    std::string family = "FF";
    std::string cb_config;
    cb_dump->add_option("--family", family, "FF, NN, NF or FN")->check(CLI::IsMember({"FF", "NN", "NF", "FN"}));
    cb_dump->add_option("--config", cb_config, "config file for geometry and sampling ranges");
    add_common(cb_dump);

    auto* channel = app.add_subcommand("channel", "channel tools");
    auto* ch_dump = channel->add_subcommand("dump", "write one channel realization as JSON");
    channel->require_subcommand(1);
    std::string model = "physical";
    std::string ch_config;
    ch_dump->add_option("--model", model, "FF, NF, FN, NN or physical")
        ->check(CLI::IsMember({"FF", "NF", "FN", "NN", "physical"}));
    ch_dump->add_option("--config", ch_config, "config file for geometry and channel options");
    add_common(ch_dump);

    auto* validate = app.add_subcommand("validate", "run the invariant suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            auto cfg = load_config(config_path, scale);
            if (seed) risnf::rebase_seeds(cfg, *seed);
            if (workers > 0) cfg.workers = workers;
            if (!out.empty()) cfg.output = out;
            if (cfg.experiment == "overhead") {
                const auto rows = risnf::run_overhead(cfg);
                with_output(cfg.output, [&](std::ostream& os) { risnf::write_overhead_csv(os, rows); });
                return 0;
            }
            const auto table = risnf::run_experiment(cfg);
            for (const auto& f : table.failures)
                std::cerr << "cell failed: seed " << f.seed << " value " << f.sweep_value << " model " << f.model << ": "
                          << f.message << '\n';
            if (cfg.output.empty() || cfg.output == "-") risnf::write_results_csv(std::cout, table);
            else risnf::emit_results(table, cfg.output, cfg.json);
            return 0;
        }
        if (cb_dump->parsed()) {
            const auto cfg = load_config(cb_config, scale);
            const auto g = cfg.geometry();
            risnf::Codebook cb;
            if (family == "FF") cb = risnf::build_ff_codebook(g);
            else if (family == "NN") cb = risnf::build_nn_codebook(cfg.range_for(risnf::Node::BS), cfg.range_for(risnf::Node::UE), g);
            else {
                const auto tag = *risnf::parse_model_tag(family);
                cb = risnf::build_hybrid_codebook(tag, cfg.range_for(tag == risnf::ModelTag::NF ? risnf::Node::BS : risnf::Node::UE), g);
            }
            with_output(out, [&](std::ostream& os) { risnf::write_codebook_csv(os, cb); });
            return 0;
        }
        if (ch_dump->parsed()) {
            const auto cfg = load_config(ch_config, scale);
            const auto g = cfg.geometry();
            auto rng = risnf::CounterRng::keyed({seed.value_or(cfg.seeds.front()), 1});
            const auto scn = risnf::draw_scenario(g, {cfg.nlos_paths, cfg.nlos_variance, cfg.far_gain}, rng);
            const auto ch = model == "physical" ? scn.physical() : scn.model(*risnf::parse_model_tag(model), g);
            with_output(out, [&](std::ostream& os) { risnf::write_channel_json(os, ch); });
            return 0;
        }
        if (validate->parsed()) return risnf::print_invariant_suite(std::cout) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

// Command-line front end: loads an INI config, runs one of the study
// commands, writes the CSV outputs, and prints the human-readable summary.
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <purcell/commands.hpp>
#include <purcell/config.hpp>

namespace {

void write_outputs(const purcell::CommandResult& result, const std::string& out_dir) {
    for (const purcell::NamedCsv& f : result.csvs) {
        std::string path = out_dir + "/" + f.name;
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write '" + path + "'");
        out << f.content;
        std::cout << "wrote " << path << "\n";
    }
    std::cout << result.summary;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavity-enhanced readout and state-preparation calculator"};
    app.require_subcommand(1);
    app.fallthrough(); // lets --out appear after the subcommand name

    std::string config_path, out_dir = ".";
    std::uint64_t seed = 0;
    int workers = 0;
    std::uint64_t n_trials = 0;
    app.add_option("--out", out_dir, "directory for CSV outputs")->capture_default_str();

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "INI parameter file")->required();
        cmd->add_option("--seed", seed, "override [run] seed");
        cmd->add_option("--workers", workers, "override [run] workers");
        cmd->add_option("--n-trials", n_trials, "override [run] n_trials");
    };

    CLI::App* rates = app.add_subcommand("rates", "emission rates for each readout window");
    CLI::App* decay = app.add_subcommand("decay", "cavity output flux after excitation");
    CLI::App* scan = app.add_subcommand("scan", "emission lineshape against atomic detuning");
    CLI::App* readout = app.add_subcommand("readout", "count histograms and discrimination");
    CLI::App* prep = app.add_subcommand("prep", "segmented state-preparation study");
    for (CLI::App* cmd : {rates, decay, scan, readout, prep})
        add_common(cmd);

    CLI::App* fit = app.add_subcommand("fit", "fit a two-column CSV");
    std::string fit_path, fit_model = "exponential";
    double fit_window = -std::numeric_limits<double>::infinity();
    fit->add_option("data", fit_path, "CSV file with x,y columns")->required();
    fit->add_option("--model", fit_model, "exponential or lorentzian")->capture_default_str();
    fit->add_option("--window-start", fit_window, "discard samples with x below this");

    CLI11_PARSE(app, argc, argv);

    try {
        purcell::CommandResult result;
        if (fit->parsed()) {
            result = purcell::cmd_fit(fit_path, fit_model, fit_window);
        } else {
            purcell::RunConfig cfg = purcell::load_config(config_path);
            if (seed != 0) cfg.run.seed = seed;
            if (workers != 0) cfg.run.workers = workers;
            if (n_trials != 0) cfg.run.n_trials = n_trials;
            if (rates->parsed())
                result = purcell::cmd_rates(cfg);
            else if (decay->parsed())
                result = purcell::cmd_decay(cfg);
            else if (scan->parsed())
                result = purcell::cmd_scan(cfg);
            else if (readout->parsed())
                result = purcell::cmd_readout(cfg);
            else
                result = purcell::cmd_prep(cfg);
        }
        write_outputs(result, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

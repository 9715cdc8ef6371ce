// Command-line front end: gen-data, select, run, verify, report.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bbal/dataset.hpp"
#include "bbal/errors.hpp"
#include "bbal/harness.hpp"
#include "bbal/io.hpp"
#include "bbal/kernel.hpp"
#include "bbal/report.hpp"
#include "bbal/selection.hpp"
#include "bbal/verify.hpp"

#ifndef BBAL_VERSION
#define BBAL_VERSION "dev"
#endif

namespace {

constexpr int kExitMalformed = 2;
constexpr int kExitInfeasible = 3;

std::vector<bbal::PointId> parse_id_list(const std::string& text) {
    std::vector<bbal::PointId> ids;
    if (text.empty()) return ids;
    for (auto field : bbal::io::split_fields(text)) {
        auto id = bbal::io::parse_uint(field);
        if (!id) throw bbal::InputError("--train-ids: invalid id '" + std::string(field) + "'");
        ids.push_back(*id);
    }
    return ids;
}

struct SelectArgs {
    std::string predictions;
    std::string method;
    std::size_t batch_size = 1;
    double sigma = 0.1;
    std::string train_ids;
    std::uint64_t seed = 0;
    std::string out;
    bool bait_backward = false;
};

int cmd_select(const SelectArgs& a) {
    auto method = bbal::parse_method(a.method);
    if (!method) throw bbal::InputError("unknown method '" + a.method + "'");
    auto predictions = bbal::read_prediction_csv(a.predictions);
    auto train = parse_id_list(a.train_ids);
    std::vector<bbal::PointId> pool;
    for (auto id : predictions.ids())
        if (std::find(train.begin(), train.end(), id) == train.end()) pool.push_back(id);

    bbal::SelectionRequest req{bbal::KernelState(bbal::center_predictions(predictions), bbal::NoiseModel(a.sigma)),
                               std::move(pool),
                               std::move(train),
                               a.batch_size,
                               bbal::UniformStream::seeded(a.seed),
                               {a.bait_backward}};
    auto result = bbal::select(*method, req);
    if (!a.out.empty()) bbal::io::write_atomic(a.out, bbal::format_selection_json(*method, result));
    for (auto id : result.selected) std::cout << id << '\n';
    return 0;
}

int cmd_gen_data(const std::string& generator, std::size_t n, std::uint64_t seed, double noise_sd,
                 const std::string& out) {
    if (generator != "friedman1") throw bbal::InputError("unknown generator '" + generator + "'");
    bbal::write_dataset_csv(bbal::generate_friedman1(n, noise_sd, seed), out);
    return 0;
}

int cmd_run(const std::string& config_path, std::size_t jobs, const std::string& out) {
    auto cfg = bbal::load_config(config_path);
    if (!out.empty()) cfg.output = out;
    std::cerr << bbal::config_to_json(cfg).dump(2) << '\n';
    auto records = bbal::run_active_learning(cfg, jobs);
    bbal::emit_results(records, cfg.output);
    std::cerr << "wrote " << records.size() << " records to " << cfg.output.string() << '\n';
    return 0;
}

int cmd_verify(const bbal::VerifyOptions& options) {
    bool ok = true;
    for (const auto& c : bbal::run_identity_suites(options)) {
        if (c.error.empty())
            std::printf("%-4s %-58s residual %.3e  tolerance %.1e\n", c.passed() ? "ok" : "FAIL", c.name.c_str(),
                        c.residual, c.tolerance);
        else
            std::printf("%-4s %-58s error: %s\n", "FAIL", c.name.c_str(), c.error.c_str());
        ok = ok && c.passed();
    }
    return ok ? 0 : 1;
}

int cmd_report(const std::string& results, const std::string& svg) {
    auto rows = bbal::read_results_csv(results);
    std::cout << bbal::format_report(rows);
    if (!svg.empty()) bbal::io::write_atomic(svg, bbal::format_report_svg(rows));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Black-box batch active learning for regression from ensemble predictions"};
    app.set_version_flag("--version", std::string("bbal ") + BBAL_VERSION);
    app.require_subcommand(1);

    SelectArgs sel;
    auto* select = app.add_subcommand("select", "Select a batch from a prediction-matrix CSV");
    select->add_option("--predictions", sel.predictions, "CSV with header id,m0,...,m{K-1}")->required();
    select->add_option("--method", sel.method, "uniform|bald|maxdet|badge|coreset|lcmd|bait")->required();
    select->add_option("--batch-size", sel.batch_size, "Batch size B")->required()->check(CLI::PositiveNumber);
    select->add_option("--sigma", sel.sigma, "Observation noise standard deviation")->capture_default_str();
    select->add_option("--train-ids", sel.train_ids, "Comma-separated labeled ids (excluded from the pool)");
    select->add_option("--seed", sel.seed, "Seed for the stochastic methods")->capture_default_str();
    select->add_option("--out", sel.out, "Write the selection JSON here");
    select->add_flag("--bait-backward", sel.bait_backward, "Enable the BAIT backward pass");

    std::string generator = "friedman1", gen_out;
    std::size_t gen_n = 0;
    std::uint64_t gen_seed = 0;
    double noise_sd = 1.0;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset CSV");
    gen->add_option("--generator", generator, "Generator name")->capture_default_str();
    gen->add_option("--n", gen_n, "Number of rows")->required()->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
    gen->add_option("--noise-sd", noise_sd, "Target noise standard deviation")->capture_default_str();
    gen->add_option("--out", gen_out, "Output CSV")->required();

    std::string config_path, run_out;
    std::size_t jobs = 1;
    auto* run = app.add_subcommand("run", "Run an active-learning experiment from a JSON config");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--jobs", jobs, "Parallel (method, trial) units")->capture_default_str()->check(CLI::PositiveNumber);
    run->add_option("--out", run_out, "Override the config's output path");

    bbal::VerifyOptions vopt;
    auto* verify = app.add_subcommand("verify", "Check kernel identities on generated instances");
    verify->add_option("--sigma", vopt.sigma, "Noise level used by the conditioning suites")->capture_default_str();
    verify->add_option("--seed", vopt.seed, "Instance seed")->capture_default_str();
    verify->add_option("--samples", vopt.samples, "Posterior samples for the sampled check")->capture_default_str();

    std::string results_path, svg_path;
    auto* report = app.add_subcommand("report", "Summarize a results CSV");
    report->add_option("--results", results_path, "Results CSV from 'run'")->required();
    report->add_option("--svg", svg_path, "Also write a learning-curve SVG");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitMalformed;
    }

    try {
        if (*select) return cmd_select(sel);
        if (*gen) return cmd_gen_data(generator, gen_n, gen_seed, noise_sd, gen_out);
        if (*run) return cmd_run(config_path, jobs, run_out);
        if (*verify) return cmd_verify(vopt);
        if (*report) return cmd_report(results_path, svg_path);
    } catch (const bbal::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const bbal::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitMalformed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

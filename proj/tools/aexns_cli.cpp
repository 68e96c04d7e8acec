// Experiment runner. One reproducibility surface: every subcommand is fully
// determined by (profile, seed, params) and writes CSV outputs, a summary
// JSON and a run manifest into its output directory.
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "aexns/experiments.hpp"

namespace fs = std::filesystem;
using namespace aexns;

namespace {

struct GlobalOpts {
    std::string profile = "paper-like";
    std::uint64_t seed = 42;
    std::string out;
};

fs::path resolve_outdir(const GlobalOpts& g, const std::string& subcommand) {
    if (!g.out.empty()) return g.out;
    const char* env = std::getenv("AEXNS_OUT");
    fs::path base = env ? fs::path(env) : fs::path("runs");
    return base / (subcommand + "-seed" + std::to_string(g.seed));
}

void add_param_opt(CLI::App* cmd, cli::Params& params, const std::string& flag,
                   const std::string& key, const std::string& help) {
    auto holder = std::make_shared<std::string>();
    cmd->add_option_function<std::string>(
           flag, [&params, key, holder](const std::string& v) { params[key] = v; }, help)
        ->expected(1);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AEX-NStep probabilistic interrupt-counting attack simulator"};
    app.require_subcommand(0, 1);

    GlobalOpts g;
    app.add_option("--profile", g.profile, "profile preset name or file path")
        ->capture_default_str();
    app.add_option("--seed", g.seed, "run seed")->capture_default_str();
    app.add_option("--out", g.out, "output directory (default runs/<cmd>-seed<seed>; "
                                   "AEXNS_OUT overrides the default base)");

    cli::Params params;
    std::string chosen;

    auto* calibrate = app.add_subcommand("calibrate", "derive PSS and LBMS IPI plans");
    add_param_opt(calibrate, params, "--short-cycles", "short-cycles",
                  "LBMS short-branch length in cycles");

    auto* classify = app.add_subcommand("classify-eval",
                                        "train/evaluate the interrupt classifier");
    add_param_opt(classify, params, "--per-class", "per-class", "labeled traces per class");
    add_param_opt(classify, params, "--online-interrupts", "online-interrupts",
                  "interrupts for the online evaluation streams");

    auto* stepping = app.add_subcommand("stepping-rate", "probabilistic stepping histogram");
    add_param_opt(stepping, params, "--filler", "filler", "victim filler: nop or addl");
    add_param_opt(stepping, params, "--region-length", "region-length", "filler count");
    add_param_opt(stepping, params, "--interrupts", "interrupts", "interrupts to fire");

    auto* pss = app.add_subcommand("pss-bench", "PSS attacker success benchmark");
    add_param_opt(pss, params, "--deltas", "deltas", "comma-separated branch deltas");
    add_param_opt(pss, params, "--samples", "samples", "traces per guess (k)");
    add_param_opt(pss, params, "--trials", "trials", "trials per delta");

    auto* lbms = app.add_subcommand("lbms-bench", "LBMS detection-rate study");
    add_param_opt(lbms, params, "--deltas", "deltas", "comma-separated branch deltas");
    add_param_opt(lbms, params, "--traces", "traces", "longer-branch traces per delta");
    add_param_opt(lbms, params, "--base-length", "base-length", "short-branch filler count");

    auto* memcmp_cmd = app.add_subcommand("memcmp", "PSS attack on the early-exit memcmp");
    add_param_opt(memcmp_cmd, params, "--secret", "secret", "hidden string (A-Z, length 1-8)");
    add_param_opt(memcmp_cmd, params, "--samples", "samples", "traces per candidate (k)");

    auto* trunc = app.add_subcommand("ecdsa-trunc", "end-to-end nonce-truncation key recovery");
    add_param_opt(trunc, params, "--mode", "mode", "'forced' (every 8th biased) or 'natural'");
    add_param_opt(trunc, params, "--bias-width", "bias-width", "MSB-ones bias width in bits");
    add_param_opt(trunc, params, "--signatures", "signatures", "signature budget");
    add_param_opt(trunc, params, "--target-flagged", "target-flagged", "flagged set size");
    add_param_opt(trunc, params, "--subset", "subset", "lattice subset size");

    auto* lzb = app.add_subcommand("lzb", "leading-zero-bit delta study and cost model");
    add_param_opt(lzb, params, "--signatures", "signatures", "signatures to scan");
    add_param_opt(lzb, params, "--subset", "subset", "lattice subset size");
    add_param_opt(lzb, params, "--recover", "recover", "1 to run the lattice demonstration");
    add_param_opt(lzb, params, "--call-rate", "call-rate", "injected call-landing rate");

    auto* er = app.add_subcommand("expected-reductions", "hypergeometric reduction cost model");
    add_param_opt(er, params, "--flagged", "flagged", "flagged signature count F");
    add_param_opt(er, params, "--tp", "tp", "true-positive rate");
    add_param_opt(er, params, "--subset", "subset", "subset size m");

    auto* profiles = app.add_subcommand("profiles", "list or dump embedded profile presets");
    std::string dump_name;
    profiles->add_option("--dump", dump_name, "print the named preset");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (profiles->parsed()) {
            if (!dump_name.empty()) {
                std::cout << cli::Profile::preset_text(dump_name);
            } else {
                for (const auto& n : cli::Profile::preset_names()) std::cout << n << "\n";
            }
            return 0;
        }
        for (CLI::App* cmd :
             {calibrate, classify, stepping, pss, lbms, memcmp_cmd, trunc, lzb, er}) {
            if (cmd->parsed()) {
                chosen = cmd->get_name();
                break;
            }
        }
        if (chosen.empty()) {
            std::cout << app.help();
            return 0;
        }
        cli::Profile profile = cli::Profile::load(g.profile);
        fs::path outdir = resolve_outdir(g, chosen);
        auto summary = cli::run_subcommand(chosen, profile, g.seed, outdir, params);
        std::cout << summary["result"].dump(2) << "\n";
        std::cerr << "outputs written to " << outdir.string() << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CalibrationError& e) {
        std::cerr << "calibration error: " << e.what() << "\n";
        return 3;
    } catch (const BudgetError& e) {
        std::cerr << "budget exhausted: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

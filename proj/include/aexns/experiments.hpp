#pragma once
// Experiment drivers behind the CLI subcommands. Each driver runs one of the
// paper-shaped experiments deterministically from (profile, seed, params),
// writes CSV outputs plus a summary JSON embedding the manifest, and returns
// the summary.

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "aexns/attack.hpp"
#include "aexns/profile.hpp"
#include "aexns/victims.hpp"

namespace aexns::cli {

using Params = std::map<std::string, std::string>;

// Builds the attack environment for an experiment view: mitigation model,
// calibrated PSS plan, and a classifier trained on a synthetic corpus of the
// given filler (or the ground-truth oracle when the profile says so).
attack::AttackEnv make_attack_env(const Profile::View& view, victims::Filler filler,
                                  std::uint64_t seed);

// Labeled corpus over a uniform-filler region; interrupts are placed directly
// (debug-mode trace gathering), ground truth labels, per-class quotas.
std::vector<std::pair<fp::CounterTrace, fp::InterruptClass>> generate_corpus(
    const Profile::View& view, victims::Filler filler, int region_len, int per_class,
    std::uint64_t seed);

// Runs `subcommand` and writes outputs into `outdir` (created if needed).
nlohmann::json run_subcommand(const std::string& subcommand, const Profile& profile,
                              std::uint64_t seed, const std::filesystem::path& outdir,
                              const Params& params);

const std::vector<std::string>& subcommand_names();

}  // namespace aexns::cli

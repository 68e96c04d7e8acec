#pragma once
// Run profiles: a flat key/value schema with typed defaults, per-experiment
// override sections, strict unknown-key rejection and a stable content hash.
// Named presets ("paper-like", "noiseless", "fast") are embedded.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aexns/arrival.hpp"
#include "aexns/attack.hpp"
#include "aexns/fingerprint.hpp"
#include "aexns/sim.hpp"

namespace aexns::cli {

class Profile {
  public:
    // Load from preset name or file path; preset wins if both match.
    static Profile load(const std::string& name_or_path);
    static Profile from_text(const std::string& text, const std::string& name);
    static const std::vector<std::string>& preset_names();
    static std::string preset_text(const std::string& name);

    const std::string& name() const { return name_; }
    std::uint64_t hash() const { return hash_; }

    // A view resolves "<experiment>.<key>" before "<key>".
    class View {
      public:
        View(const Profile& p, std::string experiment)
            : profile_(p), experiment_(std::move(experiment)) {}

        double get_double(const std::string& key) const;
        std::int64_t get_int(const std::string& key) const;
        bool get_bool(const std::string& key) const;
        bool has_override(const std::string& key) const;

        sim::MitigationModel mitigation() const;
        arrival::ArrivalDistribution arrival_dist() const;
        fp::TraceShape trace_shape() const;
        fp::ForestHyper forest_hyper() const;
        double slowdown() const { return get_double("sim.slowdown"); }
        bool cache_enabled() const { return !get_bool("sim.cache_disabled"); }

      private:
        const Profile& profile_;
        std::string experiment_;
    };

    View view(const std::string& experiment) const { return View(*this, experiment); }

    // Canonical resolved "key = value" text (sorted, defaults included).
    std::string canonical_text() const;
    const std::map<std::string, std::string>& explicit_values() const { return values_; }

  private:
    friend class View;
    std::string name_;
    std::map<std::string, std::string> values_;  // explicit entries only
    std::uint64_t hash_ = 0;

    void validate_keys() const;
    std::optional<std::string> lookup(const std::string& experiment,
                                      const std::string& key) const;
};

// Experiment section names accepted as override prefixes.
const std::vector<std::string>& experiment_names();

}  // namespace aexns::cli

#pragma once
// IPI arrival timing: truncated-normal delivery jitter plus the PSS/LBMS
// calibration procedures that place the distribution against the mitigation
// window.

#include <optional>

#include "aexns/common.hpp"

namespace aexns::arrival {

struct ArrivalDistribution {
    double mean_offset = 0.0;  // cycles from enclave resume
    double std_dev = 100.0;    // cycles
    // Lower truncation is fixed at 0: a resampled draw below 0 is redrawn.

    void validate() const {
        if (std_dev < 0) throw ConfigError("arrival std_dev must be >= 0");
    }
};

enum class Mode { Pss, Lbms };

struct IpiPlan {
    double fire_delay = 0.0;  // cycles added to mean_offset per trace
    Mode mode = Mode::Pss;
    std::optional<double> lbms_lower_bound;  // cycles, Lbms only

    void validate() const {
        if (fire_delay < 0) throw ConfigError("fire_delay must be >= 0");
        if (mode == Mode::Lbms && !lbms_lower_bound) {
            throw ConfigError("Lbms plan requires lbms_lower_bound");
        }
    }
};

// [OP] sample_arrival: Normal(mean_offset + fire_delay, std_dev), resampled
// until >= 0 (truncation by resampling keeps 0 from becoming an atom).
double sample_arrival(const ArrivalDistribution& dist, const IpiPlan& plan, Rng& rng);

// [OP] quantile: inverse CDF of the *untruncated* normal at mean_offset.
double quantile(const ArrivalDistribution& dist, double p);

// Quantile of the effective arrival (dist shifted by the plan's fire delay).
double quantile(const ArrivalDistribution& dist, const IpiPlan& plan, double p);

// [OP] calibrate_pss: place the right tail of the arrival distribution on the
// end of the (r = 0) mitigation so that P(arrival > mitigation_end) = tail_mass.
IpiPlan calibrate_pss(const ArrivalDistribution& dist, double mitigation_end, double tail_mass);

// [OP] calibrate_lbms: lower-bound arrivals so that
// P(arrival < mitigation_end + short_branch_cycles) <= epsilon.
IpiPlan calibrate_lbms(const ArrivalDistribution& dist, double mitigation_end,
                       double short_branch_cycles, double epsilon);

}  // namespace aexns::arrival

#include "aexns/arrival.hpp"

namespace aexns::arrival {

double sample_arrival(const ArrivalDistribution& dist, const IpiPlan& plan, Rng& rng) {
    dist.validate();
    plan.validate();
    double mean = dist.mean_offset + plan.fire_delay;
    if (dist.std_dev == 0.0) {
        if (mean < 0) throw CalibrationError("degenerate arrival below truncation point");
        return mean;
    }
    for (;;) {
        double x = rng.normal(mean, dist.std_dev);
        if (x >= 0.0) return x;
    }
}

double quantile(const ArrivalDistribution& dist, double p) {
    dist.validate();
    if (!(p > 0.0 && p < 1.0)) throw UsageError("quantile: p must be in (0,1)");
    if (dist.std_dev == 0.0) return dist.mean_offset;
    return dist.mean_offset + dist.std_dev * normal_quantile(p);
}

double quantile(const ArrivalDistribution& dist, const IpiPlan& plan, double p) {
    return quantile(dist, p) + plan.fire_delay;
}

IpiPlan calibrate_pss(const ArrivalDistribution& dist, double mitigation_end, double tail_mass) {
    dist.validate();
    if (!(tail_mass > 0.0 && tail_mass < 0.5)) {
        throw CalibrationError("pss tail_mass must be in (0, 0.5)");
    }
    // sigma = 0 degenerates to the atom at mitigation_end.
    double z = dist.std_dev == 0.0 ? 0.0 : normal_quantile(1.0 - tail_mass);
    double target_mean = mitigation_end - dist.std_dev * z;
    double fire_delay = target_mean - dist.mean_offset;
    if (fire_delay < 0) {
        throw CalibrationError("pss calibration infeasible: fire_delay would be negative");
    }
    IpiPlan plan;
    plan.fire_delay = fire_delay;
    plan.mode = Mode::Pss;
    return plan;
}

IpiPlan calibrate_lbms(const ArrivalDistribution& dist, double mitigation_end,
                       double short_branch_cycles, double epsilon) {
    dist.validate();
    if (!(epsilon > 0.0 && epsilon <= 1e-3)) {
        throw CalibrationError("lbms epsilon must be in (0, 1e-3]");
    }
    double bound = mitigation_end + short_branch_cycles;
    double z = dist.std_dev == 0.0 ? 0.0 : normal_quantile(1.0 - epsilon);
    double target_mean = bound + dist.std_dev * z;
    double fire_delay = target_mean - dist.mean_offset;
    if (fire_delay < 0) {
        throw CalibrationError("lbms calibration infeasible: fire_delay would be negative");
    }
    IpiPlan plan;
    plan.fire_delay = fire_delay;
    plan.mode = Mode::Lbms;
    plan.lbms_lower_bound = bound;
    return plan;
}

}  // namespace aexns::arrival

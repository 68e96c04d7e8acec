#include "aexns/sim.hpp"

#include <algorithm>

namespace aexns::sim {

void VictimProgram::validate() const {
    for (const auto& b : blocks) {
        if (b.guard.kind != Guard::Kind::Always && !secret_env.count(b.guard.var)) {
            throw ConfigError("guard references undeclared secret '" + b.guard.var + "'");
        }
        for (const auto& ins : b.instructions) {
            if (ins.base_cost <= 0) throw ConfigError("instruction base_cost must be > 0");
            if (ins.page_id < 0) throw ConfigError("page_id must be >= 0");
        }
    }
}

void MitigationModel::validate() const {
    if (restore_cost < 0 || pte_check_cost < 0 || warmup_cost_cache_on < 0 ||
        warmup_cost_cache_off < 0 || nop_cost < 0 || warmup_iterations < 0 ||
        nop_slide_length < 0) {
        throw ConfigError("mitigation costs must be >= 0");
    }
    if (nop_probability < 0.0 || nop_probability > 1.0) {
        throw ConfigError("nop_probability must be in [0,1]");
    }
}

double effective_cost(const InstructionSpec& inst, bool cache_enabled, double slowdown) {
    if (slowdown < 1.0) throw ConfigError("slowdown must be >= 1");
    if (inst.base_cost <= 0) throw ConfigError("instruction base_cost must be > 0");
    if (cache_enabled || !inst.memory_dependent) return inst.base_cost;
    return inst.base_cost * slowdown;
}

double mitigation_duration(const MitigationModel& m, int r, bool cache_enabled) {
    m.validate();
    double warm = cache_enabled ? m.warmup_cost_cache_on : m.warmup_cost_cache_off;
    double d = m.restore_cost + m.pte_check_cost + m.warmup_iterations * warm;
    if (r) d += m.nop_slide_length * m.nop_cost;
    return d;
}

TraceContext::TraceContext(const VictimProgram& victim, const MitigationModel& m,
                           const std::map<std::string, std::int64_t>& secret_binding,
                           bool cache_enabled, double slowdown, std::uint64_t trace_id, Rng rng)
    : mit_(m), cache_enabled_(cache_enabled), slowdown_(slowdown), trace_id_(trace_id), rng_(rng) {
    victim.validate();
    m.validate();
    if (slowdown < 1.0) throw ConfigError("slowdown must be >= 1");

    auto env = victim.secret_env;
    for (const auto& [k, v] : secret_binding) {
        if (!env.count(k)) throw ConfigError("binding for undeclared secret '" + k + "'");
        env[k] = v;
    }

    // Linearize the executed path for this binding. Guards are pure, so the
    // path is fixed at trace start.
    for (int bi = 0; bi < static_cast<int>(victim.blocks.size()); ++bi) {
        const auto& b = victim.blocks[bi];
        bool taken = true;
        if (b.guard.kind == Guard::Kind::Equals) taken = env.at(b.guard.var) == b.guard.value;
        if (b.guard.kind == Guard::Kind::NotEquals) taken = env.at(b.guard.var) != b.guard.value;
        if (!taken) continue;
        for (int ii = 0; ii < static_cast<int>(b.instructions.size()); ++ii) {
            const auto& ins = b.instructions[ii];
            LinearInstr li;
            li.spec = ins;
            li.pc = {bi, ii};
            li.cost = cycles_to_ticks(effective_cost(ins, cache_enabled_, slowdown_));
            li.is_marker = victim.boundary_pages.count(ins.page_id) > 0;
            linear_.push_back(li);
        }
    }
    for (int page : victim.boundary_pages) page_armed_[page] = true;
}

AexEvent TraceContext::resume_and_run(std::optional<double> interrupt_at) {
    if (finished()) throw UsageError("resume_and_run on a finished trace");

    // Random NOP-slide bit: restored after a mitigation landing (Fig. 2
    // rollback), freshly sampled otherwise -- in particular after zero-steps.
    int r;
    if (saved_r_.has_value()) {
        r = *saved_r_;
    } else {
        r = rng_.bernoulli(mit_.nop_probability) ? 1 : 0;
    }

    Ticks mit_end = cycles_to_ticks(mitigation_duration(mit_, r, cache_enabled_));
    Ticks slide_start = cycles_to_ticks(mitigation_duration(mit_, 0, cache_enabled_));

    std::optional<Ticks> ipi;
    if (interrupt_at.has_value()) {
        if (*interrupt_at < 0) throw UsageError("interrupt_at must be >= 0");
        ipi = time_to_ticks(*interrupt_at);
    }

    AexEvent ev;
    ev.trace_id = trace_id_;
    ev.slide_active = r;
    ev.mitigation_total = ticks_to_cycles(mit_end);

    // IPI strictly inside the mitigation: rollback, r is saved.
    if (ipi.has_value() && *ipi < mit_end) {
        clock_ += *ipi;
        saved_r_ = r;
        ev.cause = AexCause::Ipi;
        ev.at_cycle = ticks_to_cycles(clock_);
        ev.landing = -1;
        ev.erip = pos_ < static_cast<int>(linear_.size()) ? linear_[pos_].pc : ProgramCounter{-1, -1};
        ev.mitigation_progress = ticks_to_cycles(*ipi);
        ev.landed_in_slide = (r == 1 && *ipi >= slide_start);
        ev.retired_linear = retired_total_;
        return ev;
    }

    // Mitigation completed: rollback state cleared; execution continues at
    // the instruction the last AEX interrupted.
    saved_r_.reset();
    ev.mitigation_progress = ticks_to_cycles(mit_end);

    Ticks t = mit_end;  // window start of the next instruction, relative to resume
    int n = 0;
    while (pos_ < static_cast<int>(linear_.size())) {
        const LinearInstr& li = linear_[pos_];

        // Armed boundary marker: faults at window start on first touch; the
        // marker itself does not retire at the AEX (eRIP points at it).
        // Instruction windows are contiguous, so a pending IPI here satisfies
        // ipi >= t and is absorbed by the fault handler (delivery at exactly
        // the fault cycle: the fault wins). The handler re-maps the page and
        // the touch completes on fault return, so the marker never occupies a
        // victim execution window and never enters step counts.
        if (li.is_marker && page_armed_[li.spec.page_id]) {
            clock_ += t;
            page_armed_[li.spec.page_id] = false;
            ev.cause = AexCause::PageFault;
            ev.at_cycle = ticks_to_cycles(clock_);
            ev.landing = n;
            ev.erip = li.pc;
            ev.faulting_page = li.spec.page_id;
            ev.retired_linear = retired_total_;
            ev.post_mitigation_cycles = ticks_to_cycles(t - mit_end);
            ++pos_;  // touch consumed by the handler
            return ev;
        }

        // IPI landing strictly inside this instruction's half-open window
        // [t, t+cost): the instruction does not retire (zero-step if first).
        if (ipi.has_value() && *ipi < t + li.cost) {
            clock_ += *ipi;
            ev.cause = AexCause::Ipi;
            ev.at_cycle = ticks_to_cycles(clock_);
            ev.landing = n;
            ev.erip = li.pc;
            ev.retired_linear = retired_total_;
            ev.post_mitigation_cycles = ticks_to_cycles(*ipi - mit_end);
            return ev;
        }

        // Retires (an IPI at exactly t+cost counts the instruction as retired).
        t += li.cost;
        ++n;
        ++pos_;
        ++retired_total_;
        ev.retired_kinds.push_back(li.spec.memory_dependent ? 1 : 0);
    }

    throw ConfigError("malformed victim: path exhausted without a boundary fault");
}

int ground_truth_step_count(const AexEvent& prev, const AexEvent& cur) {
    if (prev.trace_id != cur.trace_id) {
        throw UsageError("ground_truth_step_count: events from different traces");
    }
    if (cur.at_cycle < prev.at_cycle) {
        throw UsageError("ground_truth_step_count: events out of order");
    }
    return cur.retired_linear - prev.retired_linear;
}

}  // namespace aexns::sim

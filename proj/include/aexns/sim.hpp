#pragma once
// Cycle-accurate model of an AEX-Notify stage-II protected enclave:
// instruction windows with attacker-controlled slowdown, the save/restore
// mitigation state machine with its randomized NOP slide, IPI-induced
// asynchronous exits and boundary page faults.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aexns/common.hpp"

namespace aexns::sim {

enum class Opcode { Nop, Addl, MarkerTouch, Generic };

struct InstructionSpec {
    Opcode opcode_tag = Opcode::Generic;
    double base_cost = 1.0;       // cycles; fractional allowed
    bool memory_dependent = false;
    int page_id = 0;

    InstructionSpec() = default;
    InstructionSpec(Opcode op, double cost, bool memdep, int page)
        : opcode_tag(op), base_cost(cost), memory_dependent(memdep), page_id(page) {
        if (base_cost <= 0) throw ConfigError("instruction base_cost must be > 0");
        if (page_id < 0) throw ConfigError("page_id must be >= 0");
    }
};

inline InstructionSpec nop_instr(int page = 0) { return {Opcode::Nop, 0.25, false, page}; }
inline InstructionSpec addl_instr(int page = 0) { return {Opcode::Addl, 5.0, true, page}; }
inline InstructionSpec marker_instr(int page) { return {Opcode::MarkerTouch, 1.0, true, page}; }

// Branch guard: a block runs unconditionally or conditioned on one declared
// secret variable.
struct Guard {
    enum class Kind { Always, Equals, NotEquals } kind = Kind::Always;
    std::string var;
    std::int64_t value = 0;
};

struct Block {
    Guard guard;
    std::vector<InstructionSpec> instructions;
};

struct VictimProgram {
    std::vector<Block> blocks;
    std::set<int> boundary_pages;
    std::map<std::string, std::int64_t> secret_env;  // declared secrets and defaults

    void validate() const;
};

struct MitigationModel {
    double restore_cost = 150.0;
    double pte_check_cost = 250.0;
    int warmup_iterations = 12;
    double warmup_cost_cache_on = 10.0;
    double warmup_cost_cache_off = 120.0;
    int nop_slide_length = 20;
    double nop_cost = 1.0;
    double nop_probability = 0.5;

    void validate() const;
};

// [OP] effective_cost: slowdown hits only memory-dependent instructions when
// the attacker has disabled caching.
double effective_cost(const InstructionSpec& inst, bool cache_enabled, double slowdown);

// [OP] mitigation_duration for a given value of the random bit r.
double mitigation_duration(const MitigationModel& m, int r, bool cache_enabled);

enum class AexCause { Ipi, PageFault };

struct ProgramCounter {
    int block = 0;
    int instr = 0;
    auto operator<=>(const ProgramCounter&) const = default;
};

struct AexEvent {
    AexCause cause = AexCause::Ipi;
    double at_cycle = 0.0;              // absolute trace clock, cycles
    int landing = 0;                    // n<0 mitigation, n=0 zero-step, n>=1 steps
    ProgramCounter erip;                // enclave return instruction pointer
    std::optional<int> faulting_page;
    std::uint64_t trace_id = 0;

    // Evaluation/fingerprint metadata (not visible to attacker decisions).
    double mitigation_progress = 0.0;   // cycles into stage II at AEX
    double mitigation_total = 0.0;      // full stage-II duration for this resume's r
    int slide_active = 0;               // r bit for this resume
    bool landed_in_slide = false;
    int retired_linear = 0;             // linear retired count at AEX (oracle)
    double post_mitigation_cycles = 0;  // victim cycles before the AEX this resume
    std::vector<std::uint8_t> retired_kinds;  // per retired instruction: 1 = memory-dependent
};

// One victim traversal. Owns the linearized instruction stream for the bound
// secret values, the armed boundary pages, and the mitigation rollback state.
class TraceContext {
  public:
    TraceContext(const VictimProgram& victim, const MitigationModel& m,
                 const std::map<std::string, std::int64_t>& secret_binding,
                 bool cache_enabled, double slowdown, std::uint64_t trace_id, Rng rng);

    // [OP] resume_and_run: resume from the last AEX, optionally delivering an
    // IPI `interrupt_at` cycles after resume, and return the next AEX.
    AexEvent resume_and_run(std::optional<double> interrupt_at);

    bool finished() const { return pos_ >= static_cast<int>(linear_.size()); }
    int retired_total() const { return retired_total_; }
    double clock() const { return ticks_to_cycles(clock_); }
    std::uint64_t trace_id() const { return trace_id_; }
    bool cache_enabled() const { return cache_enabled_; }
    double slowdown() const { return slowdown_; }
    const MitigationModel& mitigation() const { return mit_; }

    // Number of executable instructions on the bound path, markers included.
    int path_length() const { return static_cast<int>(linear_.size()); }

  private:
    struct LinearInstr {
        InstructionSpec spec;
        ProgramCounter pc;
        Ticks cost;      // effective, fixed-point
        bool is_marker;  // touches an armed boundary page
    };

    const MitigationModel mit_;
    bool cache_enabled_;
    double slowdown_;
    std::uint64_t trace_id_;
    Rng rng_;

    std::vector<LinearInstr> linear_;
    std::map<int, bool> page_armed_;
    int pos_ = 0;
    int retired_total_ = 0;
    Ticks clock_ = 0;
    std::optional<int> saved_r_;  // present iff last AEX was a mitigation landing
    bool reached_stop_ = false;
};

// [OP] ground_truth_step_count: retired-instruction delta between two events
// of the same trace. Evaluation-only oracle.
int ground_truth_step_count(const AexEvent& prev, const AexEvent& cur);

}  // namespace aexns::sim

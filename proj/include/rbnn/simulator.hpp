#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbnn/dataset.hpp"

namespace rbnn {

// Critical-state constitutive parameters. Defaults are the calibration used
// throughout the bundled configs; pressures in kPa, strains as fractions.
struct ConstitutiveParams {
    double G0 = 3000.0;       // reference shear stiffness
    double nu = 0.3;          // Poisson ratio
    double n = 0.67;          // pressure exponent of G
    double phi_c_deg = 31.2;  // critical friction angle
    double e_c0 = 0.937;      // critical void ratio at zero pressure
    double lambda_cs = 0.022; // critical-state line slope
    double xi = 0.71;         // critical-state line exponent
    double d_exp = 2.0;       // interlocking exponent
    double p_atm = 101.325;   // reference pressure

    void validate() const;
};

// State-dependent moduli and strength parameters:
//   G    = G0 (2.97-e)^2/(1+e) (p'/p_atm)^n
//   K    = 2G(1+nu) / (3(1-2nu))
//   e_c  = e_c0 - lambda (p'/p_atm)^xi
//   M_p  = M_c (e_c/e)^d,  M_pt = M_c (e/e_c)^d,  M_c = 6 sin(phi_c)/(3 - sin(phi_c))
struct StateFunctions {
    double G, K, e_c, M_p, M_pt;
};
StateFunctions state_functions(double e, double p_eff, const ConstitutiveParams& cp);

struct SimState {
    double p_eff = 0.0;  // mean effective stress, > 0
    double q = 0.0;      // deviatoric stress
    double e = 0.0;      // void ratio
    double eps_v = 0.0;  // volumetric strain (identically 0 when undrained)
    double eps_d = 0.0;  // accumulated deviatoric strain
    double u_excess = 0.0;
    int cycle = 0;
};

SimState initial_state(double e0, double sigma3);

// One explicit-Euler step. Rate equations:
//   dq      = 3G [ deps - (q/(p' M_p)) |deps| ]
//   deps_v  = M_pt |deps| - (q/p') deps
// Drained: dp' = dq/3 (constant cell pressure), void ratio evolves.
// Undrained: deps_v is treated as the plastic part, dp' = -K deps_v,
// du = dq/3 - dp', void ratio frozen.
SimState step_drained(const SimState& s, double deps_d, const ConstitutiveParams& cp, double e0);
SimState step_undrained(const SimState& s, double deps_d, const ConstitutiveParams& cp);

struct SimError : std::runtime_error {
    int step;
    SimError(int step_, const std::string& what) : std::runtime_error(what), step(step_) {}
};

enum class PathKind { Monotonic, Cyclic };
enum class Drainage { Drained, Undrained };

struct PathStep {
    double eps = 0.0;   // running strain
    double deps = 0.0;  // increment
    int delta = +1;     // sign(deps)
    int cycle = 0;      // increments at each reload through zero strain
};

// Monotonic: uniform ramp to `amplitude` in n_cycles*steps_per_branch steps
// (n_cycles is ignored, one branch). Cyclic: triangular wave
// 0 -> +a -> -a -> ... -> 0 with |deps| = amplitude/steps_per_branch;
// 4*n_cycles*steps_per_branch steps total.
std::vector<PathStep> make_strain_path(PathKind kind, double amplitude, int n_cycles,
                                       int steps_per_branch);

struct SeriesConfig {
    std::string id;  // empty -> generated from the parameters
    double e0 = 0.0;
    double sigma3 = 0.0;
    Drainage drainage = Drainage::Drained;
    PathKind path = PathKind::Monotonic;
    double amplitude = 0.0;
    int n_cycles = 1;
    int steps_per_branch = 1;
};

enum class Equalize { None, Min, Error };

struct GenOptions {
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;  // relative to each channel's per-series RMS
    double ru_stop = 0.95;     // undrained series end when r_u reaches this
    Equalize equalize = Equalize::Min;
    bool strict = false;  // rethrow per-series failures instead of skipping
};

struct GenReport {
    struct Entry {
        std::string id;
        int steps = 0;
        int requested = 0;
        std::string note;  // "", "ru_stop", or the failure diagnostic
    };
    std::vector<Entry> entries;
    int truncated_to = -1;  // common N after equalize, -1 if untouched
};

Dataset generate_dataset(const std::vector<SeriesConfig>& suite, const ConstitutiveParams& cp,
                         const GenOptions& opt, GenReport* report = nullptr);

}  // namespace rbnn

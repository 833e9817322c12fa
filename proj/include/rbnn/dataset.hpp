#pragma once

#include <string>
#include <vector>

#include "rbnn/arch.hpp"

namespace rbnn {

enum class TestKind { MonotonicCD, CyclicCD, CyclicCU };

const char* to_string(TestKind k);
TestKind kind_from_string(const std::string& s);

// Third state channel per test kind: void ratio (monotonic drained),
// volumetric strain (cyclic drained), excess pore pressure ratio
// (cyclic undrained).
const char* third_kind(TestKind k);

// Number of exogenous input components fed to the network: (eps, deps) for
// monotonic tests, (eps, deps, delta, cycle) for cyclic ones.
int input_dim(TestKind k);

// Stress invariants p = (s1 + 2 s3)/3, q = s1 - s3.
struct Invariants {
    double p, q;
};
Invariants compute_invariants(double sigma1, double sigma3);

struct TriaxState {
    double p = 0.0, q = 0.0, third = 0.0;
};

struct StepInput {
    double eps = 0.0, deps = 0.0, delta = 1.0, cycle = 0.0;
};

// One test: states at t = 0..N, inputs at t = 1..N (inputs[t-1]).
struct TriaxSeries {
    std::string test_id;
    TestKind kind = TestKind::MonotonicCD;
    double sigma3 = 0.0;  // theta
    double e0 = 0.0;      // theta
    std::vector<TriaxState> states;
    std::vector<StepInput> inputs;

    int steps() const { return static_cast<int>(inputs.size()); }
    void validate() const;
    Vec state_vec(int t) const;            // [p, q, third]
    Vec input_vec(int t) const;            // t in 1..N, length input_dim(kind)
    Vec theta_vec() const;                 // [sigma3, e0]
};

struct Dataset {
    std::vector<TriaxSeries> series;

    bool empty() const { return series.empty(); }
    // common step count, or -1 when series disagree
    int common_steps() const;
    const TriaxSeries* find(const std::string& id) const;
    void validate() const;
};

// CSV schema, one row per step (step 0 carries the initial state and zero
// inputs): test_id,kind,sigma3_kpa,e0,step,eps,deps,delta,cycle,p_kpa,q_kpa,
// third_value,third_kind. Round-trips numeric fields losslessly.
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);

// ---- splits ----

// Exactly one selection mode may be used; series not selected for val/test
// go to train. With explicit train ids, the three lists must partition the
// dataset.
struct SplitSpec {
    std::vector<std::string> train_ids, val_ids, test_ids;
    std::vector<double> val_e0, test_e0;
    std::vector<double> val_sigma3, test_sigma3;
};

struct Split {
    Dataset train, val, test;
};

Split split_dataset(const Dataset& ds, const SplitSpec& spec);

// ---- sliding windows ----

struct Window {
    int series = 0;  // index into the source dataset
    int start = 0;   // k, 1-based step index of the first target
    Vec s_init;      // state at k-1
    Mat inputs;      // H x U
    Mat targets;     // H x S
    Vec theta;
};

// All H-length windows of every series: M*(N-H+1) windows, window (m,k)
// holds s_{k-1} plus inputs/targets for steps k..k+H-1.
std::vector<Window> segment_windows(const Dataset& ds, int H);

}  // namespace rbnn

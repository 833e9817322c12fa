#pragma once

#include <utility>
#include <vector>

#include "rbnn/dataset.hpp"

namespace rbnn {

struct Range {
    double lo = 0.0, hi = 0.0;
    double span() const { return hi - lo; }
    bool constant() const { return hi == lo; }
    double scale(double v) const { return constant() ? 0.0 : (v - lo) / (hi - lo); }
    double unscale(double v) const { return constant() ? lo : lo + v * (hi - lo); }
};

// Normalization statistics, computed on the training series and applied
// unchanged to validation/test data. p and q are divided by per-confining-
// pressure-group RMS values; the third channel, exogenous inputs, and test
// constants are min-max scaled to [0,1] with global extrema.
struct NormStats {
    bool has_rms = false;
    bool has_ranges = false;

    std::vector<double> group_sigma3;  // sorted, exact equality classes
    std::vector<double> p_rms, q_rms;

    Range third;
    std::vector<Range> u;  // eps, deps, delta, cycle; only input_dim(kind) entries used
    Range theta_sigma3, theta_e0;

    // exact group when present, otherwise nearest confining pressure in log
    // space (extreme-pressure test groups fall back to the closest training
    // group)
    int group_index(double sigma3) const;
};

NormStats rms_stats(const Dataset& train);
// strict: a constant field raises a degenerate-range error; otherwise the
// field maps to 0 and denormalization restores the constant exactly
NormStats minmax_stats(const Dataset& train, bool strict);
NormStats compute_norm_stats(const Dataset& train, bool strict = false);

Dataset apply_normalization(const Dataset& ds, const NormStats& st);
Dataset invert_normalization(const Dataset& ds, const NormStats& st);

std::pair<Dataset, NormStats> rms_normalize(const Dataset& ds);
std::pair<Dataset, NormStats> minmax_scale(const Dataset& ds, bool strict = true);

// multiplicative denormalization factors for (p, q, third) of one series;
// variance channels denormalize by the square
Vec channel_scales(const NormStats& st, const TriaxSeries& s);
// additive offsets for (p, q, third): denorm = norm*scale + offset
Vec channel_offsets(const NormStats& st, const TriaxSeries& s);

}  // namespace rbnn

// Perfusion-specific data augmentation.
//
// The measurement is a linear time-invariant system: injecting the contrast
// bolus later or at a different concentration shifts/scales both the AIF and
// the TCC identically while leaving the IRF - and so the ground truth CBF,
// Tmax and CBV - untouched. Augmentation exploits that to multiply the
// number of distinct training samples.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "perfusion/rng.hpp"
#include "perfusion/sample.hpp"

namespace perfusion {

struct AugmentConfig {
    int shift_lo = -1; // grid points, inclusive
    int shift_hi = 2;
    double scale_lo = 0.7;
    double scale_hi = 1.3;
    int factor = 10; // augmented copies per input sample
    std::uint64_t rng_seed = 0;

    void validate() const;
};

// Shift a sampled curve by k grid points. Later injection (k > 0) zero-fills
// the front (no contrast change before the bolus); earlier injection (k < 0)
// holds the last value at the back (slow venous washout). |k| must be less
// than the curve length.
std::vector<double> shift_curve(std::span<const double> curve, int k);

// Draw one shift (uniform integer over [shift_lo, shift_hi]) and one scale
// (uniform over [scale_lo, scale_hi]), apply both to AIF and TCC, and copy
// the ground truth and aif_id unchanged. Draw order: shift, then scale.
Sample augment_sample(const Sample& s, const AugmentConfig& cfg, Rng& rng);

// Materialize factor independent augmented variants per input sample (the
// originals are not implicitly kept). Output index q = m*factor + j uses
// stream (rng_seed, augment, q), so the expansion is reproducible and
// thread-count independent.
Dataset expand_dataset(const Dataset& d, const AugmentConfig& cfg);

} // namespace perfusion

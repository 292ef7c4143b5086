// Discrete acquisition time axis shared by AIF/TCC/IRF vectors.

#pragma once

#include <stdexcept>
#include <vector>

namespace perfusion {

// Time points are t_i = i * dt, i = 0 .. n_samples-1, with dt = span/(n-1),
// so t_0 = 0 and t_{n-1} = span exactly. Default: 19 samples over 40 s.
struct AcquisitionGrid {
    int n_samples = 19;
    double span = 40.0;

    void validate() const {
        if (n_samples < 2) throw std::invalid_argument("AcquisitionGrid: n_samples must be >= 2");
        if (!(span > 0.0)) throw std::invalid_argument("AcquisitionGrid: span must be > 0");
    }

    double dt() const { return span / (n_samples - 1); }
    double time(int i) const { return i * dt(); }

    std::vector<double> times() const {
        std::vector<double> t(static_cast<std::size_t>(n_samples));
        for (int i = 0; i < n_samples; ++i) t[static_cast<std::size_t>(i)] = time(i);
        return t;
    }

    bool operator==(const AcquisitionGrid&) const = default;
};

} // namespace perfusion

// One training/test instance and the container for a generated set of them.

#pragma once

#include <cstdint>
#include <vector>

#include "perfusion/grid.hpp"

namespace perfusion {

struct Sample {
    std::vector<double> aif;  // HU, length grid.n_samples
    std::vector<double> tcc;  // HU, length grid.n_samples
    double cbf_true = 0.0;    // ml/100g/min
    double tmax_true = 0.0;   // s
    double cbv_true = 0.0;    // dimensionless fraction
    std::uint32_t aif_id = 0; // acquisition identity: samples sharing an AIF share an id
};

struct Dataset {
    AcquisitionGrid grid;
    double sigma = 0.0; // noise level the samples were generated with
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

} // namespace perfusion

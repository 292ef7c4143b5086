// Dataset container format.
//
// Binary layout (little-endian):
//   magic "PBEN" | version u16 | n_samples u64 | grid_n u16 | grid_span f64 | sigma f64
//   then per sample: aif_id u32 | aif f64 x n | tcc f64 x n | cbf f64 | tmax f64 | cbv f64
//
// The CSV export is lossless (17 significant digits per value), one row per
// sample, columns aif_0..aif_{n-1}, tcc_0..tcc_{n-1}, cbf, tmax, cbv, aif_id.

#pragma once

#include <string>

#include "perfusion/sample.hpp"

namespace perfusion {

inline constexpr std::uint16_t kDatasetFormatVersion = 1;

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

void export_dataset_csv(const Dataset& ds, const std::string& path);

} // namespace perfusion

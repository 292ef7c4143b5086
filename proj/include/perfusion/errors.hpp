// Error categories used across the library. DataError covers malformed or
// incompatible inputs (files, grids), NumericError covers runtime numerical
// failures such as a diverging optimizer.

#pragma once

#include <stdexcept>
#include <string>

namespace perfusion {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace perfusion

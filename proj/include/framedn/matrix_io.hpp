#pragma once

#include <string>

#include "framedn/types.hpp"

namespace framedn {

/// Write a dense matrix to `path` in the binary container format:
/// an 8-byte header of two little-endian uint32 values (rows, cols)
/// followed by rows*cols IEEE float64 values in row-major order.
void write_matrix(const std::string& path, const MatX& m);

/// Read a matrix written by write_matrix. Throws IoError on missing or
/// truncated files.
MatX read_matrix(const std::string& path);

}  // namespace framedn

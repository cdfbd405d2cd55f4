#pragma once

#include <filesystem>
#include <string>

#include "pcpd/engine.hpp"
#include "pcpd/tensor.hpp"

namespace pcpd {

// Binary tensor container:
//   bytes 0-3   magic "TNSR"
//   bytes 4-7   version, little-endian uint32, currently 1
//   bytes 8-11  ndims, little-endian uint32
//   bytes 12-15 reserved (zero)
//   then ndims little-endian uint64 dimensions
//   then prod(dims) IEEE-754 binary64 values, little-endian, row-major
//   (last index fastest).
// Round trips are bit-exact.
void write_tensor(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor read_tensor(const std::filesystem::path& path);

// Comma-separated matrix, one row per line, %.17g values.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

// Fit report as a key = value document with bracketed arrays.
std::string format_fit_report(const FitReport& report, const std::string& algo,
                              const std::vector<Index>& dims);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace pcpd

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "plfm/types.hpp"

namespace plfm {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int row, int col);
  int row;  // 1-based position in the file
  int col;
};

// Rectangular numeric table; optional header row (detected when a first-row
// token is neither numeric nor a missing token); empty cells and `NA` set the
// mask. Throws ParseError with the offending location otherwise.
Dataset load_csv(const std::filesystem::path& path);

// Fixed "%.17g" serialisation so a save/load round trip is bit exact.
// Masked cells are written as NA; a header row is always written.
void save_csv(const std::filesystem::path& path, const Dataset& data);

// Matrix snapshot format: first line "rows,cols", then row-major data lines.
void save_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix_csv(const std::filesystem::path& path);
void save_int_matrix_csv(const std::filesystem::path& path, const IntMatrix& m);
IntMatrix load_int_matrix_csv(const std::filesystem::path& path);

// 17-significant-digit decimal form used everywhere a double is serialised.
std::string format_double(double value);

}  // namespace plfm

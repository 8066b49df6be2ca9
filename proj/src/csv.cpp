#include "plfm/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace plfm {

namespace {

bool is_missing_token(const std::string& token) {
  return token.empty() || token == "NA";
}

bool parse_number(const std::string& token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      tokens.push_back(current);
      current.clear();
    } else if (ch != '\r') {
      current.push_back(ch);
    }
  }
  tokens.push_back(current);
  return tokens;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  // A trailing newline produces no extra row; fully empty trailing lines are
  // dropped.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

ParseError::ParseError(const std::string& msg, int row, int col)
    : std::runtime_error(msg + " (row " + std::to_string(row) + ", column " +
                         std::to_string(col) + ")"),
      row(row),
      col(col) {}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

Dataset load_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError("empty file", 1, 1);

  std::vector<std::string> names;
  std::size_t first_data = 0;
  {
    const auto tokens = split_line(lines[0]);
    bool has_word = false;
    for (const auto& t : tokens) {
      double ignored;
      if (!is_missing_token(t) && !parse_number(t, ignored)) has_word = true;
    }
    if (has_word) {
      names = tokens;
      first_data = 1;
      if (lines.size() == 1) throw ParseError("header with no data rows", 1, 1);
    }
  }

  const int n_cols = static_cast<int>(split_line(lines[first_data]).size());
  const int n_rows = static_cast<int>(lines.size() - first_data);
  Matrix x = Matrix::Zero(n_rows, n_cols);
  BoolMask observed = BoolMask::Constant(n_rows, n_cols, true);
  for (int r = 0; r < n_rows; ++r) {
    const int file_row = static_cast<int>(first_data) + r + 1;
    const auto tokens = split_line(lines[first_data + r]);
    if (static_cast<int>(tokens.size()) != n_cols)
      throw ParseError("ragged row: expected " + std::to_string(n_cols) +
                           " cells, found " + std::to_string(tokens.size()),
                       file_row, static_cast<int>(tokens.size()));
    for (int c = 0; c < n_cols; ++c) {
      if (is_missing_token(tokens[c])) {
        observed(r, c) = false;
        continue;
      }
      double value;
      if (!parse_number(tokens[c], value))
        throw ParseError("non-numeric cell '" + tokens[c] + "'", file_row,
                         c + 1);
      x(r, c) = value;
    }
  }
  Dataset data(std::move(x), std::move(observed));
  if (!names.empty()) data.column_names = std::move(names);
  return data;
}

void save_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  for (int c = 0; c < data.d(); ++c) {
    if (c) out << ',';
    out << (data.column_names.empty() ? "c" + std::to_string(c)
                                      : data.column_names[c]);
  }
  out << '\n';
  for (int r = 0; r < data.n(); ++r) {
    for (int c = 0; c < data.d(); ++c) {
      if (c) out << ',';
      if (data.observed(r, c))
        out << format_double(data.x(r, c));
      else
        out << "NA";
    }
    out << '\n';
  }
}

void save_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << m.rows() << ',' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Matrix load_matrix_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError("empty matrix file", 1, 1);
  const auto shape = split_line(lines[0]);
  if (shape.size() != 2) throw ParseError("bad shape header", 1, 1);
  const int rows = std::stoi(shape[0]);
  const int cols = std::stoi(shape[1]);
  if (static_cast<int>(lines.size()) != rows + 1)
    throw ParseError("matrix row count mismatch", 2, 1);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto tokens = split_line(lines[r + 1]);
    if (static_cast<int>(tokens.size()) != cols)
      throw ParseError("matrix column count mismatch", r + 2, 1);
    for (int c = 0; c < cols; ++c) {
      double value;
      if (!parse_number(tokens[c], value))
        throw ParseError("non-numeric cell '" + tokens[c] + "'", r + 2, c + 1);
      m(r, c) = value;
    }
  }
  return m;
}

void save_int_matrix_csv(const std::filesystem::path& path,
                         const IntMatrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << m.rows() << ',' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
}

IntMatrix load_int_matrix_csv(const std::filesystem::path& path) {
  const Matrix m = load_matrix_csv(path);
  return m.cast<long long>();
}

}  // namespace plfm

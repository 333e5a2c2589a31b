#include "framedn/matrix_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace framedn {

void write_matrix(const std::string& path, const MatX& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("write_matrix: cannot open " + path);

  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  char header[8];
  std::memcpy(header, &rows, 4);
  std::memcpy(header + 4, &cols, 4);
  out.write(header, 8);

  std::vector<double> row(m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw IoError("write_matrix: short write to " + path);
}

MatX read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_matrix: cannot open " + path);

  char header[8];
  in.read(header, 8);
  if (in.gcount() != 8) throw IoError("read_matrix: truncated header in " + path);
  std::uint32_t rows = 0, cols = 0;
  std::memcpy(&rows, header, 4);
  std::memcpy(&cols, header + 4, 4);

  MatX m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::vector<double> row(cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != row.size() * sizeof(double)) {
      throw IoError("read_matrix: truncated data in " + path);
    }
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = row[j];
  }
  return m;
}

}  // namespace framedn

#pragma once

#include <filesystem>
#include <string>

#include "mortv/matrix.hpp"

namespace mortv::io {

/// Matrix Market coordinate format (sparse) writer/reader.
void write_matrix_market(const std::filesystem::path& file, const SparseMatrix& m);
SparseMatrix read_matrix_market(const std::filesystem::path& file);

/// Dense matrix as plain text: one row per line, whitespace-separated,
/// 17 significant digits. Used for B/C samples and reduced matrices.
void write_dense(const std::filesystem::path& file, const Matrix& m);
Matrix read_dense(const std::filesystem::path& file);

} // namespace mortv::io

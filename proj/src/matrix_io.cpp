#include "mortv/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace mortv::io {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_matrix_market(const std::filesystem::path& file, const SparseMatrix& m) {
    std::ofstream os(file);
    if (!os) throw IoError("cannot open for writing: " + file.string());
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
            os << (it.row() + 1) << " " << (it.col() + 1) << " " << fmt17(it.value()) << "\n";
        }
    }
    if (!os) throw IoError("write failed: " + file.string());
}

SparseMatrix read_matrix_market(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw IoError("cannot open for reading: " + file.string());
    std::string line;
    if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0)
        throw IoError("not a MatrixMarket file: " + file.string());
    if (line.find("coordinate") == std::string::npos || line.find("real") == std::string::npos)
        throw IoError("unsupported MatrixMarket flavor in " + file.string());
    do {
        if (!std::getline(is, line)) throw IoError("truncated MatrixMarket header: " + file.string());
    } while (!line.empty() && line[0] == '%');

    Index rows = 0, cols = 0;
    long long nnz = 0;
    {
        std::istringstream hs(line);
        if (!(hs >> rows >> cols >> nnz)) throw IoError("bad size line in " + file.string());
    }
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(nnz));
    for (long long k = 0; k < nnz; ++k) {
        Index i = 0, j = 0;
        double v = 0.0;
        if (!(is >> i >> j >> v)) throw IoError("truncated entries in " + file.string());
        trips.emplace_back(i - 1, j - 1, v);
    }
    SparseMatrix m(rows, cols);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

void write_dense(const std::filesystem::path& file, const Matrix& m) {
    std::ofstream os(file);
    if (!os) throw IoError("cannot open for writing: " + file.string());
    os << m.rows() << " " << m.cols() << "\n";
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) os << " ";
            os << fmt17(m(i, j));
        }
        os << "\n";
    }
    if (!os) throw IoError("write failed: " + file.string());
}

Matrix read_dense(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw IoError("cannot open for reading: " + file.string());
    Index rows = 0, cols = 0;
    if (!(is >> rows >> cols)) throw IoError("bad dense header in " + file.string());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            if (!(is >> m(i, j))) throw IoError("truncated dense matrix in " + file.string());
    return m;
}

} // namespace mortv::io

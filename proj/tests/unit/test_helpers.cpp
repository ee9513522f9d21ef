#include "test_helpers.hpp"

namespace testutil {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

scca::CcaModel identity_model(Index p, Index q, double rho, Index support) {
    Matrix a = Matrix::Zero(p, 1);
    Matrix b = Matrix::Zero(q, 1);
    a.topRows(support).setOnes();
    b.topRows(support).setOnes();
    Vector lambda(1);
    lambda << rho;
    return scca::build_model(Matrix::Identity(p, p), Matrix::Identity(q, q), a, b, lambda);
}

Matrix dense_inverse(const Matrix& a) { return a.fullPivLu().inverse(); }

std::string schema_path(const std::string& name) { return std::string(SCCA_TEST_SCHEMA_DIR) + "/" + name; }

}  // namespace testutil

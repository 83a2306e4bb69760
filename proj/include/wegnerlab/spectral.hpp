#pragma once

#include <vector>

#include <Eigen/Dense>

#include "wegnerlab/measures.hpp"

namespace wegnerlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr Eigen::Index kDefaultDimCap = 4096;
// Eigenvalues closer than this to an interval endpoint are reported as degenerate.
inline constexpr double kEndpointTol = 1e-12;

// Open interval (lo, hi).
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    bool contains(double x) const { return x > lo && x < hi; }
};

struct SpectralDecomposition {
    Vector values;   // ascending
    Matrix vectors;  // columns are orthonormal eigenvectors
};

SpectralDecomposition eigen_sym(const Matrix& a, Eigen::Index cap = kDefaultDimCap);
Vector eigenvalues_sym(const Matrix& a, Eigen::Index cap = kDefaultDimCap);

struct DecompositionQuality {
    double residual = 0.0;       // max |A V - V Lambda|
    double orthogonality = 0.0;  // max |V^T V - I|
    double norm = 0.0;           // spectral norm of A
};
DecompositionQuality check_decomposition(const Matrix& a, const SpectralDecomposition& d);

// Number of eigenvalues strictly inside I. near_endpoint receives how many lie within kEndpointTol of an end.
int count_in_interval(const Vector& values, Interval I, int* near_endpoint = nullptr);
inline int count_in_interval(const SpectralDecomposition& d, Interval I, int* near_endpoint = nullptr) {
    return count_in_interval(d.values, I, near_endpoint);
}

// Columns of the eigenvectors whose eigenvalues lie in I.
Matrix eigenvectors_in(const SpectralDecomposition& d, Interval I);
Matrix spectral_projector(const SpectralDecomposition& d, Interval I);

// Smallest eigenvalue of P W P on range(P), P = chi_I(A). +infinity when range(P) = {0}.
double uncertainty_gamma(const SpectralDecomposition& dec_a, Interval I, const Matrix& w);
double uncertainty_gamma(const Matrix& a, Interval I, const Matrix& w);

struct LocalTraceResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = true;
    int c_fin = 0;
    int j_eff = 0;
};

// Both sides of the local trace decomposition for H with W = sum_alpha U_alpha.
// `parts` holds the diagonals of the multiplication operators U_alpha.
LocalTraceResult local_trace_check(const SpectralDecomposition& dec_h, const std::vector<Vector>& parts, Interval I,
                                   double gamma);
LocalTraceResult local_trace_check(const SpectralDecomposition& dec_h, const std::vector<Matrix>& parts, Interval I,
                                   double gamma);

struct AveragingResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double quad_error = 0.0;
    bool pass = true;
    int crossings = 0;
};

// Integral over t ~ mu of <B^(1/2) chi_I(A + tB) B^(1/2) phi, phi> against 6 ||B|| ||phi||^2 s(mu, |I|).
AveragingResult spectral_averaging_check(const Matrix& a, const Matrix& b, const Vector& phi, Interval I,
                                         const Measure& mu);

}  // namespace wegnerlab

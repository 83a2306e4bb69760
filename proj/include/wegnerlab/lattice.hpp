#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "wegnerlab/spectral.hpp"

namespace wegnerlab {

// A point of Z^d with d <= 2; unused coordinates stay 0.
using Site = std::array<int, 2>;

enum class Boundary { simple, dirichlet, neumann };
const char* to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

enum class SupportKind { full, half_space, surface, delone, finite_holes };

// The set G of lattice sites carrying a random coupling.
struct Support {
    SupportKind kind = SupportKind::full;
    int axis = 0;              // half-space: x[axis] > threshold
    double threshold = 0.0;
    int surface_dims = 0;      // surface: x[k] = 0 for k >= surface_dims
    int cell = 1;              // delone: one point per disjoint cell of this side
    std::uint64_t seed = 0;
    bool periodic = false;     // delone: same offset in every cell
    std::vector<Site> holes;   // finite-holes: excluded sites

    bool contains(const Site& x, int d) const;
    // Period per axis when translation invariant, otherwise false.
    bool period(int d, std::array<int, 2>& p) const;
};

struct LatticeModel {
    int d = 1;
    int n = 1;
    std::array<int, 2> v0_period{1, 1};
    std::vector<double> v0_values{0.0};  // row-major over the period cell, axis 0 fastest
    int radius = 0;
    std::vector<double> profile{1.0};    // u on Lambda_R(0), row-major, axis 0 fastest
    Support support;
    double q_lo = 0.0;
    double q_hi = 1.0;

    void validate() const;
    double c_u() const;
    double v0(const Site& x) const;
    // u(x - alpha)
    double u(const Site& x, const Site& alpha) const;
};

struct CubeRestriction {
    std::vector<Site> center;  // one entry per particle
    int half_side = 0;
    Boundary bc = Boundary::simple;
};

// Everything needed to assemble H(omega) on a fixed cube.
struct LatticeSystem {
    int d = 1;
    int n = 1;
    std::vector<std::vector<Site>> basis;  // particle positions per basis vector
    std::vector<Site> active;              // I_F, lexicographic
    Matrix h0;                             // Laplacian with boundary terms plus V0
    std::vector<Vector> parts;             // diagonal of U_alpha for each alpha in I_F

    int dim() const { return static_cast<int>(basis.size()); }
    Vector w_diag() const;
    Matrix hamiltonian(const std::vector<double>& omega) const;
};

LatticeSystem build_system(const LatticeModel& model, const CubeRestriction& cube);
Matrix assemble(const LatticeModel& model, const CubeRestriction& cube, const std::vector<double>& omega);

struct SupportWindow {
    std::vector<Site> active;
    int j_eff = 0;
    int c_fin = 0;
};
SupportWindow support_window(const LatticeModel& model, const CubeRestriction& cube);

struct BlochEdge {
    double value = 0.0;  // sampled infimum of the fiber ground state
    double error = 0.0;  // Lipschitz bound on the sampling error
};
// inf sigma(H_0 + q W) for a periodic single-particle model, sampled on grid^d quasi-momenta.
BlochEdge bloch_edge(const LatticeModel& model, double q, int grid);

struct WeylResidual {
    double residual = 0.0;
    std::array<double, 2> theta{0.0, 0.0};  // quasi-momentum of the Bloch wave used
    double norm = 0.0;
    std::vector<Site> sites;                  // support of the test vector
    std::vector<std::complex<double>> values;
};
// ||(H^omega - (lambda + q)) f|| / ||f|| for a cut-off Bloch wave at energy lambda of H_0 = -Delta + V0,
// with omega = q on Lambda_ell(offset) and 0 elsewhere.
WeylResidual weyl_residual_detail(const LatticeModel& model, double lambda, double q, int ell, const Site& offset);
inline double weyl_residual(const LatticeModel& model, double lambda, double q, int ell, const Site& offset) {
    return weyl_residual_detail(model, lambda, q, ell, offset).residual;
}

}  // namespace wegnerlab

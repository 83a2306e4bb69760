#pragma once

#include <vector>

#include <Eigen/SparseCore>

#include "wegnerlab/lattice.hpp"
#include "wegnerlab/spectral.hpp"

namespace wegnerlab {

struct GraphEdge {
    int v = 0;
    int w = 0;
    double length = 1.0;
    double potential = 0.0;  // constant V_e
};

// Metric graph on a window of Z^d. Vertex condition: sum of outgoing derivatives = alpha_v f(v).
struct MetricGraphModel {
    int d = 1;
    std::vector<Site> vertices;
    std::vector<GraphEdge> edges;
    std::vector<double> alpha;      // per vertex; only read on coupled, non-Dirichlet vertices
    std::vector<char> coupled;      // G
    std::vector<char> dirichlet;    // boundary vertex set
    double l_min = 0.5;
    double l_max = 2.0;
    double alpha_lo = 0.0;
    double alpha_hi = 1.0;

    void validate() const;
    double c0() const;  // min edge potential
    double alpha_at(int v) const { return coupled[static_cast<std::size_t>(v)] ? alpha[static_cast<std::size_t>(v)] : 0.0; }
    // Non-Dirichlet vertices in order; index[v] = -1 for Dirichlet vertices.
    std::vector<int> free_vertices() const;
    std::vector<int> free_index() const;
    int coupled_free_count() const;
};

// Single edge between two vertices.
MetricGraphModel single_edge(double l, bool dirichlet_ends, double potential = 0.0);
// Vertices {0..side-1}^d joined along lattice bonds; every vertex coupled, none Dirichlet unless requested.
MetricGraphModel grid_graph(int d, int side, double l, bool dirichlet_boundary = false);

// Vertex matrix restricted to non-Dirichlet vertices. Hyperbolic branch when E < V_e.
Matrix m_matrix(const MetricGraphModel& g, double E);
Matrix m_matrix_dl(const MetricGraphModel& g, double E, int edge);
Matrix m_matrix_de(const MetricGraphModel& g, double E);

// Nullity of the full edge-coefficient system at E, well defined at Dirichlet poles too.
int secular_nullity(const MetricGraphModel& g, double E, double tol = 1e-9);
double secular_min_singular(const MetricGraphModel& g, double E);

// Closed intervals [pi^2 k^2 / l_max^2, pi^2 k^2 / l_min^2] (k >= 0) met with the closed window, merged.
std::vector<Interval> dirichlet_forbidden_set(double l_min, double l_max, Interval window);

struct GraphEigenvalue {
    double energy = 0.0;
    bool at_pole = false;  // located through the full system instead of the M scan
};
// Eigenvalues in the open window J with multiplicity, ascending.
std::vector<GraphEigenvalue> spectrum_in_window(const MetricGraphModel& g, Interval J);
std::vector<double> spectrum_values(const MetricGraphModel& g, Interval J);

// max ||dM/dE||_2 over a grid of `points` energies in J.
double de_norm_bound(const MetricGraphModel& g, Interval J, int points = 64);

// Lumped-mass finite differences: K f = lambda Mass f.
struct FdOperator {
    Eigen::SparseMatrix<double> stiffness;
    Vector mass;
    int vertex_nodes = 0;

    int dim() const { return static_cast<int>(mass.size()); }
    Matrix dense() const;  // Mass^{-1/2} K Mass^{-1/2}
    int count_below(double sigma) const;
    std::vector<double> eigenvalues_in(Interval J, double tol = 1e-10) const;
};
FdOperator fd_oracle(const MetricGraphModel& g, double h);

struct WeylBound {
    long k = 0;
    double c = 0.0;  // trace-estimate constant
};
WeylBound weyl_bound_detail(const MetricGraphModel& g, double S);
inline long weyl_bound(const MetricGraphModel& g, double S) { return weyl_bound_detail(g, S).k; }

}  // namespace wegnerlab

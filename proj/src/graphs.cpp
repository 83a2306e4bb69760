#include "wegnerlab/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "wegnerlab/errors.hpp"

namespace wegnerlab {

namespace {

const double kPi = std::acos(-1.0);

// Fundamental solutions of -f'' + V f = E f on [0, l]: c(0)=1, c'(0)=0, s(0)=0, s'(0)=1.
struct EdgeSolution {
    double k2 = 0.0;  // E - V
    double c = 1.0;
    double s = 0.0;
};

EdgeSolution edge_solution(double E, const GraphEdge& e) {
    EdgeSolution r;
    r.k2 = E - e.potential;
    const double l = e.length;
    if (r.k2 > 0) {
        double k = std::sqrt(r.k2);
        r.c = std::cos(k * l);
        r.s = std::sin(k * l) / k;
    } else if (r.k2 < 0) {
        double k = std::sqrt(-r.k2);
        r.c = std::cosh(k * l);
        r.s = std::sinh(k * l) / k;
    } else {
        r.c = 1.0;
        r.s = l;
    }
    return r;
}

void check_pole(double E, const GraphEdge& e, int index) {
    double k2 = E - e.potential;
    if (k2 <= 0) return;
    double kl = std::sqrt(k2) * e.length;
    double m = std::round(kl / kPi);
    if (m >= 1 && std::abs(kl - m * kPi) <= 1e-12 * std::max(1.0, kl)) {
        std::ostringstream os;
        os << "energy " << E << " is a Dirichlet pole of edge " << index << " (k l = " << m << " pi)";
        fail(ErrorKind::pole_error, os.str());
    }
}

double sym_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return eigenvalues_sym(a).cwiseAbs().maxCoeff();
}

std::vector<double> pole_energies(const MetricGraphModel& g, double lo, double hi) {
    std::vector<double> p;
    for (const auto& e : g.edges) {
        if (hi <= e.potential) continue;
        long m = std::max<long>(1, static_cast<long>(std::floor(std::sqrt(std::max(0.0, lo - e.potential)) * e.length / kPi)));
        for (;; ++m) {
            double E = e.potential + std::pow(m * kPi / e.length, 2);
            if (E >= hi) break;
            if (E > lo) p.push_back(E);
        }
    }
    std::sort(p.begin(), p.end());
    std::vector<double> out;
    for (double x : p)
        if (out.empty() || x - out.back() > 1e-10 * std::max(1.0, x)) out.push_back(x);
    return out;
}

Matrix full_system(const MetricGraphModel& g, double E) {
    const auto idx = g.free_index();
    const int nf = static_cast<int>(g.free_vertices().size());
    const int ne = static_cast<int>(g.edges.size());
    Matrix a = Matrix::Zero(2 * ne + nf, 2 * ne + nf);
    // unknowns: f(v) for free v, then (a_e, b_e) with f_e = a_e c + b_e s
    int row = 0;
    for (int i = 0; i < ne; ++i) {
        const auto& e = g.edges[static_cast<std::size_t>(i)];
        const auto sol = edge_solution(E, e);
        const int ca = nf + 2 * i, cb = ca + 1;
        const int iv = idx[static_cast<std::size_t>(e.v)], iw = idx[static_cast<std::size_t>(e.w)];
        a(row, ca) = 1.0;
        if (iv >= 0) a(row, iv) = -1.0;
        ++row;
        a(row, ca) = sol.c;
        a(row, cb) = sol.s;
        if (iw >= 0) a(row, iw) = -1.0;
        ++row;
        // outgoing derivatives: b_e at the start, -(a c' + b s') = a k^2 s - b c at the end
        if (iv >= 0) a(2 * ne + iv, cb) += 1.0;
        if (iw >= 0) {
            a(2 * ne + iw, ca) += sol.k2 * sol.s;
            a(2 * ne + iw, cb) -= sol.c;
        }
    }
    for (int v : g.free_vertices()) a(2 * ne + idx[static_cast<std::size_t>(v)], idx[static_cast<std::size_t>(v)]) -= g.alpha_at(v);
    return a;
}

}  // namespace

void MetricGraphModel::validate() const {
    const std::size_t nv = vertices.size();
    if (d < 1 || d > 3) fail(ErrorKind::invalid_argument, "graph: d must be 1..3");
    if (nv == 0) fail(ErrorKind::invalid_argument, "graph: no vertices");
    if (alpha.size() != nv || coupled.size() != nv || dirichlet.size() != nv)
        fail(ErrorKind::invalid_argument, "graph: per-vertex arrays must match the vertex list");
    if (!(l_min > 0 && l_min <= l_max)) fail(ErrorKind::invalid_argument, "graph: need 0 < l_min <= l_max");
    if (!(alpha_lo <= alpha_hi)) fail(ErrorKind::invalid_argument, "graph: need alpha_lo <= alpha_hi");
    const double slack = 1e-12 * l_max;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        if (e.v < 0 || e.w < 0 || e.v >= static_cast<int>(nv) || e.w >= static_cast<int>(nv) || e.v == e.w)
            fail(ErrorKind::invalid_argument, "graph: edge " + std::to_string(i) + " has bad endpoints");
        if (!(e.length >= l_min - slack && e.length <= l_max + slack))
            fail(ErrorKind::invalid_argument, "graph: edge " + std::to_string(i) + " length outside [l_min, l_max]");
        if (!std::isfinite(e.potential)) fail(ErrorKind::invalid_argument, "graph: edge potential must be finite");
    }
    std::vector<int> seen(nv, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (const auto& e : edges) {
            int o = e.v == v ? e.w : (e.w == v ? e.v : -1);
            if (o >= 0 && !seen[static_cast<std::size_t>(o)]) {
                seen[static_cast<std::size_t>(o)] = 1;
                stack.push_back(o);
            }
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) fail(ErrorKind::invalid_argument, "graph: not connected");
}

double MetricGraphModel::c0() const {
    double c = edges.empty() ? 0.0 : edges.front().potential;
    for (const auto& e : edges) c = std::min(c, e.potential);
    return c;
}

std::vector<int> MetricGraphModel::free_vertices() const {
    std::vector<int> out;
    for (std::size_t v = 0; v < vertices.size(); ++v)
        if (!dirichlet[v]) out.push_back(static_cast<int>(v));
    return out;
}

std::vector<int> MetricGraphModel::free_index() const {
    std::vector<int> idx(vertices.size(), -1);
    int k = 0;
    for (std::size_t v = 0; v < vertices.size(); ++v)
        if (!dirichlet[v]) idx[v] = k++;
    return idx;
}

int MetricGraphModel::coupled_free_count() const {
    int c = 0;
    for (std::size_t v = 0; v < vertices.size(); ++v) c += coupled[v] && !dirichlet[v];
    return c;
}

MetricGraphModel single_edge(double l, bool dirichlet_ends, double potential) {
    MetricGraphModel g;
    g.d = 1;
    g.vertices = {{0, 0}, {1, 0}};
    g.edges = {{0, 1, l, potential}};
    g.alpha = {0.0, 0.0};
    g.coupled = {1, 1};
    g.dirichlet = {static_cast<char>(dirichlet_ends), static_cast<char>(dirichlet_ends)};
    g.l_min = g.l_max = l;
    return g;
}

MetricGraphModel grid_graph(int d, int side, double l, bool dirichlet_boundary) {
    if (d < 1 || d > 2 || side < 2) fail(ErrorKind::invalid_argument, "grid_graph: need d in {1,2} and side >= 2");
    MetricGraphModel g;
    g.d = d;
    const int n = d == 1 ? side : side * side;
    for (int k = 0; k < n; ++k) g.vertices.push_back({k % side, d == 2 ? k / side : 0});
    for (int k = 0; k < n; ++k) {
        const Site x = g.vertices[static_cast<std::size_t>(k)];
        if (x[0] + 1 < side) g.edges.push_back({k, k + 1, l, 0.0});
        if (d == 2 && x[1] + 1 < side) g.edges.push_back({k, k + side, l, 0.0});
    }
    g.alpha.assign(static_cast<std::size_t>(n), 0.0);
    g.coupled.assign(static_cast<std::size_t>(n), 1);
    g.dirichlet.assign(static_cast<std::size_t>(n), 0);
    if (dirichlet_boundary)
        for (int k = 0; k < n; ++k) {
            const Site x = g.vertices[static_cast<std::size_t>(k)];
            bool b = false;
            for (int a = 0; a < d; ++a) b = b || x[static_cast<std::size_t>(a)] == 0 || x[static_cast<std::size_t>(a)] == side - 1;
            g.dirichlet[static_cast<std::size_t>(k)] = b;
        }
    g.l_min = g.l_max = l;
    return g;
}

Matrix m_matrix(const MetricGraphModel& g, double E) {
    const auto idx = g.free_index();
    const int nf = static_cast<int>(g.free_vertices().size());
    Matrix m = Matrix::Zero(nf, nf);
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const auto& e = g.edges[i];
        check_pole(E, e, static_cast<int>(i));
        const auto sol = edge_solution(E, e);
        const double diag = -sol.c / sol.s, off = 1.0 / sol.s;
        const int iv = idx[static_cast<std::size_t>(e.v)], iw = idx[static_cast<std::size_t>(e.w)];
        if (iv >= 0) m(iv, iv) += diag;
        if (iw >= 0) m(iw, iw) += diag;
        if (iv >= 0 && iw >= 0) {
            m(iv, iw) += off;
            m(iw, iv) += off;
        }
    }
    return m;
}

Matrix m_matrix_dl(const MetricGraphModel& g, double E, int edge) {
    if (edge < 0 || edge >= static_cast<int>(g.edges.size())) fail(ErrorKind::invalid_argument, "m_matrix_dl: bad edge index");
    const auto idx = g.free_index();
    const int nf = static_cast<int>(g.free_vertices().size());
    Matrix m = Matrix::Zero(nf, nf);
    const auto& e = g.edges[static_cast<std::size_t>(edge)];
    check_pole(E, e, edge);
    const auto sol = edge_solution(E, e);
    // d/dl (-c/s) = (k^2 s^2 + c^2) / s^2 = 1 / s^2, d/dl (1/s) = -c / s^2
    const double diag = 1.0 / (sol.s * sol.s), off = -sol.c / (sol.s * sol.s);
    const int iv = idx[static_cast<std::size_t>(e.v)], iw = idx[static_cast<std::size_t>(e.w)];
    if (iv >= 0) m(iv, iv) += diag;
    if (iw >= 0) m(iw, iw) += diag;
    if (iv >= 0 && iw >= 0) {
        m(iv, iw) += off;
        m(iw, iv) += off;
    }
    return m;
}

Matrix m_matrix_de(const MetricGraphModel& g, double E) {
    const auto idx = g.free_index();
    const int nf = static_cast<int>(g.free_vertices().size());
    Matrix m = Matrix::Zero(nf, nf);
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const auto& e = g.edges[i];
        check_pole(E, e, static_cast<int>(i));
        const double k2 = E - e.potential, l = e.length;
        double diag, off;
        if (std::abs(k2) * l * l < 1e-6) {
            diag = l / 3 + 2 * k2 * l * l * l / 45;
            off = l / 6 + 7 * k2 * l * l * l / 180;
        } else if (k2 > 0) {
            const double k = std::sqrt(k2), x = k * l, sn = std::sin(x);
            diag = (-std::cos(x) / sn + x / (sn * sn)) / (2 * k);
            off = (1 / sn - x * std::cos(x) / (sn * sn)) / (2 * k);
        } else {
            const double k = std::sqrt(-k2), x = k * l, sh = std::sinh(x);
            diag = -(-std::cosh(x) / sh + x / (sh * sh)) / (2 * k);
            off = -(1 / sh - x * std::cosh(x) / (sh * sh)) / (2 * k);
        }
        const int iv = idx[static_cast<std::size_t>(e.v)], iw = idx[static_cast<std::size_t>(e.w)];
        if (iv >= 0) m(iv, iv) += diag;
        if (iw >= 0) m(iw, iw) += diag;
        if (iv >= 0 && iw >= 0) {
            m(iv, iw) += off;
            m(iw, iv) += off;
        }
    }
    return m;
}

double secular_min_singular(const MetricGraphModel& g, double E) {
    Matrix a = full_system(g, E);
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()[svd.singularValues().size() - 1];
}

int secular_nullity(const MetricGraphModel& g, double E, double tol) {
    Matrix a = full_system(g, E);
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& sv = svd.singularValues();
    int n = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) n += sv[i] <= tol * sv[0];
    return n;
}

std::vector<Interval> dirichlet_forbidden_set(double l_min, double l_max, Interval window) {
    if (!(l_min > 0 && l_min <= l_max)) fail(ErrorKind::invalid_argument, "forbidden set: need 0 < l_min <= l_max");
    std::vector<Interval> out;
    for (long k = 0;; ++k) {
        const double a = kPi * kPi * k * k / (l_max * l_max), b = kPi * kPi * k * k / (l_min * l_min);
        if (a > window.hi) break;
        const double lo = std::max(a, window.lo), hi = std::min(b, window.hi);
        if (lo > hi) continue;
        if (!out.empty() && lo <= out.back().hi)
            out.back().hi = std::max(out.back().hi, hi);
        else
            out.push_back({lo, hi});
    }
    return out;
}

std::vector<GraphEigenvalue> spectrum_in_window(const MetricGraphModel& g, Interval J) {
    g.validate();
    if (!(J.lo < J.hi)) fail(ErrorKind::invalid_argument, "spectrum_in_window: empty window");
    double vmin = g.c0(), vmax = vmin;
    for (const auto& e : g.edges) vmax = std::max(vmax, e.potential);
    // D_0 shifted by the edge potentials; degenerate bands are isolated poles handled exactly below
    for (long k = 0;; ++k) {
        const double a = vmin + kPi * kPi * k * k / (g.l_max * g.l_max);
        const double b = vmax + kPi * kPi * k * k / (g.l_min * g.l_min);
        if (a > J.hi) break;
        if (b - a > 1e-12 * std::max(1.0, b) && a <= J.hi && b >= J.lo) {
            std::ostringstream os;
            os << "window [" << J.lo << ", " << J.hi << "] meets the forbidden band [" << a << ", " << b << "]";
            fail(ErrorKind::forbidden_window, os.str());
        }
    }
    std::vector<GraphEigenvalue> out;
    const auto poles = pole_energies(g, J.lo, J.hi);
    for (double p : poles)
        for (int i = secular_nullity(g, p); i > 0; --i) out.push_back({p, true});

    const auto fv = g.free_vertices();
    if (!fv.empty()) {
        Vector alpha(static_cast<Eigen::Index>(fv.size()));
        for (std::size_t i = 0; i < fv.size(); ++i) alpha[static_cast<Eigen::Index>(i)] = g.alpha_at(fv[i]);
        auto branches = [&](double E) {
            Matrix m = m_matrix(g, E);
            m.diagonal() -= alpha;
            return eigenvalues_sym(m);
        };
        std::vector<double> cuts{J.lo};
        cuts.insert(cuts.end(), poles.begin(), poles.end());
        cuts.push_back(J.hi);
        for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
            double a = cuts[s], b = cuts[s + 1];
            if (s > 0) a += 2e-6 * std::max(1.0, std::abs(a));
            if (s + 2 < cuts.size()) b -= 2e-6 * std::max(1.0, std::abs(b));
            if (!(a < b)) continue;
            const double span = std::abs(std::sqrt(std::abs(b - vmin)) - std::sqrt(std::abs(a - vmin)));
            const int n = 16 + static_cast<int>(std::ceil(50.0 * g.l_max * span));
            double prev_e = a;
            Vector prev = branches(a);
            for (int i = 1; i <= n; ++i) {
                double E = a + (b - a) * i / n;
                Vector cur = branches(E);
                for (Eigen::Index j = 0; j < cur.size(); ++j) {
                    bool sp = prev[j] > 0, sc = cur[j] > 0;
                    if (sp == sc) continue;
                    double lo = prev_e, hi = E;
                    while (hi - lo > 1e-13 * std::max(1.0, std::abs(hi))) {
                        double mid = 0.5 * (lo + hi);
                        if ((branches(mid)[j] > 0) == sp)
                            lo = mid;
                        else
                            hi = mid;
                    }
                    out.push_back({0.5 * (lo + hi), false});
                }
                prev = cur;
                prev_e = E;
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.energy < y.energy; });
    return out;
}

std::vector<double> spectrum_values(const MetricGraphModel& g, Interval J) {
    std::vector<double> v;
    for (const auto& e : spectrum_in_window(g, J)) v.push_back(e.energy);
    return v;
}

double de_norm_bound(const MetricGraphModel& g, Interval J, int points) {
    if (points < 2) fail(ErrorKind::invalid_argument, "de_norm_bound: need at least 2 points");
    double b = 0.0;
    for (int i = 0; i < points; ++i) b = std::max(b, sym_norm(m_matrix_de(g, J.lo + J.length() * i / (points - 1))));
    return b;
}

Matrix FdOperator::dense() const {
    Matrix k = Matrix(stiffness);
    Vector r = mass.cwiseSqrt().cwiseInverse();
    return r.asDiagonal() * k * r.asDiagonal();
}

int FdOperator::count_below(double sigma) const {
    // a zero pivot means sigma hits an eigenvalue; nudge it down so the count stays "strictly below"
    for (int attempt = 0; attempt < 8; ++attempt) {
        const double s = attempt == 0 ? sigma : sigma - std::pow(4.0, attempt) * 1e-11 * std::max(1.0, std::abs(sigma));
        Eigen::SparseMatrix<double> a = stiffness;
        for (int i = 0; i < dim(); ++i) a.coeffRef(i, i) -= s * mass[i];
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
        if (ldlt.info() != Eigen::Success) continue;
        const Vector& dd = ldlt.vectorD();
        if ((dd.array() == 0.0).any()) continue;
        int n = 0;
        for (Eigen::Index i = 0; i < dd.size(); ++i) n += dd[i] < 0;
        return n;
    }
    fail(ErrorKind::invariant_violation, "fd inertia: factorization failed");
}

std::vector<double> FdOperator::eigenvalues_in(Interval J, double tol) const {
    std::vector<double> out;
    std::function<void(double, double, int, int)> rec = [&](double a, double b, int ca, int cb) {
        if (cb == ca) return;
        if (b - a <= tol * std::max(1.0, std::abs(b))) {
            for (int i = ca; i < cb; ++i) out.push_back(0.5 * (a + b));
            return;
        }
        double m = 0.5 * (a + b);
        int cm = count_below(m);
        rec(a, m, ca, cm);
        rec(m, b, cm, cb);
    };
    rec(J.lo, J.hi, count_below(J.lo), count_below(J.hi));
    return out;
}

FdOperator fd_oracle(const MetricGraphModel& g, double h) {
    g.validate();
    if (!(h > 0) || h > g.l_min / 20 * (1 + 1e-12))
        fail(ErrorKind::precondition_violated, "fd_oracle: step must satisfy 0 < h <= l_min/20");
    const auto idx = g.free_index();
    int next = static_cast<int>(g.free_vertices().size());
    FdOperator op;
    op.vertex_nodes = next;
    std::vector<Eigen::Triplet<double>> t;
    std::vector<double> mass(static_cast<std::size_t>(next), 0.0);
    for (const auto& e : g.edges) {
        const int n = static_cast<int>(std::ceil(e.length / h - 1e-9));
        const double he = e.length / n;
        std::vector<int> nodes{idx[static_cast<std::size_t>(e.v)]};
        for (int i = 1; i < n; ++i) {
            nodes.push_back(next++);
            mass.push_back(0.0);
        }
        nodes.push_back(idx[static_cast<std::size_t>(e.w)]);
        for (int i = 0; i < n; ++i) {
            const int p = nodes[static_cast<std::size_t>(i)], q = nodes[static_cast<std::size_t>(i + 1)];
            const double diag = 1.0 / he + e.potential * he / 2;
            if (p >= 0) {
                t.emplace_back(p, p, diag);
                mass[static_cast<std::size_t>(p)] += he / 2;
            }
            if (q >= 0) {
                t.emplace_back(q, q, diag);
                mass[static_cast<std::size_t>(q)] += he / 2;
            }
            if (p >= 0 && q >= 0) {
                t.emplace_back(p, q, -1.0 / he);
                t.emplace_back(q, p, -1.0 / he);
            }
        }
    }
    for (int v : g.free_vertices()) {
        const double a = g.alpha_at(v);
        if (a != 0.0) t.emplace_back(idx[static_cast<std::size_t>(v)], idx[static_cast<std::size_t>(v)], a);
    }
    op.stiffness.resize(next, next);
    op.stiffness.setFromTriplets(t.begin(), t.end());
    op.stiffness.makeCompressed();
    op.mass = Eigen::Map<Vector>(mass.data(), static_cast<Eigen::Index>(mass.size()));
    return op;
}

WeylBound weyl_bound_detail(const MetricGraphModel& g, double S) {
    g.validate();
    WeylBound w;
    const double a = g.coupled_free_count() > 0 ? std::max(0.0, -g.alpha_lo) : 0.0;
    if (a > 0) {
        // |f(0)|^2 + |f(l)|^2 <= (4/s) ||f||^2 + s ||f'||^2 for s <= l, and a s <= 1/8
        const double s = std::min(g.l_min, 1.0 / (8 * a));
        w.c = 2 * (g.c0() - 4 * a / s);
    } else {
        w.c = 2 * g.c0();
    }
    const double top = 2 * S - w.c;
    if (top < 0) return w;
    const long per_edge = static_cast<long>(std::floor(2 * g.l_max * std::sqrt(top) / kPi)) + 1;
    w.k = static_cast<long>(g.edges.size()) * per_edge;
    return w;
}

}  // namespace wegnerlab

#include "wegnerlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wegnerlab/errors.hpp"

namespace wegnerlab {

namespace {

void check_symmetric(const Matrix& a, Eigen::Index cap) {
    if (a.rows() != a.cols()) fail(ErrorKind::invalid_argument, "eigen_sym: matrix is not square");
    if (a.rows() > cap) {
        std::ostringstream os;
        os << "eigen_sym: dimension " << a.rows() << " exceeds cap " << cap;
        fail(ErrorKind::resource_limit, os.str());
    }
    if (!a.allFinite()) fail(ErrorKind::invalid_argument, "eigen_sym: non-finite entry");
    if (a != a.transpose()) fail(ErrorKind::invalid_argument, "eigen_sym: matrix is not exactly symmetric");
}

// Gauss-Kronrod 7/15 on [-1, 1]
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(const F& f, double a, double b, double& value, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fc = f(c);
    double k = fc * kWgk[7], g = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        double f1 = f(c - h * kXgk[j]), f2 = f(c + h * kXgk[j]);
        k += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) g += kWg[j / 2] * (f1 + f2);
    }
    value = k * h;
    err = std::abs((k - g) * h);
}

template <class F>
void adaptive(const F& f, double a, double b, double tol, int depth, double& value, double& err) {
    double v, e;
    gk15(f, a, b, v, e);
    if (e <= tol || depth <= 0 || b - a < 1e-14) {
        value += v;
        err += e;
        return;
    }
    double m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1, value, err);
    adaptive(f, m, b, 0.5 * tol, depth - 1, value, err);
}

}  // namespace

SpectralDecomposition eigen_sym(const Matrix& a, Eigen::Index cap) {
    check_symmetric(a, cap);
    SpectralDecomposition d;
    if (a.rows() == 0) return d;
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) fail(ErrorKind::invariant_violation, "eigen_sym: solver did not converge");
    d.values = es.eigenvalues();
    d.vectors = es.eigenvectors();
    return d;
}

Vector eigenvalues_sym(const Matrix& a, Eigen::Index cap) {
    check_symmetric(a, cap);
    if (a.rows() == 0) return Vector();
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) fail(ErrorKind::invariant_violation, "eigen_sym: solver did not converge");
    return es.eigenvalues();
}

DecompositionQuality check_decomposition(const Matrix& a, const SpectralDecomposition& d) {
    DecompositionQuality q;
    if (a.rows() == 0) return q;
    Matrix r = a * d.vectors - d.vectors * d.values.asDiagonal();
    q.residual = r.cwiseAbs().maxCoeff();
    Matrix o = d.vectors.transpose() * d.vectors - Matrix::Identity(a.rows(), a.rows());
    q.orthogonality = o.cwiseAbs().maxCoeff();
    q.norm = std::max(std::abs(d.values.minCoeff()), std::abs(d.values.maxCoeff()));
    return q;
}

int count_in_interval(const Vector& values, Interval I, int* near_endpoint) {
    int c = 0, near = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        double x = values[i];
        if (I.contains(x)) ++c;
        if (std::abs(x - I.lo) <= kEndpointTol || std::abs(x - I.hi) <= kEndpointTol) ++near;
    }
    if (near_endpoint) *near_endpoint = near;
    return c;
}

Matrix eigenvectors_in(const SpectralDecomposition& d, Interval I) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index i = 0; i < d.values.size(); ++i)
        if (I.contains(d.values[i])) cols.push_back(i);
    Matrix v(d.vectors.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = d.vectors.col(cols[k]);
    return v;
}

Matrix spectral_projector(const SpectralDecomposition& d, Interval I) {
    Matrix v = eigenvectors_in(d, I);
    return v * v.transpose();
}

double uncertainty_gamma(const SpectralDecomposition& dec_a, Interval I, const Matrix& w) {
    if (w.rows() != dec_a.vectors.rows() || w.cols() != w.rows())
        fail(ErrorKind::invalid_argument, "uncertainty_gamma: dimension mismatch");
    Matrix v = eigenvectors_in(dec_a, I);
    if (v.cols() == 0) return std::numeric_limits<double>::infinity();
    Matrix c = v.transpose() * w * v;
    c = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

double uncertainty_gamma(const Matrix& a, Interval I, const Matrix& w) { return uncertainty_gamma(eigen_sym(a), I, w); }

namespace {

LocalTraceResult finish_local(double lhs, double sum, int c_fin, int j_eff, double gamma, Eigen::Index dim_range) {
    LocalTraceResult r;
    r.lhs = lhs;
    r.c_fin = c_fin;
    r.j_eff = j_eff;
    if (dim_range == 0) {
        r.rhs = 0.0;
        r.pass = true;
        return r;
    }
    if (!(gamma > 0.0)) fail(ErrorKind::hypothesis_failed, "local_trace_check: gamma must be positive");
    r.rhs = c_fin * sum / (gamma * gamma);
    r.pass = r.lhs <= r.rhs + 1e-8 * (1.0 + r.rhs);
    return r;
}

}  // namespace

LocalTraceResult local_trace_check(const SpectralDecomposition& dec_h, const std::vector<Vector>& parts, Interval I,
                                   double gamma) {
    const Eigen::Index n = dec_h.vectors.rows();
    Matrix v = eigenvectors_in(dec_h, I);
    Vector pdiag = v.rowwise().squaredNorm();
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    double sum = 0.0;
    for (const auto& u : parts) {
        if (u.size() != n) fail(ErrorKind::invalid_argument, "local_trace_check: part dimension mismatch");
        for (Eigen::Index j = 0; j < n; ++j) {
            if (u[j] != 0.0) {
                ++count[static_cast<std::size_t>(j)];
                sum += u[j] * u[j] * pdiag[j];
            }
        }
    }
    int c_fin = 0, j_eff = 0;
    for (int c : count) {
        c_fin = std::max(c_fin, c);
        if (c > 0) ++j_eff;
    }
    return finish_local(static_cast<double>(v.cols()), sum, c_fin, j_eff, gamma, v.cols());
}

LocalTraceResult local_trace_check(const SpectralDecomposition& dec_h, const std::vector<Matrix>& parts, Interval I,
                                   double gamma) {
    const Eigen::Index n = dec_h.vectors.rows();
    Matrix v = eigenvectors_in(dec_h, I);
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    double sum = 0.0;
    for (const auto& u : parts) {
        if (u.rows() != n || u.cols() != n) fail(ErrorKind::invalid_argument, "local_trace_check: part dimension mismatch");
        Matrix uv = u * v;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (u.col(j).cwiseAbs().maxCoeff() != 0.0) {
                ++count[static_cast<std::size_t>(j)];
                sum += uv.row(j).squaredNorm();
            }
        }
    }
    int c_fin = 0, j_eff = 0;
    for (int c : count) {
        c_fin = std::max(c_fin, c);
        if (c > 0) ++j_eff;
    }
    return finish_local(static_cast<double>(v.cols()), sum, c_fin, j_eff, gamma, v.cols());
}

AveragingResult spectral_averaging_check(const Matrix& a, const Matrix& b, const Vector& phi, Interval I,
                                         const Measure& mu) {
    const Eigen::Index n = a.rows();
    if (b.rows() != n || phi.size() != n) fail(ErrorKind::invalid_argument, "spectral_averaging_check: dimension mismatch");
    if (!(I.hi > I.lo)) fail(ErrorKind::invalid_argument, "spectral_averaging_check: degenerate interval");
    auto db = eigen_sym(b);
    if (n > 0 && db.values[0] < -1e-10)
        fail(ErrorKind::invalid_argument, "spectral_averaging_check: B has a negative eigenvalue");
    AveragingResult r;
    const double normb = n > 0 ? std::max(0.0, db.values[n - 1]) : 0.0;
    r.rhs = 6.0 * normb * phi.squaredNorm() * mu.sup_interval_mass(I.length());
    if (normb == 0.0) {
        r.pass = r.lhs <= r.rhs;
        return r;
    }
    Matrix sqrtb = db.vectors * db.values.cwiseMax(0.0).cwiseSqrt().asDiagonal() * db.vectors.transpose();
    Vector psi = sqrtb * phi;
    const double psi2 = psi.squaredNorm();

    auto at = [&](double t) -> Matrix {
        Matrix m = a + t * b;
        return 0.5 * (m + m.transpose());
    };
    auto g = [&](double t) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(at(t), Eigen::ComputeEigenvectors);
        double s = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (I.contains(es.eigenvalues()[k])) {
                double c = es.eigenvectors().col(k).dot(psi);
                s += c * c;
            }
        }
        return s;
    };

    if (mu.has_atoms()) {
        for (std::size_t i = 0; i < mu.points().size(); ++i) r.lhs += mu.weights()[i] * g(mu.points()[i]);
        r.pass = r.lhs <= r.rhs;
        return r;
    }

    const double t0 = mu.lo(), t1 = mu.hi();
    std::vector<double> nodes{t0, t1};
    for (double x : mu.smooth_breaks())
        if (x > t0 && x < t1) nodes.push_back(x);

    // sorted branches of A + tB are non-decreasing in t since B >= 0; bisect each endpoint crossing
    auto eig = [&](double t) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(at(t), Eigen::EigenvaluesOnly);
        return Vector(es.eigenvalues());
    };
    const Vector e0 = eig(t0), e1 = eig(t1);
    const double tol_t = 1e-14 * std::max(1.0, t1 - t0);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (double level : {I.lo, I.hi}) {
            if (!(e0[k] < level && e1[k] > level)) continue;
            double l = t0, h = t1;
            while (h - l > tol_t) {
                double m = 0.5 * (l + h);
                (eig(m)[k] < level ? l : h) = m;
            }
            nodes.push_back(0.5 * (l + h));
            ++r.crossings;
            // the integrand jumps by at most |psi|^2 across a crossing located to within tol_t
            r.quad_error += psi2 * mu.density_bound() * tol_t;
        }
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    auto integrand = [&](double t) { return g(t) * mu.pdf(t); };
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        double lo = nodes[i], hi = nodes[i + 1];
        if (hi - lo <= 0.0) continue;
        double tol = 1e-12 * psi2 * std::max(1e-300, mu.cdf(hi) - mu.cdf(lo)) + 1e-16;
        adaptive(integrand, lo, hi, tol, 12, r.lhs, r.quad_error);
    }
    r.pass = r.lhs <= r.rhs + r.quad_error;
    return r;
}

}  // namespace wegnerlab

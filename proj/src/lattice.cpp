#include "wegnerlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wegnerlab/errors.hpp"
#include "wegnerlab/rng.hpp"

namespace wegnerlab {

namespace {

const double kPi = std::acos(-1.0);

int pmod(int a, int p) {
    int r = a % p;
    return r < 0 ? r + p : r;
}

int floordiv(int a, int p) { return (a - pmod(a, p)) / p; }

int ipow(int b, int e) {
    long r = 1;
    for (int i = 0; i < e; ++i) {
        r *= b;
        if (r > (1L << 30)) return 1 << 30;
    }
    return static_cast<int>(r);
}

std::vector<Site> cube_sites(const Site& c, int L, int d) {
    std::vector<Site> out;
    int side = 2 * L + 1;
    int m = ipow(side, d);
    out.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        Site s{0, 0};
        int r = k;
        for (int a = 0; a < d; ++a) {
            s[static_cast<std::size_t>(a)] = c[static_cast<std::size_t>(a)] - L + r % side;
            r /= side;
        }
        out.push_back(s);
    }
    return out;
}

using CMatrix = Eigen::MatrixXcd;

// Bloch fiber of -Delta + V0 + q W on one period cell, with f(x + P m) = e^{i theta.m} f(x).
CMatrix build_fiber(const LatticeModel& model, const std::array<int, 2>& P, const std::vector<double>& wcell,
                    double q, const std::array<double, 2>& theta) {
    const int d = model.d;
    const int m = P[0] * (d == 2 ? P[1] : 1);
    CMatrix h = CMatrix::Zero(m, m);
    auto idx = [&](int s0, int s1) { return s0 + P[0] * s1; };
    for (int s1 = 0; s1 < (d == 2 ? P[1] : 1); ++s1) {
        for (int s0 = 0; s0 < P[0]; ++s0) {
            int i = idx(s0, s1);
            h(i, i) += 2.0 * d + model.v0({s0, s1}) + q * wcell[static_cast<std::size_t>(i)];
            for (int k = 0; k < d; ++k) {
                Site t{s0, s1};
                t[static_cast<std::size_t>(k)] += 1;
                std::complex<double> phase = 1.0;
                if (t[static_cast<std::size_t>(k)] >= P[static_cast<std::size_t>(k)]) {
                    t[static_cast<std::size_t>(k)] -= P[static_cast<std::size_t>(k)];
                    phase = std::polar(1.0, theta[static_cast<std::size_t>(k)]);
                }
                int j = idx(t[0], t[1]);
                h(i, j) -= phase;
                h(j, i) -= std::conj(phase);
            }
        }
    }
    return h;
}

// Real symmetric doubling [[Re, -Im], [Im, Re]] has the spectrum of h with doubled multiplicity.
double fiber_ground(const CMatrix& h) {
    const Eigen::Index m = h.rows();
    Matrix r(2 * m, 2 * m);
    r.topLeftCorner(m, m) = h.real();
    r.bottomRightCorner(m, m) = h.real();
    r.topRightCorner(m, m) = -h.imag();
    r.bottomLeftCorner(m, m) = h.imag();
    r = 0.5 * (r + r.transpose());
    return eigenvalues_sym(r)[0];
}

std::vector<double> cell_w(const LatticeModel& model, const std::array<int, 2>& P) {
    const int d = model.d, R = model.radius;
    std::vector<double> w(static_cast<std::size_t>(P[0] * (d == 2 ? P[1] : 1)), 0.0);
    for (int s1 = 0; s1 < (d == 2 ? P[1] : 1); ++s1) {
        for (int s0 = 0; s0 < P[0]; ++s0) {
            double acc = 0.0;
            for (const Site& a : cube_sites({s0, s1}, R, d))
                if (model.support.contains(a, d)) acc += model.u({s0, s1}, a);
            w[static_cast<std::size_t>(s0 + P[0] * s1)] = acc;
        }
    }
    return w;
}

}  // namespace

const char* to_string(Boundary b) {
    switch (b) {
        case Boundary::simple: return "simple";
        case Boundary::dirichlet: return "dirichlet";
        case Boundary::neumann: return "neumann";
    }
    return "simple";
}

Boundary boundary_from_string(const std::string& s) {
    if (s == "simple") return Boundary::simple;
    if (s == "dirichlet") return Boundary::dirichlet;
    if (s == "neumann") return Boundary::neumann;
    fail(ErrorKind::invalid_argument, "unknown boundary condition '" + s + "'");
}

bool Support::contains(const Site& x, int d) const {
    switch (kind) {
        case SupportKind::full:
            return true;
        case SupportKind::half_space:
            return x[static_cast<std::size_t>(axis)] > threshold;
        case SupportKind::surface:
            for (int k = surface_dims; k < d; ++k)
                if (x[static_cast<std::size_t>(k)] != 0) return false;
            return true;
        case SupportKind::delone: {
            for (int k = 0; k < d; ++k) {
                int c = floordiv(x[static_cast<std::size_t>(k)], cell);
                std::uint64_t key = periodic ? 0 : mix64(static_cast<std::uint64_t>(floordiv(x[0], cell)) * 0x9E3779B1ULL +
                                                         static_cast<std::uint64_t>(d == 2 ? floordiv(x[1], cell) : 0));
                std::uint64_t h = mix64(seed ^ key ^ (0x51ULL * static_cast<std::uint64_t>(k + 1)));
                int off = static_cast<int>(h % static_cast<std::uint64_t>(cell));
                if (x[static_cast<std::size_t>(k)] != c * cell + off) return false;
            }
            return true;
        }
        case SupportKind::finite_holes:
            return std::find(holes.begin(), holes.end(), x) == holes.end();
    }
    return false;
}

bool Support::period(int d, std::array<int, 2>& p) const {
    p = {1, 1};
    if (kind == SupportKind::full) return true;
    if (kind == SupportKind::delone && periodic) {
        for (int k = 0; k < d; ++k) p[static_cast<std::size_t>(k)] = cell;
        return true;
    }
    return false;
}

void LatticeModel::validate() const {
    if (d < 1 || d > 2) fail(ErrorKind::invalid_argument, "lattice: d must be 1 or 2");
    if (n < 1 || n > 2) fail(ErrorKind::invalid_argument, "lattice: n must be 1 or 2");
    if (radius < 0) fail(ErrorKind::invalid_argument, "lattice: radius must be >= 0");
    if (static_cast<int>(profile.size()) != ipow(2 * radius + 1, d))
        fail(ErrorKind::invalid_argument, "lattice: profile must have (2R+1)^d values");
    for (double v : profile)
        if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::invalid_argument, "lattice: profile values must be >= 0");
    for (int k = 0; k < d; ++k)
        if (v0_period[static_cast<std::size_t>(k)] < 1) fail(ErrorKind::invalid_argument, "lattice: V0 period must be >= 1");
    if (static_cast<int>(v0_values.size()) != v0_period[0] * (d == 2 ? v0_period[1] : 1))
        fail(ErrorKind::invalid_argument, "lattice: V0 values do not match its period");
    for (double v : v0_values)
        if (!std::isfinite(v)) fail(ErrorKind::invalid_argument, "lattice: V0 must be finite");
    if (!(q_lo <= q_hi)) fail(ErrorKind::invalid_argument, "lattice: need q_lo <= q_hi");
    if (support.kind == SupportKind::delone && support.cell < 1)
        fail(ErrorKind::invalid_argument, "lattice: delone cell must be >= 1");
    if (support.kind == SupportKind::half_space && (support.axis < 0 || support.axis >= d))
        fail(ErrorKind::invalid_argument, "lattice: half-space axis out of range");
}

double LatticeModel::c_u() const { return profile.empty() ? 0.0 : *std::max_element(profile.begin(), profile.end()); }

double LatticeModel::v0(const Site& x) const {
    int i = pmod(x[0], v0_period[0]);
    if (d == 2) i += v0_period[0] * pmod(x[1], v0_period[1]);
    return v0_values[static_cast<std::size_t>(i)];
}

double LatticeModel::u(const Site& x, const Site& alpha) const {
    int idx = 0, stride = 1;
    for (int k = 0; k < d; ++k) {
        int off = x[static_cast<std::size_t>(k)] - alpha[static_cast<std::size_t>(k)];
        if (off < -radius || off > radius) return 0.0;
        idx += (off + radius) * stride;
        stride *= 2 * radius + 1;
    }
    return profile[static_cast<std::size_t>(idx)];
}

Vector LatticeSystem::w_diag() const {
    Vector w = Vector::Zero(dim());
    for (const auto& p : parts) w += p;
    return w;
}

Matrix LatticeSystem::hamiltonian(const std::vector<double>& omega) const {
    if (omega.size() != parts.size()) {
        std::ostringstream os;
        os << "assemble: expected " << parts.size() << " coupling values, got " << omega.size();
        fail(ErrorKind::invalid_argument, os.str());
    }
    Vector v = Vector::Zero(dim());
    for (std::size_t a = 0; a < parts.size(); ++a) v += omega[a] * parts[a];
    Matrix h = h0;
    h.diagonal() += v;
    return h;
}

LatticeSystem build_system(const LatticeModel& model, const CubeRestriction& cube) {
    model.validate();
    const int d = model.d, n = model.n, L = cube.half_side;
    if (static_cast<int>(cube.center.size()) != n) fail(ErrorKind::invalid_argument, "cube: need one center per particle");
    if (L < 0) fail(ErrorKind::invalid_argument, "cube: half-side must be >= 0");
    const int side = 2 * L + 1;
    const int m1 = ipow(side, d);
    const long dim = static_cast<long>(ipow(m1, n));
    if (dim > kDefaultDimCap) {
        std::ostringstream os;
        os << "cube: dimension " << dim << " exceeds cap " << kDefaultDimCap;
        fail(ErrorKind::resource_limit, os.str());
    }
    LatticeSystem sys;
    sys.d = d;
    sys.n = n;
    std::vector<std::vector<Site>> single;
    for (const Site& c : cube.center) single.push_back(cube_sites(c, L, d));
    sys.basis.resize(static_cast<std::size_t>(dim));
    for (long k = 0; k < dim; ++k) {
        long r = k;
        for (int i = 0; i < n; ++i) {
            sys.basis[static_cast<std::size_t>(k)].push_back(single[static_cast<std::size_t>(i)][static_cast<std::size_t>(r % m1)]);
            r /= m1;
        }
    }
    auto index_of = [&](const std::vector<Site>& x) -> long {
        long k = 0, stride = 1;
        for (int i = 0; i < n; ++i) {
            long loc = 0, s = 1;
            for (int a = 0; a < d; ++a) {
                int off = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] -
                          cube.center[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] + L;
                if (off < 0 || off >= side) return -1;
                loc += off * s;
                s *= side;
            }
            k += loc * stride;
            stride *= m1;
        }
        return k;
    };
    sys.h0 = Matrix::Zero(dim, dim);
    const int full_degree = 2 * n * d;
    for (long k = 0; k < dim; ++k) {
        const auto& x = sys.basis[static_cast<std::size_t>(k)];
        int deg = 0;
        for (int i = 0; i < n; ++i) {
            for (int a = 0; a < d; ++a) {
                for (int dir : {-1, 1}) {
                    auto y = x;
                    y[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] += dir;
                    long j = index_of(y);
                    if (j >= 0) {
                        sys.h0(k, j) = -1.0;
                        ++deg;
                    }
                }
            }
        }
        const int nout = full_degree - deg;
        double diag = deg;
        if (cube.bc == Boundary::simple) diag += nout;
        if (cube.bc == Boundary::dirichlet) diag += 2.0 * nout;
        for (int i = 0; i < n; ++i) diag += model.v0(x[static_cast<std::size_t>(i)]);
        sys.h0(k, k) = diag;
    }
    sys.active = support_window(model, cube).active;
    for (const Site& a : sys.active) {
        Vector p = Vector::Zero(dim);
        for (long k = 0; k < dim; ++k) {
            double s = 0.0;
            for (const Site& xi : sys.basis[static_cast<std::size_t>(k)]) s += model.u(xi, a);
            p[k] = s;
        }
        sys.parts.push_back(std::move(p));
    }
    return sys;
}

Matrix assemble(const LatticeModel& model, const CubeRestriction& cube, const std::vector<double>& omega) {
    return build_system(model, cube).hamiltonian(omega);
}

SupportWindow support_window(const LatticeModel& model, const CubeRestriction& cube) {
    model.validate();
    const int d = model.d, R = model.radius, L = cube.half_side;
    SupportWindow w;
    for (const Site& c : cube.center)
        for (const Site& a : cube_sites(c, L + R, d))
            if (model.support.contains(a, d)) w.active.push_back(a);
    std::sort(w.active.begin(), w.active.end());
    w.active.erase(std::unique(w.active.begin(), w.active.end()), w.active.end());
    // basis vectors j = (x_1..x_n); U_alpha e_j != 0 iff some particle sits in the support of u_alpha
    std::vector<std::vector<Site>> single;
    for (const Site& c : cube.center) single.push_back(cube_sites(c, L, d));
    const std::size_t m1 = single.front().size();
    std::size_t dim = 1;
    for (int i = 0; i < model.n; ++i) dim *= m1;
    for (std::size_t k = 0; k < dim; ++k) {
        std::size_t r = k;
        std::vector<Site> x;
        for (int i = 0; i < model.n; ++i) {
            x.push_back(single[static_cast<std::size_t>(i)][r % m1]);
            r /= m1;
        }
        int count = 0;
        for (const Site& a : w.active) {
            double s = 0.0;
            for (const Site& xi : x) s += model.u(xi, a);
            if (s != 0.0) ++count;
        }
        if (count > 0) ++w.j_eff;
        w.c_fin = std::max(w.c_fin, count);
    }
    return w;
}

BlochEdge bloch_edge(const LatticeModel& model, double q, int grid) {
    model.validate();
    if (model.n != 1) fail(ErrorKind::unsupported_model, "bloch_edge: single-particle models only");
    if (grid < 1) fail(ErrorKind::invalid_argument, "bloch_edge: grid must be >= 1");
    std::array<int, 2> P = model.v0_period;
    std::vector<double> wcell;
    if (q != 0.0) {
        std::array<int, 2> sp;
        if (!model.support.period(model.d, sp))
            fail(ErrorKind::unsupported_model, "bloch_edge: support is not periodic");
        for (int k = 0; k < model.d; ++k)
            P[static_cast<std::size_t>(k)] = std::lcm(P[static_cast<std::size_t>(k)], sp[static_cast<std::size_t>(k)]);
        wcell = cell_w(model, P);
    } else {
        wcell.assign(static_cast<std::size_t>(P[0] * (model.d == 2 ? P[1] : 1)), 0.0);
    }
    BlochEdge out;
    out.value = std::numeric_limits<double>::infinity();
    const int g1 = model.d == 2 ? grid : 1;
    for (int j1 = 0; j1 < g1; ++j1) {
        for (int j0 = 0; j0 < grid; ++j0) {
            std::array<double, 2> th{2 * kPi * j0 / grid, model.d == 2 ? 2 * kPi * j1 / grid : 0.0};
            out.value = std::min(out.value, fiber_ground(build_fiber(model, P, wcell, q, th)));
        }
    }
    for (int k = 0; k < model.d; ++k) out.error += (P[static_cast<std::size_t>(k)] == 1 ? 2.0 : 1.0) * kPi / grid;
    return out;
}

WeylResidual weyl_residual_detail(const LatticeModel& model, double lambda, double q, int ell, const Site& offset) {
    model.validate();
    if (model.n != 1) fail(ErrorKind::unsupported_model, "weyl_residual: single-particle models only");
    if (ell < 1) fail(ErrorKind::invalid_argument, "weyl_residual: box half-side must be >= 1");
    const int d = model.d;
    const auto box = cube_sites(offset, ell, d);
    for (const Site& x : box)
        if (!model.support.contains(x, d)) fail(ErrorKind::invalid_argument, "weyl_residual: box is not inside the support");

    // locate a quasi-momentum with a background band passing through lambda
    const std::array<int, 2> P = model.v0_period;
    const std::vector<double> zero(static_cast<std::size_t>(P[0] * (d == 2 ? P[1] : 1)), 0.0);
    auto bands = [&](const std::array<double, 2>& th) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(build_fiber(model, P, zero, 0.0, th));
        return es;
    };
    const int n0 = d == 1 ? 1024 : 256, n1 = d == 1 ? 1 : 64;
    bool found = false;
    std::array<double, 2> theta{0, 0};
    int band = 0;
    for (int j1 = 0; j1 < n1 && !found; ++j1) {
        double t1 = d == 2 ? (n1 == 1 ? 0.0 : kPi * j1 / (n1 - 1)) : 0.0;
        Vector prev;
        for (int j0 = 0; j0 < n0 && !found; ++j0) {
            double t0 = kPi * j0 / (n0 - 1);
            Vector cur = bands({t0, t1}).eigenvalues();
            for (Eigen::Index b = 0; b < cur.size() && !found; ++b) {
                if (std::abs(cur[b] - lambda) <= 1e-13) {
                    theta = {t0, t1};
                    band = static_cast<int>(b);
                    found = true;
                } else if (prev.size() && (prev[b] - lambda) * (cur[b] - lambda) < 0) {
                    double lo = kPi * (j0 - 1) / (n0 - 1), hi = t0;
                    double flo = prev[b] - lambda;
                    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                        double mid = 0.5 * (lo + hi);
                        double fm = bands({mid, t1}).eigenvalues()[b] - lambda;
                        if ((fm < 0) == (flo < 0)) {
                            lo = mid;
                            flo = fm;
                        } else {
                            hi = mid;
                        }
                    }
                    theta = {0.5 * (lo + hi), t1};
                    band = static_cast<int>(b);
                    found = true;
                }
            }
            prev = cur;
        }
    }
    if (!found) fail(ErrorKind::invalid_argument, "weyl_residual: lambda is not in the background spectrum");
    auto es = bands(theta);
    Eigen::VectorXcd ucell = es.eigenvectors().col(band);
    const double energy = es.eigenvalues()[band];

    // f on Lambda_{ell+1}(offset), vanishing on the outer shell
    const int L1 = ell + 1, side = 2 * L1 + 1;
    const auto ext = cube_sites(offset, L1, d);
    std::vector<std::complex<double>> f(ext.size(), 0.0);
    auto local = [&](const Site& x) -> long {
        long k = 0, s = 1;
        for (int a = 0; a < d; ++a) {
            int off = x[static_cast<std::size_t>(a)] - offset[static_cast<std::size_t>(a)] + L1;
            if (off < 0 || off >= side) return -1;
            k += off * s;
            s *= side;
        }
        return k;
    };
    WeylResidual out;
    out.theta = theta;
    for (std::size_t k = 0; k < ext.size(); ++k) {
        const Site& x = ext[k];
        double w = 1.0;
        for (int a = 0; a < d; ++a) {
            int off = x[static_cast<std::size_t>(a)] - offset[static_cast<std::size_t>(a)];
            if (std::abs(off) > ell) {
                w = 0.0;
                break;
            }
            double c = std::cos(kPi * off / (2.0 * (ell + 1)));
            w *= c * c;
        }
        if (w == 0.0) continue;
        int s0 = pmod(x[0], P[0]), s1 = d == 2 ? pmod(x[1], P[1]) : 0;
        double phase = theta[0] * floordiv(x[0], P[0]) + (d == 2 ? theta[1] * floordiv(x[1], P[1]) : 0.0);
        f[k] = w * std::polar(1.0, phase) * ucell[s0 + P[0] * s1];
        out.sites.push_back(x);
        out.values.push_back(f[k]);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < ext.size(); ++k) {
        const Site& x = ext[k];
        double pot = 0.0;
        for (const Site& a : cube_sites(x, model.radius, d)) {
            bool in_box = true;
            for (int c = 0; c < d; ++c)
                if (std::abs(a[static_cast<std::size_t>(c)] - offset[static_cast<std::size_t>(c)]) > ell) in_box = false;
            if (in_box && model.support.contains(a, d)) pot += q * model.u(x, a);
        }
        std::complex<double> hf = (2.0 * d + model.v0(x) + pot - (energy + q)) * f[k];
        for (int a = 0; a < d; ++a) {
            for (int dir : {-1, 1}) {
                Site y = x;
                y[static_cast<std::size_t>(a)] += dir;
                long j = local(y);
                if (j >= 0) hf -= f[static_cast<std::size_t>(j)];
            }
        }
        num += std::norm(hf);
        den += std::norm(f[k]);
    }
    out.norm = std::sqrt(den);
    out.residual = std::sqrt(num / den);
    return out;
}

}  // namespace wegnerlab

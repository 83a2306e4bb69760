#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "wegnerlab/errors.hpp"
#include "wegnerlab/graphs.hpp"

using namespace wegnerlab;

namespace {

const double kPi = std::acos(-1.0);

MetricGraphModel random_grid(int side, std::mt19937_64& rng, double alpha_lo = 0.0, double alpha_hi = 0.0) {
    auto g = grid_graph(2, side, 1.0);
    g.l_min = 0.9;
    g.l_max = 1.1;
    g.alpha_lo = alpha_lo;
    g.alpha_hi = alpha_hi;
    std::uniform_real_distribution<double> len(0.9, 1.1), al(alpha_lo, alpha_hi);
    for (auto& e : g.edges) e.length = len(rng);
    for (auto& a : g.alpha) a = alpha_lo == alpha_hi ? alpha_lo : al(rng);
    return g;
}

double fd_ground(const MetricGraphModel& g, double h) {
    auto op = fd_oracle(g, h);
    double lo = -1e3, hi = 1e3;
    while (hi - lo > 1e-12 * std::max(1.0, std::abs(hi))) {
        double mid = 0.5 * (lo + hi);
        (op.count_below(mid) >= 1 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("m_matrix single edge") {
    auto g = single_edge(kPi / 2, false);
    Matrix m = m_matrix(g, 1.0);
    CHECK(std::abs(m(0, 0)) < 1e-15);
    CHECK(std::abs(m(1, 1)) < 1e-15);
    CHECK(m(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m(1, 0) == m(0, 1));
    const double l = 1.3;
    auto g2 = single_edge(l, false);
    Matrix z = m_matrix(g2, 1e-8);
    CHECK(std::abs(z(0, 0) + 1 / l) <= 1e-7 / l);
    CHECK(std::abs(z(0, 1) - 1 / l) <= 1e-7 / l);
    CHECK(std::abs(m_matrix(g2, 0.0)(0, 0) + 1 / l) < 1e-15);
    // hyperbolic branch below the edge potential
    Matrix hy = m_matrix(g2, -4.0);
    CHECK(hy(0, 0) == doctest::Approx(-2 / std::tanh(2 * l)).epsilon(1e-14));
    CHECK(hy(0, 1) == doctest::Approx(2 / std::sinh(2 * l)).epsilon(1e-14));
    try {
        m_matrix(g, 4.0);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::pole_error);
    }
    std::mt19937_64 rng(3);
    auto gr = random_grid(3, rng);
    Matrix mr = m_matrix(gr, 5.0);
    CHECK((mr - mr.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("m_matrix derivatives") {
    std::mt19937_64 rng(5);
    auto g = random_grid(3, rng);
    for (double E : {-2.0, 0.5, 3.0, 7.5}) {
        for (int e : {0, 5, 11}) {
            Matrix dl = m_matrix_dl(g, E, e);
            auto gp = g, gm = g;
            const double delta = 1e-6;
            gp.edges[static_cast<std::size_t>(e)].length += delta;
            gm.edges[static_cast<std::size_t>(e)].length -= delta;
            gp.l_max = gm.l_max = 2.0;
            gp.l_min = gm.l_min = 0.5;
            Matrix fd = (m_matrix(gp, E) - m_matrix(gm, E)) / (2 * delta);
            CHECK((fd - dl).cwiseAbs().maxCoeff() < 1e-6);
            // support only on the endpoints of e
            const auto& ed = g.edges[static_cast<std::size_t>(e)];
            for (int i = 0; i < dl.rows(); ++i)
                for (int j = 0; j < dl.cols(); ++j)
                    if (dl(i, j) != 0.0) CHECK(((i == ed.v || i == ed.w) && (j == ed.v || j == ed.w)));
        }
        auto gp = g, gm = g;
        Matrix de = m_matrix_de(g, E);
        Matrix fd = (m_matrix(g, E + 1e-6) - m_matrix(g, E - 1e-6)) / 2e-6;
        CHECK((fd - de).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(eigenvalues_sym(de)[0] > 0);
    }
    auto small = single_edge(1.0, false);
    Matrix d0 = m_matrix_de(small, 1e-9);
    CHECK(d0(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-8));
    CHECK(d0(0, 1) == doctest::Approx(1.0 / 6).epsilon(1e-8));
}

TEST_CASE("dM/dl block eigenvalues") {
    auto g = single_edge(1.0, false);
    for (double E : {0.7, 2.0, 5.0, 8.0, 20.0}) {
        const double k = std::sqrt(E), c = std::cos(k), s = std::sin(k);
        auto v = eigenvalues_sym(m_matrix_dl(g, E, 0));
        CHECK(v[0] == doctest::Approx(E * (1 - std::abs(c)) / (s * s)).epsilon(1e-12));
        CHECK(v[1] == doctest::Approx(E * (1 + std::abs(c)) / (s * s)).epsilon(1e-12));
        CHECK(v[0] == doctest::Approx(E / (1 + std::abs(c))).epsilon(1e-12));
        CHECK(v[0] >= E / 2 - 1e-12);
    }
    auto q = single_edge(kPi / 2, false);
    Matrix b = m_matrix_dl(q, 1.0, 0);
    CHECK((b - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("lower bounds on dM/dl over a D0-free window") {
    std::mt19937_64 rng(7);
    const Interval J{1.0, 8.0};
    for (int r = 0; r < 10; ++r) {
        auto g = random_grid(3, rng);
        for (int i = 0; i <= 20; ++i) {
            const double E = J.lo + J.length() * i / 20;
            Matrix sum = Matrix::Zero(9, 9);
            for (int e = 0; e < 12; ++e) {
                Matrix dl = m_matrix_dl(g, E, e);
                sum += dl;
                const auto& ed = g.edges[static_cast<std::size_t>(e)];
                Matrix block(2, 2);
                block << dl(ed.v, ed.v), dl(ed.v, ed.w), dl(ed.w, ed.v), dl(ed.w, ed.w);
                CHECK(eigenvalues_sym(block)[0] >= E / 2 - 1e-12);
            }
            CHECK(eigenvalues_sym(sum)[0] >= J.lo / 2 - 1e-12);
        }
    }
}

TEST_CASE("dirichlet_forbidden_set") {
    auto a = dirichlet_forbidden_set(0.9, 1.1, {0, 15});
    REQUIRE(a.size() == 2);
    CHECK(a[0].lo == 0.0);
    CHECK(a[0].hi == 0.0);
    CHECK(a[1].lo == doctest::Approx(8.1567).epsilon(1e-4));
    CHECK(a[1].hi == doctest::Approx(12.1847).epsilon(1e-4));
    CHECK(std::abs(a[1].lo - kPi * kPi / 1.21) < 1e-12);
    auto b = dirichlet_forbidden_set(1, 1, {0, 50});
    REQUIRE(b.size() == 3);
    CHECK(b[1].lo == doctest::Approx(kPi * kPi));
    CHECK(b[1].hi == b[1].lo);
    CHECK(b[2].lo == doctest::Approx(4 * kPi * kPi));
    auto c = dirichlet_forbidden_set(1, 2, {5, 9});
    REQUIRE(c.size() == 1);
    CHECK(c[0].lo == 5.0);
    CHECK(c[0].hi == 9.0);
}

TEST_CASE("spectrum_in_window closed forms") {
    auto v = spectrum_values(single_edge(kPi / 2, false), {1, 20});
    REQUIRE(v.size() == 2);
    CHECK(v[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(16.0).epsilon(1e-12));
    auto d = spectrum_values(single_edge(1.0, true), {1, 20});
    REQUIRE(d.size() == 1);
    CHECK(d[0] == doctest::Approx(kPi * kPi).epsilon(1e-12));
    // delta coupling on both ends of a unit edge: tan(k) = 2 a k / (k^2 - a^2)
    auto g = single_edge(1.0, false);
    g.alpha = {0.5, 0.5};
    for (double E : spectrum_values(g, {0.01, 30})) {
        const double k = std::sqrt(E), a = 0.5;
        CHECK(std::abs(std::tan(k) * (k * k - a * a) - 2 * a * k) < 1e-8);
    }
    std::mt19937_64 rng(1);
    auto gr = random_grid(3, rng);
    try {
        spectrum_in_window(gr, {7, 9});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::forbidden_window);
    }
}

TEST_CASE("spectrum_in_window against the finite-difference oracle") {
    std::mt19937_64 rng(11);
    const Interval J{1.0, 8.0};
    for (int r = 0; r < 3; ++r) {
        auto g = random_grid(2, rng, 0.0, 1.0);
        auto located = spectrum_values(g, J);
        auto fd = fd_oracle(g, 1e-3).eigenvalues_in(J);
        REQUIRE(located.size() == fd.size());
        for (std::size_t i = 0; i < fd.size(); ++i) CHECK(std::abs(located[i] - fd[i]) < 5e-3);
        const auto free = g.free_vertices();
        for (double E : located) {
            Matrix m = m_matrix(g, E);
            for (std::size_t i = 0; i < free.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= g.alpha_at(free[i]);
            Eigen::JacobiSVD<Matrix> svd(m);
            CHECK(svd.singularValues()[svd.singularValues().size() - 1] <= 1e-8);
            CHECK(secular_nullity(g, E) >= 1);
        }
    }
    // negative couplings and a Dirichlet boundary
    auto g = random_grid(3, rng, -1.0, 1.0);
    for (int v : {0, 2, 6, 8}) g.dirichlet[static_cast<std::size_t>(v)] = 1;
    auto located = spectrum_values(g, {0.2, 8.0});
    auto fd = fd_oracle(g, 1e-3).eigenvalues_in({0.2, 8.0});
    REQUIRE(located.size() == fd.size());
    for (std::size_t i = 0; i < fd.size(); ++i) CHECK(std::abs(located[i] - fd[i]) < 5e-3);
}

TEST_CASE("fd_oracle") {
    const double p2 = kPi * kPi;
    auto dir = fd_oracle(single_edge(1.0, true), 1e-3).eigenvalues_in({0, 50}, 1e-12);
    CHECK(std::abs(dir.front() - p2) <= 1e-4 * p2);
    auto kir = fd_oracle(single_edge(1.0, false), 1e-3).eigenvalues_in({-1, 50}, 1e-12);
    REQUIRE(kir.size() >= 2);
    CHECK(std::abs(kir[0]) < 1e-9);
    CHECK(std::abs(kir[1] - p2) <= 1e-4 * p2);
    auto big = single_edge(1.0, false);
    big.alpha = {1e6, 1e6};
    auto b = fd_oracle(big, 1e-3).eigenvalues_in({0, 50}, 1e-12);
    CHECK(std::abs(b.front() - p2) <= 1e-3 * p2);
    CHECK_THROWS_AS(fd_oracle(single_edge(1.0, true), 0.1), Error);
    // symmetric dense form, second-order convergence
    Matrix a = fd_oracle(single_edge(1.0, true), 0.05).dense();
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    double e1 = std::abs(fd_ground(single_edge(1.0, true), 0.02) - p2);
    double e2 = std::abs(fd_ground(single_edge(1.0, true), 0.01) - p2);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("Dirichlet restriction of a window lies above the full graph") {
    std::mt19937_64 rng(17);
    for (int r = 0; r < 5; ++r) {
        auto full = random_grid(4, rng, 0.5, 0.5);
        // window {0,1,2}^2 with the vertices touching the rest set to Dirichlet
        auto sub = grid_graph(2, 3, 1.0);
        sub.l_min = 0.9;
        sub.l_max = 1.1;
        for (std::size_t v = 0; v < sub.vertices.size(); ++v) {
            sub.alpha[v] = 0.5;
            const Site x = sub.vertices[v];
            sub.dirichlet[v] = x[0] == 2 || x[1] == 2;
        }
        for (auto& e : sub.edges) {
            const Site a = sub.vertices[static_cast<std::size_t>(e.v)], b = sub.vertices[static_cast<std::size_t>(e.w)];
            for (const auto& f : full.edges)
                if (full.vertices[static_cast<std::size_t>(f.v)] == a && full.vertices[static_cast<std::size_t>(f.w)] == b) e.length = f.length;
        }
        CHECK(fd_ground(sub, 0.01) >= fd_ground(full, 0.01));
    }
}

TEST_CASE("weyl_bound") {
    auto e = single_edge(1.0, false);
    CHECK(weyl_bound(e, 10.0) == 3);
    auto w = weyl_bound_detail(e, 10.0);
    CHECK(kPi * kPi * 9 / 8 - w.c / 2 > 10.0);
    // below the ground energy
    auto shifted = single_edge(1.0, false, 2.0);
    CHECK(weyl_bound(shifted, 1.0) == 0);
    CHECK(fd_ground(shifted, 0.01) > 1.0);
    CHECK(weyl_bound(e, 0.0) >= 1);

    std::mt19937_64 rng(23);
    for (double alpha_lo : {0.0, -1.0}) {
        auto g0 = random_grid(3, rng, alpha_lo, 1.0);
        const long K = weyl_bound(g0, 30.0);
        CHECK(K > 0);
        for (int r = 0; r < 200; ++r) {
            auto g = random_grid(3, rng, alpha_lo, 1.0);
            // lumped-mass eigenvalues lie below the exact ones, so this count over-estimates
            CHECK(fd_oracle(g, g.l_min / 20).count_below(30.0) <= K);
        }
    }
}

TEST_CASE("no pole error inside a D0-free window") {
    std::mt19937_64 rng(29);
    for (int r = 0; r < 20; ++r) {
        auto g = random_grid(3, rng, 0.0, 1.0);
        CHECK_NOTHROW(spectrum_in_window(g, {1.0, 8.0}));
        CHECK_NOTHROW(de_norm_bound(g, {1.0, 8.0}));
    }
}
